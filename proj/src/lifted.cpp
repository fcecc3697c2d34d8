#include "bpr/lifted.hpp"

#include "bpr/core.hpp"
#include "bpr/fft.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace bpr::lifted {

namespace {

CMat column_dft(const CMat& B) {
    CMat out(B.rows, B.cols);
    CVec col(B.rows);
    const double scale = std::sqrt(static_cast<double>(B.rows));
    for (int j = 0; j < B.cols; ++j) {
        for (int i = 0; i < B.rows; ++i) col[i] = B.at(i, j);
        CVec fc = fft::forward1d(col);
        for (int i = 0; i < B.rows; ++i) out.at(i, j) = scale * fc[i];
    }
    return out;
}

CVec mat_vec(const CMat& A, const CVec& x) {
    CVec y(A.rows, cdouble(0.0, 0.0));
    for (int i = 0; i < A.rows; ++i)
        for (int j = 0; j < A.cols; ++j) y[i] += A.at(i, j) * x[j];
    return y;
}

// <b b*, H> = b* H b, real for Hermitian H.
double rank1_inner(const CMat& H, const CVec& b) {
    cdouble s(0.0, 0.0);
    const int k = H.rows;
    for (int i = 0; i < k; ++i) {
        cdouble hb(0.0, 0.0);
        for (int j = 0; j < k; ++j) hb += H.at(i, j) * b[j];
        s += std::conj(b[i]) * hb;
    }
    if (std::abs(s.imag()) > 1e-10 * (1.0 + std::abs(s.real())))
        throw std::runtime_error("lifted: rank-one inner product is not real");
    return s.real();
}

// Dense Hermitian Cholesky factorization and solve, used for T1/T2.
struct Cholesky {
    int n = 0;
    CVec L; // row-major lower triangle

    explicit Cholesky(const CVec& A, int dim) : n(dim), L(A) {
        for (int j = 0; j < n; ++j) {
            for (int i = j; i < n; ++i) {
                cdouble s = L[std::size_t(i) * n + j];
                for (int p = 0; p < j; ++p)
                    s -= L[std::size_t(i) * n + p] * std::conj(L[std::size_t(j) * n + p]);
                if (i == j) {
                    double d = s.real();
                    if (!(d > 0.0)) throw std::runtime_error("lifted: normal matrix not positive definite");
                    L[std::size_t(j) * n + j] = std::sqrt(d);
                } else {
                    L[std::size_t(i) * n + j] = s / L[std::size_t(j) * n + j].real();
                }
            }
        }
    }

    CVec solve(CVec b) const {
        for (int i = 0; i < n; ++i) {
            for (int p = 0; p < i; ++p) b[i] -= L[std::size_t(i) * n + p] * b[p];
            b[i] /= L[std::size_t(i) * n + i].real();
        }
        for (int i = n - 1; i >= 0; --i) {
            for (int p = i + 1; p < n; ++p) b[i] -= std::conj(L[std::size_t(p) * n + i]) * b[p];
            b[i] /= L[std::size_t(i) * n + i].real();
        }
        return b;
    }
};

// Cyclic Jacobi on a real symmetric matrix; V accumulates rotations.
void jacobi_real(std::vector<double>& A, std::vector<double>& V, int n) {
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) V[std::size_t(i) * n + j] = (i == j) ? 1.0 : 0.0;
    double scale = 0.0;
    for (int i = 0; i < n; ++i) scale = std::max(scale, std::abs(A[std::size_t(i) * n + i]));
    scale = std::max(scale, 1.0);
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += A[std::size_t(p) * n + q] * A[std::size_t(p) * n + q];
        if (std::sqrt(off) < 1e-12 * scale) break;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) {
                double apq = A[std::size_t(p) * n + q];
                if (std::abs(apq) < 1e-300) continue;
                double app = A[std::size_t(p) * n + p], aqq = A[std::size_t(q) * n + q];
                double theta = (aqq - app) / (2.0 * apq);
                double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
                for (int i = 0; i < n; ++i) {
                    double aip = A[std::size_t(i) * n + p], aiq = A[std::size_t(i) * n + q];
                    A[std::size_t(i) * n + p] = c * aip - s * aiq;
                    A[std::size_t(i) * n + q] = s * aip + c * aiq;
                }
                for (int i = 0; i < n; ++i) {
                    double api = A[std::size_t(p) * n + i], aqi = A[std::size_t(q) * n + i];
                    A[std::size_t(p) * n + i] = c * api - s * aqi;
                    A[std::size_t(q) * n + i] = s * api + c * aqi;
                }
                for (int i = 0; i < n; ++i) {
                    double vip = V[std::size_t(i) * n + p], viq = V[std::size_t(i) * n + q];
                    V[std::size_t(i) * n + p] = c * vip - s * viq;
                    V[std::size_t(i) * n + q] = s * vip + c * viq;
                }
            }
    }
}

CMat symmetrize_checked(const CMat& X) {
    if (X.rows != X.cols) throw std::invalid_argument("lifted: matrix must be square");
    const int k = X.rows;
    double asym = 0.0, scale = 0.0;
    CMat S(k, k);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) {
            cdouble a = X.at(i, j), b = std::conj(X.at(j, i));
            asym = std::max(asym, std::abs(a - b));
            scale = std::max(scale, std::abs(a));
            S.at(i, j) = 0.5 * (a + b);
        }
    if (asym > 1e-10 * std::max(1.0, scale))
        throw std::invalid_argument("lifted: matrix is not Hermitian within tolerance");
    return S;
}

} // namespace

void hermitian_eig(const CMat& X, RVec& evals, CMat& evecs) {
    CMat S = symmetrize_checked(X);
    const int k = S.rows, n2 = 2 * k;
    // real symmetric embedding [[Re, -Im], [Im, Re]]
    std::vector<double> E(std::size_t(n2) * n2), V(std::size_t(n2) * n2);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) {
            double re = S.at(i, j).real(), im = S.at(i, j).imag();
            E[std::size_t(i) * n2 + j] = re;
            E[std::size_t(i + k) * n2 + j + k] = re;
            E[std::size_t(i) * n2 + j + k] = -im;
            E[std::size_t(i + k) * n2 + j] = im;
        }
    jacobi_real(E, V, n2);

    std::vector<int> idx(n2);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(),
              [&](int a, int b) { return E[std::size_t(a) * n2 + a] > E[std::size_t(b) * n2 + b]; });

    // Each complex eigenvector appears twice (v and iv); pick a basis greedily.
    evals.clear();
    evecs = CMat(k, k);
    std::vector<CVec> kept;
    for (int r = 0; r < n2 && static_cast<int>(kept.size()) < k; ++r) {
        int c = idx[r];
        CVec cand(k);
        for (int i = 0; i < k; ++i) cand[i] = cdouble(V[std::size_t(i) * n2 + c], V[std::size_t(i + k) * n2 + c]);
        for (const auto& u : kept) {
            cdouble proj = dot(u, cand);
            for (int i = 0; i < k; ++i) cand[i] -= proj * u[i];
        }
        double nr = norm2(cand);
        if (nr < 0.5) continue; // duplicate of an accepted vector (i x it)
        for (auto& v : cand) v /= nr;
        evals.push_back(E[std::size_t(c) * n2 + c]);
        kept.push_back(std::move(cand));
    }
    if (static_cast<int>(kept.size()) != k) throw std::runtime_error("lifted: eigenbasis recovery failed");
    for (int j = 0; j < k; ++j)
        for (int i = 0; i < k; ++i) evecs.at(i, j) = kept[j][i];
}

CMat psd_project(const CMat& X) {
    RVec evals;
    CMat U;
    hermitian_eig(X, evals, U);
    const int k = X.rows;
    CMat out(k, k);
    for (int a = 0; a < k; ++a) {
        double lam = std::max(evals[a], 0.0);
        if (lam == 0.0) continue;
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j) out.at(i, j) += lam * U.at(i, a) * std::conj(U.at(j, a));
    }
    return out;
}

LiftedInstance build_instance(const CVec& h, const CVec& m, const CMat& B, const CMat& C) {
    if (B.rows != C.rows) throw std::invalid_argument("build_instance: subspace row counts differ");
    if (static_cast<int>(h.size()) != B.cols || static_cast<int>(m.size()) != C.cols)
        throw std::invalid_argument("build_instance: coefficient sizes do not match subspaces");
    LiftedInstance inst;
    inst.Bhat = column_dft(B);
    inst.Chat = column_dft(C);
    CVec bh = mat_vec(inst.Bhat, h), cm = mat_vec(inst.Chat, m);
    inst.fbar.resize(B.rows);
    for (int l = 0; l < B.rows; ++l) inst.fbar[l] = std::norm(bh[l] * cm[l]);
    return inst;
}

std::pair<double, double> project_hyperbolic(double p, double q, double fbar) {
    if (fbar <= 0.0) {
        // union of the closed first quadrant and the v1 = 0 axis
        double d_quad = 0.0;
        double v1 = std::max(p, 0.0), v2 = std::max(q, 0.0);
        d_quad = (v1 - p) * (v1 - p) + (v2 - q) * (v2 - q);
        double d_axis = p * p;
        return d_axis < d_quad ? std::make_pair(0.0, q) : std::make_pair(v1, v2);
    }
    if (p > 0.0 && p * q >= fbar) return {p, q};
    // boundary v2 = fbar / v1, v1 > 0: coarse grid then Newton refinement
    auto dist2 = [&](double x) {
        double d1 = x - p, d2 = fbar / x - q;
        return 0.5 * (d1 * d1 + d2 * d2);
    };
    double s = std::sqrt(fbar);
    double lo = s * 1e-6, hi = std::max({s, std::abs(p), std::abs(q), 1.0}) * 1e3;
    double best = s, bestv = dist2(s);
    const int G = 200;
    for (int i = 0; i <= G; ++i) {
        double x = lo * std::pow(hi / lo, static_cast<double>(i) / G);
        double v = dist2(x);
        if (v < bestv) { bestv = v; best = x; }
    }
    double x = best;
    for (int it = 0; it < 60; ++it) {
        double r = fbar / x;
        double g = (x - p) - (r - q) * r / x;
        double hess = 1.0 + r * (3.0 * r - 2.0 * q) / (x * x);
        if (!(std::abs(hess) > 1e-300)) break;
        double step = g / hess;
        double xn = x - step;
        if (!(xn > 0.0) || !std::isfinite(xn)) break;
        if (dist2(xn) <= dist2(x)) x = xn; else break;
        if (std::abs(step) < 1e-15 * (1.0 + x)) break;
    }
    if (dist2(x) > bestv) x = best;
    return {x, fbar / x};
}

LiftedSolution solve_lifted(const LiftedInstance& inst, const SolverConfig& config) {
    config.validate();
    const int n = inst.Bhat.rows, k1 = inst.Bhat.cols, k2 = inst.Chat.cols;
    if (k1 > 16 || k2 > 16) throw std::invalid_argument("solve_lifted: subspace dimension capped at 16");
    if (inst.Chat.rows != n || static_cast<int>(inst.fbar.size()) != n)
        throw std::invalid_argument("solve_lifted: inconsistent instance shapes");
    const double b1 = config.beta1, b2 = config.beta2;

    // rows of Bhat / Chat and their rank-one vectorizations
    std::vector<CVec> brows(n, CVec(k1)), crows(n, CVec(k2));
    for (int l = 0; l < n; ++l) {
        for (int j = 0; j < k1; ++j) brows[l][j] = std::conj(inst.Bhat.at(l, j)); // b_l with b_l^* the row
        for (int j = 0; j < k2; ++j) crows[l][j] = std::conj(inst.Chat.at(l, j));
    }

    auto build_T = [&](const std::vector<CVec>& rows, int k) {
        const int kk = k * k;
        CVec T(std::size_t(kk) * kk, cdouble(0.0, 0.0));
        CVec v(kk);
        for (int l = 0; l < n; ++l) {
            for (int i = 0; i < k; ++i)
                for (int j = 0; j < k; ++j) v[std::size_t(i) * k + j] = rows[l][i] * std::conj(rows[l][j]);
            for (int p = 0; p < kk; ++p)
                for (int q = 0; q < kk; ++q) T[std::size_t(p) * kk + q] += b1 * v[p] * std::conj(v[q]);
        }
        for (int p = 0; p < kk; ++p) T[std::size_t(p) * kk + p] += b2;
        return Cholesky(T, kk);
    };
    Cholesky T1 = build_T(brows, k1), T2 = build_T(crows, k2);

    CMat H(k1, k1), Hp(k1, k1), L3(k1, k1);
    CMat M(k2, k2), Mp(k2, k2), L4(k2, k2);
    RVec v1(n), v2(n), l1(n, 0.0), l2(n, 0.0);
    for (int l = 0; l < n; ++l) v1[l] = v2[l] = std::sqrt(inst.fbar[l]);

    auto update_factor = [&](CMat& X, const CMat& Xp, const CMat& Lam, const std::vector<CVec>& rows,
                             const RVec& v, const RVec& lam, const Cholesky& T, int k) {
        CVec rhs(std::size_t(k) * k, cdouble(0.0, 0.0));
        for (int l = 0; l < n; ++l) {
            double c = b1 * (v[l] + lam[l]);
            for (int i = 0; i < k; ++i)
                for (int j = 0; j < k; ++j) rhs[std::size_t(i) * k + j] += c * rows[l][i] * std::conj(rows[l][j]);
        }
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j) {
                rhs[std::size_t(i) * k + j] += b2 * (Xp.at(i, j) + Lam.at(i, j));
                if (i == j) rhs[std::size_t(i) * k + j] -= 1.0;
            }
        X.data = T.solve(rhs);
    };

    SolverReport rep;
    for (int it = 0; it < config.max_iter; ++it) {
        update_factor(H, Hp, L3, brows, v1, l1, T1, k1);
        update_factor(M, Mp, L4, crows, v2, l2, T2, k2);

        CMat Ht(k1, k1), Mt(k2, k2);
        for (std::size_t t = 0; t < Ht.data.size(); ++t) Ht.data[t] = H.data[t] - L3.data[t];
        for (std::size_t t = 0; t < Mt.data.size(); ++t) Mt.data[t] = M.data[t] - L4.data[t];
        Hp = psd_project(Ht);
        Mp = psd_project(Mt);

        double prim2 = 0.0;
        for (int l = 0; l < n; ++l) {
            double a = rank1_inner(H, brows[l]);
            double b = rank1_inner(M, crows[l]);
            auto [x, y] = project_hyperbolic(a - l1[l], b - l2[l], inst.fbar[l]);
            v1[l] = x;
            v2[l] = y;
            l1[l] += v1[l] - a;
            l2[l] += v2[l] - b;
            prim2 += (v1[l] - a) * (v1[l] - a) + (v2[l] - b) * (v2[l] - b);
        }
        for (std::size_t t = 0; t < Hp.data.size(); ++t) {
            cdouble d = Hp.data[t] - H.data[t];
            L3.data[t] += d;
            prim2 += std::norm(d);
        }
        for (std::size_t t = 0; t < Mp.data.size(); ++t) {
            cdouble d = Mp.data[t] - M.data[t];
            L4.data[t] += d;
            prim2 += std::norm(d);
        }

        double tr = 0.0;
        for (int i = 0; i < k1; ++i) tr += H.at(i, i).real();
        for (int i = 0; i < k2; ++i) tr += M.at(i, i).real();
        rep.objective_history.push_back(tr);
        rep.residual_history.push_back(std::sqrt(prim2));
        rep.iterations_run = it + 1;
        if (config.tol > 0.0 && rep.residual_history.back() < config.tol) break;
    }

    LiftedSolution sol;
    sol.H = Hp;
    sol.M = Mp;
    RVec eh, em;
    CMat Uh, Um;
    hermitian_eig(Hp, eh, Uh);
    hermitian_eig(Mp, em, Um);
    sol.h.resize(k1);
    sol.m.resize(k2);
    double sh = std::sqrt(std::max(eh.empty() ? 0.0 : eh[0], 0.0));
    double sm = std::sqrt(std::max(em.empty() ? 0.0 : em[0], 0.0));
    for (int i = 0; i < k1; ++i) sol.h[i] = sh * Uh.at(i, 0);
    for (int i = 0; i < k2; ++i) sol.m[i] = sm * Um.at(i, 0);
    sol.report = rep;
    return sol;
}

} // namespace bpr::lifted
