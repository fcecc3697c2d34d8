#include "bpr/solvers.hpp"

#include "bpr/fft.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iostream>
#include <stdexcept>

namespace bpr {

namespace {

void require_nls_metric(const Metric& metric, const char* who) {
    if (metric.kind != MetricKind::AGM && metric.kind != MetricKind::IGM)
        throw std::invalid_argument(std::string(who) + ": only AGM and IGM have a least-squares residual form");
}

// Entries where |z| vanishes get zero Jacobian rows (the modulus is not
// differentiable there).
constexpr double kSignGuard = 1e-12;

cdouble guarded_sign(cdouble z) { return std::abs(z) < kSignGuard ? cdouble(0.0, 0.0) : z / std::abs(z); }

bool fourier_diag_domain(const Model& m) {
    return m.kind == ModelCase::FourierPtychoII || m.kind == ModelCase::ConvIV;
}

CVec to_diag_domain(const Model& m, const CVec& x, int side) {
    if (!fourier_diag_domain(m)) return x;
    return m.kind == ModelCase::ConvIV ? fft::forward1d(x) : fft::forward_sq(x, side);
}

CVec from_diag_domain(const Model& m, const CVec& x, int side) {
    if (!fourier_diag_domain(m)) return x;
    return m.kind == ModelCase::ConvIV ? fft::inverse1d(x) : fft::inverse_sq(x, side);
}

ExitWaveStack real_to_stack(const RVec& r, int J, std::size_t len) {
    ExitWaveStack out = ExitWaveStack::zeros(J, len);
    std::size_t o = 0;
    for (int j = 0; j < J; ++j)
        for (std::size_t t = 0; t < len; ++t) out.frames[j][t] = r[o++];
    return out;
}

double mean_abs2(const ExitWaveStack& z) {
    double s = 0.0;
    std::size_t n = 0;
    for (const auto& fr : z.frames) { s += norm2sq(fr); n += fr.size(); }
    return n ? s / static_cast<double>(n) : 0.0;
}

// Diagonal (or scalar) damping term applied in the diagonalizing domain.
struct Damping {
    double scalar = 0.0;          // used when diag is empty
    RVec diag;                    // Marquardt: mu0 * diag(J*J) approximation
    const Model* model = nullptr;
    int side = 0;

    CVec apply(const CVec& v) const {
        if (diag.empty()) {
            CVec out(v.size());
            for (std::size_t t = 0; t < v.size(); ++t) out[t] = scalar * v[t];
            return out;
        }
        CVec dv = to_diag_domain(*model, v, side);
        for (std::size_t t = 0; t < dv.size(); ++t) dv[t] *= diag[t];
        return from_diag_domain(*model, dv, side);
    }
};

// Conjugate gradient on the damped normal equations; returns false on
// breakdown (non-finite or nonpositive curvature).
template <typename Op>
bool cg_solve(const Op& op, const CVec& b, CVec& x, int max_iter, double rel_tol) {
    x.assign(b.size(), cdouble(0.0, 0.0));
    CVec r = b, p = b;
    double rs = norm2sq(r);
    const double bn = std::sqrt(rs);
    if (bn == 0.0) return true;
    for (int it = 0; it < max_iter; ++it) {
        CVec ap = op(p);
        double den = std::real(dot(p, ap));
        if (!(den > 0.0) || !std::isfinite(den)) return false;
        double alpha = rs / den;
        for (std::size_t t = 0; t < x.size(); ++t) {
            x[t] += alpha * p[t];
            r[t] -= alpha * ap[t];
        }
        double rs_new = norm2sq(r);
        if (!std::isfinite(rs_new)) return false;
        if (std::sqrt(rs_new) < rel_tol * bn) break;
        double beta = rs_new / rs;
        rs = rs_new;
        for (std::size_t t = 0; t < p.size(); ++t) p[t] = r[t] + beta * p[t];
    }
    return true;
}

} // namespace

RVec nls_residual(const Metric& metric, const ExitWaveStack& z, const MeasurementStack& f) {
    require_nls_metric(metric, "nls_residual");
    RVec out;
    out.reserve(z.total_len());
    for (int j = 0; j < z.count(); ++j)
        for (std::size_t t = 0; t < z.frames[j].size(); ++t) {
            double m = std::abs(z.frames[j][t]);
            out.push_back(metric.kind == MetricKind::AGM ? m - std::sqrt(f.frames[j][t])
                                                         : m * m - f.frames[j][t]);
        }
    return out;
}

ExitWaveStack jacobian_apply_u(const Metric& metric, const Model& model, const Probe& w,
                               const ExitWaveStack& z, const ComplexImage& direction) {
    require_nls_metric(metric, "jacobian_apply_u");
    ExitWaveStack av = forward(model, w, direction);
    for (int j = 0; j < av.count(); ++j)
        for (std::size_t t = 0; t < av.frames[j].size(); ++t)
            av.frames[j][t] *= metric.kind == MetricKind::AGM ? std::conj(guarded_sign(z.frames[j][t]))
                                                              : std::conj(z.frames[j][t]);
    return av;
}

ComplexImage jacobian_adjoint_apply_u(const Metric& metric, const Model& model, const Probe& w,
                                      const ExitWaveStack& z, const ExitWaveStack& r) {
    require_nls_metric(metric, "jacobian_adjoint_apply_u");
    ExitWaveStack s = r;
    for (int j = 0; j < s.count(); ++j)
        for (std::size_t t = 0; t < s.frames[j].size(); ++t)
            s.frames[j][t] *= metric.kind == MetricKind::AGM ? guarded_sign(z.frames[j][t]) : z.frames[j][t];
    return adjoint_wrt_u(model, w, s);
}

ExitWaveStack jacobian_apply_w(const Metric& metric, const Model& model, const ComplexImage& u,
                               const ExitWaveStack& z, const Probe& direction) {
    require_nls_metric(metric, "jacobian_apply_w");
    ExitWaveStack av = forward(model, direction, u);
    for (int j = 0; j < av.count(); ++j)
        for (std::size_t t = 0; t < av.frames[j].size(); ++t)
            av.frames[j][t] *= metric.kind == MetricKind::AGM ? std::conj(guarded_sign(z.frames[j][t]))
                                                              : std::conj(z.frames[j][t]);
    return av;
}

Probe jacobian_adjoint_apply_w(const Metric& metric, const Model& model, const ComplexImage& u,
                               const ExitWaveStack& z, const ExitWaveStack& r) {
    require_nls_metric(metric, "jacobian_adjoint_apply_w");
    ExitWaveStack s = r;
    for (int j = 0; j < s.count(); ++j)
        for (std::size_t t = 0; t < s.frames[j].size(); ++t)
            s.frames[j][t] *= metric.kind == MetricKind::AGM ? guarded_sign(z.frames[j][t]) : z.frames[j][t];
    return adjoint_wrt_w(model, u, s);
}

namespace {

double nls_objective(const Metric& metric, const Model& model, const Probe& w, const ComplexImage& u,
                     const MeasurementStack& f) {
    RVec r = nls_residual(metric, forward(model, w, u), f);
    double s = 0.0;
    for (double v : r) s += v * v;
    return 0.5 * s;
}

// One damped Gauss-Newton step in the sample (side_u) or probe block;
// returns whether a step was accepted.
bool gn_lm_step(const Metric& metric, const Model& model, Probe& w, ComplexImage& u,
                const MeasurementStack& f, const DampingRule* rule, bool side_u, bool reject_loop,
                bool& cg_fallback) {
    ExitWaveStack z = forward(model, w, u);
    RVec rvec = nls_residual(metric, z, f);
    double Q = 0.0;
    for (double v : rvec) Q += v * v;
    Q *= 0.5;
    ExitWaveStack rstack = real_to_stack(rvec, z.count(), z.frames.empty() ? 0 : z.frames[0].size());

    // The residual is real, so the least-squares problem lives in real
    // variables: d r = c·Re(J v) with c = 1 (modulus residual) or c = 2
    // (squared-modulus residual). The gradient and normal operator below
    // carry the Re(·) coupling; dropping it would only give linear local
    // convergence.
    const double c = metric.kind == MetricKind::IGM ? 2.0 : 1.0;
    CVec g = side_u ? jacobian_adjoint_apply_u(metric, model, w, z, rstack).data
                    : jacobian_adjoint_apply_w(metric, model, u, z, rstack).data;
    for (auto& v : g) v *= c;
    if (norm2(g) == 0.0) return false;

    Damping damp;
    damp.model = &model;
    damp.side = side_u ? model.image_side() : model.probe_side();
    double boost = 1.0;
    if (!rule) {
        damp.scalar = 1e-12;
    } else if (rule->kind == DampingKind::Marquardt) {
        damp.diag = side_u ? normal_diag_u(model, w) : normal_diag_w(model, u);
        double scale = rule->mu0 * (metric.kind == MetricKind::IGM ? mean_abs2(z) : 1.0);
        for (double& d : damp.diag) d *= scale;
    } else {
        double mu = std::pow(Q, rule->nu / 2.0);
        if (rule->kind == DampingKind::Thresholded) {
            const CVec& blk = side_u ? u.data : w.data;
            if (Q >= rule->c0 * norm2sq(blk)) mu *= rule->tau;
        }
        damp.scalar = std::max(mu, 1e-12);
    }

    auto normal_op = [&](const CVec& v) {
        CVec jjv;
        if (side_u) {
            ExitWaveStack jv = jacobian_apply_u(metric, model, w, z, ComplexImage(v, model.image_side()));
            for (auto& fr : jv.frames)
                for (auto& e : fr) e = std::real(e);
            jjv = jacobian_adjoint_apply_u(metric, model, w, z, jv).data;
        } else {
            ExitWaveStack jv = jacobian_apply_w(metric, model, u, z, Probe(v, model.probe_side()));
            for (auto& fr : jv.frames)
                for (auto& e : fr) e = std::real(e);
            jjv = jacobian_adjoint_apply_w(metric, model, u, z, jv).data;
        }
        CVec dv = damp.apply(v);
        for (std::size_t t = 0; t < jjv.size(); ++t) jjv[t] = c * c * jjv[t] + dv[t] * boost;
        return jjv;
    };

    CVec b(g.size());
    for (std::size_t t = 0; t < g.size(); ++t) b[t] = -g[t];

    const int attempts = reject_loop ? 9 : 1;
    for (int a = 0; a < attempts; ++a) {
        CVec s;
        if (!cg_solve(normal_op, b, s, 200, 1e-10)) {
            // inner solver breakdown: plain gradient fallback
            cg_fallback = true;
            RVec diag = side_u ? normal_diag_u(model, w) : normal_diag_w(model, u);
            double L = *std::max_element(diag.begin(), diag.end());
            if (metric.kind == MetricKind::IGM) L *= std::max(mean_abs2(z), 1e-12);
            s.resize(b.size());
            for (std::size_t t = 0; t < b.size(); ++t) s[t] = b[t] / std::max(L, 1e-12);
        }
        CVec cand = side_u ? u.data : w.data;
        for (std::size_t t = 0; t < cand.size(); ++t) cand[t] += s[t];
        Probe wc = w;
        ComplexImage uc = u;
        if (side_u) uc.data = cand; else wc.data = cand;
        double Qc = nls_objective(metric, model, wc, uc, f);
        if (!reject_loop || Qc <= Q * (1.0 + 1e-14) + 1e-300) {
            w = wc;
            u = uc;
            return true;
        }
        boost *= 10.0;
    }
    return false;
}

SolverReport run_gn_lm(const Model& model, const MeasurementStack& f, const SolverConfig& config,
                       const DampingRule* rule, bool update_probe, const Probe* w0,
                       const ComplexImage* u0) {
    config.validate();
    require_nls_metric(config.metric, rule ? "run_lm" : "run_gn");
    StartPoint s = default_start(model, config);
    if (w0) s.w = *w0;
    if (u0) s.u = *u0;

    bool cg_fallback = false;
    SolverReport rep;
    for (int k = 0; k < config.max_iter; ++k) {
        bool moved = gn_lm_step(config.metric, model, s.w, s.u, f, rule, true, rule != nullptr, cg_fallback);
        if (update_probe)
            moved = gn_lm_step(config.metric, model, s.w, s.u, f, rule, false, rule != nullptr, cg_fallback) || moved;

        rep.objective_history.push_back(nls_objective(config.metric, model, s.w, s.u, f));
        rep.residual_history.push_back(data_residual(model, s.w, s.u, f));
        rep.iterations_run = k + 1;
        if (!moved) break;
        if (config.tol > 0.0 && rep.residual_history.back() < config.tol) break;
    }
    if (cg_fallback) std::cerr << (rule ? "run_lm" : "run_gn") << ": inner solver breakdown, used gradient step\n";
    rep.final_w = s.w;
    rep.final_u = s.u;
    return rep;
}

// Least-squares fit of an even-scaled degree-8 polynomial to the sampled
// line-search values; returns coefficients in the t in [-1,1] variable.
std::array<double, 9> fit_poly8(const RVec& ts, const RVec& vals) {
    constexpr int D = 9;
    double ata[D][D] = {};
    double atb[D] = {};
    for (std::size_t i = 0; i < ts.size(); ++i) {
        double row[D];
        row[0] = 1.0;
        for (int d = 1; d < D; ++d) row[d] = row[d - 1] * ts[i];
        for (int a = 0; a < D; ++a) {
            atb[a] += row[a] * vals[i];
            for (int b = 0; b < D; ++b) ata[a][b] += row[a] * row[b];
        }
    }
    // Gaussian elimination with partial pivoting on the 9x9 normal equations.
    for (int c = 0; c < D; ++c) {
        int piv = c;
        for (int r = c + 1; r < D; ++r)
            if (std::abs(ata[r][c]) > std::abs(ata[piv][c])) piv = r;
        if (piv != c) {
            for (int b = 0; b < D; ++b) std::swap(ata[c][b], ata[piv][b]);
            std::swap(atb[c], atb[piv]);
        }
        double p = ata[c][c];
        if (std::abs(p) < 1e-300) p = 1e-300;
        for (int r = 0; r < D; ++r) {
            if (r == c) continue;
            double fct = ata[r][c] / p;
            for (int b = c; b < D; ++b) ata[r][b] -= fct * ata[c][b];
            atb[r] -= fct * atb[c];
        }
    }
    std::array<double, 9> coef{};
    for (int c = 0; c < D; ++c) coef[c] = atb[c] / (std::abs(ata[c][c]) < 1e-300 ? 1e-300 : ata[c][c]);
    return coef;
}

double poly_eval(const std::array<double, 9>& c, double t) {
    double v = 0.0;
    for (int d = 8; d >= 0; --d) v = v * t + c[d];
    return v;
}

double poly_d1(const std::array<double, 9>& c, double t) {
    double v = 0.0;
    for (int d = 8; d >= 1; --d) v = v * t + d * c[d];
    return v;
}

double poly_d2(const std::array<double, 9>& c, double t) {
    double v = 0.0;
    for (int d = 8; d >= 2; --d) v = v * t + d * (d - 1) * c[d];
    return v;
}

} // namespace

SolverReport run_gn(const Model& model, const MeasurementStack& f, const SolverConfig& config,
                    bool update_probe, const Probe* w0, const ComplexImage* u0) {
    return run_gn_lm(model, f, config, nullptr, update_probe, w0, u0);
}

SolverReport run_lm(const Model& model, const MeasurementStack& f, const SolverConfig& config,
                    const DampingRule& rule, bool update_probe, const Probe* w0, const ComplexImage* u0) {
    rule.validate();
    return run_gn_lm(model, f, config, &rule, update_probe, w0, u0);
}

SolverReport run_nlcg(const Model& model, const MeasurementStack& f, const SolverConfig& config,
                      const Probe* w0, const ComplexImage* u0) {
    config.validate();
    StartPoint s = default_start(model, config);
    if (w0) s.w = *w0;
    if (u0) s.u = *u0;

    const std::size_t nw = s.w.size(), nu = s.u.size();
    CVec g_prev, delta(nw + nu, cdouble(0.0, 0.0));
    SolverReport rep;

    for (int k = 0; k < config.max_iter; ++k) {
        ExitWaveStack z = forward(model, s.w, s.u);
        ExitWaveStack zres = metric_gradient(config.metric, z, f);
        CVec gw = adjoint_wrt_w(model, s.u, zres).data;
        CVec gu = adjoint_wrt_u(model, s.w, zres).data;
        CVec g(nw + nu);
        std::copy(gw.begin(), gw.end(), g.begin());
        std::copy(gu.begin(), gu.end(), g.begin() + nw);

        double gn2 = norm2sq(g);
        rep.objective_history.push_back(metric_value(config.metric, z, f));
        rep.residual_history.push_back(data_residual(model, s.w, s.u, f));
        rep.iterations_run = k + 1;
        if (gn2 == 0.0) break;

        double beta = 0.0;
        if (!g_prev.empty()) {
            double denom = norm2sq(g_prev);
            if (denom > 0.0) beta = (gn2 - std::real(dot(g, g_prev))) / denom;
            if (beta < 0.0) beta = 0.0; // restart
        }
        for (std::size_t t = 0; t < delta.size(); ++t) delta[t] = -g[t] + beta * delta[t];
        g_prev = g;

        Probe dw(CVec(delta.begin(), delta.begin() + nw), model.probe_side());
        ComplexImage du(CVec(delta.begin() + nw, delta.end()), model.image_side());
        // A(w + a dw, u + a du) = z0 + a z1 + a^2 z2 exactly, by bilinearity.
        ExitWaveStack z1 = stack_axpby(1.0, forward(model, dw, s.u), 1.0, forward(model, s.w, du));
        ExitWaveStack z2 = forward(model, dw, du);

        double alpha_max = 1.0;
        double alpha = 0.0;
        bool ok = false;
        for (int attempt = 0; attempt < 6 && !ok; ++attempt) {
            constexpr int S = 17;
            RVec ts(S), vals(S);
            bool finite = true;
            int best = 0;
            for (int i = 0; i < S; ++i) {
                double a = alpha_max * i / (S - 1);
                ts[i] = 2.0 * i / (S - 1) - 1.0;
                ExitWaveStack za = stack_axpby(1.0, z, a, z1);
                za = stack_axpby(1.0, za, a * a, z2);
                vals[i] = metric_value(config.metric, za, f);
                if (!std::isfinite(vals[i])) { finite = false; break; }
                if (vals[i] < vals[best]) best = i;
            }
            if (!finite) { alpha_max *= 0.5; continue; }
            auto coef = fit_poly8(ts, vals);
            double t = ts[best], tv = vals[best];
            double tn = t;
            for (int it = 0; it < 30; ++it) {
                double d2 = poly_d2(coef, tn);
                if (std::abs(d2) < 1e-300) break;
                tn -= poly_d1(coef, tn) / d2;
                if (!std::isfinite(tn)) { tn = t; break; }
                tn = std::clamp(tn, -1.0, 1.0);
            }
            if (std::isfinite(tn) && poly_eval(coef, tn) <= poly_eval(coef, t)) t = tn;
            double a_cand = (t + 1.0) * 0.5 * alpha_max;
            // trust the polynomial only if the true objective agrees
            ExitWaveStack za = stack_axpby(1.0, z, a_cand, z1);
            za = stack_axpby(1.0, za, a_cand * a_cand, z2);
            double true_val = metric_value(config.metric, za, f);
            alpha = (std::isfinite(true_val) && true_val <= tv) ? a_cand : alpha_max * best / (S - 1);
            ok = true;
        }
        if (!ok) throw std::runtime_error("run_nlcg: line search produced non-finite values");

        for (std::size_t t = 0; t < nw; ++t) s.w.data[t] += alpha * delta[t];
        for (std::size_t t = 0; t < nu; ++t) s.u.data[t] += alpha * delta[t + nw];
        if (config.tol > 0.0 && rep.residual_history.back() < config.tol) break;
    }

    rep.final_w = s.w;
    rep.final_u = s.u;
    return rep;
}

} // namespace bpr
