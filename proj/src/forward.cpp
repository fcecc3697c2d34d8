#include "bpr/forward.hpp"

#include "bpr/fft.hpp"

#include <cmath>
#include <stdexcept>

namespace bpr {

namespace {

void check_shapes(const Model& model, const Probe& w, const ComplexImage& u) {
    if (w.size() != model.probe_len()) throw std::invalid_argument("forward: probe size mismatch");
    if (u.size() != model.sample_len()) throw std::invalid_argument("forward: sample size mismatch");
}

void check_stack(const Model& model, const ExitWaveStack& z) {
    if (z.count() != model.frames()) throw std::invalid_argument("forward: frame count mismatch");
    for (const auto& f : z.frames)
        if (f.size() != model.frame_len()) throw std::invalid_argument("forward: frame length mismatch");
}

long long frog_shift(const Model& model, int j) { return static_cast<long long>(j) * model.shift_step; }

// Case IV helpers: the exit wave in the DFT domain of the convolution,
// Psi_hat = sqrt(n) Fw o Fu, regardless of the outer transform.
CVec conv_z_to_fourier(const Model& model, const CVec& z) {
    return model.conv_fourier ? z : fft::forward1d(z);
}
CVec conv_fourier_to_z(const Model& model, const CVec& zf) {
    return model.conv_fourier ? zf : fft::inverse1d(zf);
}

} // namespace

double stack_norm2sq(const ExitWaveStack& a) {
    double s = 0.0;
    for (const auto& f : a.frames) s += norm2sq(f);
    return s;
}

cdouble stack_dot(const ExitWaveStack& a, const ExitWaveStack& b) {
    cdouble s(0.0, 0.0);
    for (int j = 0; j < a.count(); ++j) s += dot(a.frames[j], b.frames[j]);
    return s;
}

ExitWaveStack stack_axpby(double alpha, const ExitWaveStack& a, double beta, const ExitWaveStack& b) {
    ExitWaveStack out = a;
    for (int j = 0; j < a.count(); ++j)
        for (std::size_t t = 0; t < a.frames[j].size(); ++t)
            out.frames[j][t] = alpha * a.frames[j][t] + beta * b.frames[j][t];
    return out;
}

double stack_dist(const ExitWaveStack& a, const ExitWaveStack& b) {
    double s = 0.0;
    for (int j = 0; j < a.count(); ++j)
        for (std::size_t t = 0; t < a.frames[j].size(); ++t) s += std::norm(a.frames[j][t] - b.frames[j][t]);
    return std::sqrt(s);
}

ExitWaveStack forward(const Model& model, const Probe& w, const ComplexImage& u) {
    check_shapes(model, w, u);
    const int J = model.frames();
    ExitWaveStack out = ExitWaveStack::zeros(J, model.frame_len());

    switch (model.kind) {
        case ModelCase::PtychoI: {
            const auto& g = model.geometry;
#pragma omp parallel for schedule(static)
            for (int j = 0; j < J; ++j) {
                CVec fr = extract_frame(u.data, g, j);
                for (std::size_t t = 0; t < fr.size(); ++t) fr[t] *= w.data[t];
                fft::forward2d(fr.data(), out.frames[j].data(), g.frame_side, g.frame_side);
            }
            break;
        }
        case ModelCase::FourierPtychoII: {
            const auto& g = model.geometry;
            const CVec fu = fft::forward_sq(u.data, g.image_side);
            const CVec fw = fft::forward_sq(w.data, g.frame_side);
#pragma omp parallel for schedule(static)
            for (int j = 0; j < J; ++j) {
                CVec fr = extract_frame(fu, g, j);
                for (std::size_t t = 0; t < fr.size(); ++t) fr[t] *= fw[t];
                fft::inverse2d(fr.data(), out.frames[j].data(), g.frame_side, g.frame_side);
            }
            break;
        }
        case ModelCase::FrogIII: {
#pragma omp parallel for schedule(static)
            for (int j = 0; j < J; ++j) {
                CVec su = cyclic_shift(u.data, frog_shift(model, j));
                for (std::size_t t = 0; t < su.size(); ++t) su[t] *= w.data[t];
                fft::forward2d(su.data(), out.frames[j].data(), 1, static_cast<int>(su.size()));
            }
            break;
        }
        case ModelCase::ConvIV: {
            const double rootn = std::sqrt(static_cast<double>(model.sample_len()));
            CVec fw = fft::forward1d(w.data);
            const CVec fu = fft::forward1d(u.data);
            for (std::size_t t = 0; t < fw.size(); ++t) fw[t] *= rootn * fu[t];
            out.frames[0] = conv_fourier_to_z(model, fw);
            break;
        }
    }
    return out;
}

ComplexImage adjoint_wrt_u(const Model& model, const Probe& w, const ExitWaveStack& z) {
    check_stack(model, z);
    if (w.size() != model.probe_len()) throw std::invalid_argument("adjoint_wrt_u: probe size mismatch");
    const int J = model.frames();
    ComplexImage out = ComplexImage::zeros(model.image_side());

    switch (model.kind) {
        case ModelCase::PtychoI: {
            const auto& g = model.geometry;
            std::vector<CVec> tmp(J);
#pragma omp parallel for schedule(static)
            for (int j = 0; j < J; ++j) {
                tmp[j] = fft::inverse_sq(z.frames[j], g.frame_side);
                for (std::size_t t = 0; t < tmp[j].size(); ++t) tmp[j][t] *= std::conj(w.data[t]);
            }
            for (int j = 0; j < J; ++j) embed_frame_add(tmp[j], g, j, out.data); // deterministic sum order
            break;
        }
        case ModelCase::FourierPtychoII: {
            const auto& g = model.geometry;
            const CVec fw = fft::forward_sq(w.data, g.frame_side);
            std::vector<CVec> tmp(J);
#pragma omp parallel for schedule(static)
            for (int j = 0; j < J; ++j) {
                tmp[j] = fft::forward_sq(z.frames[j], g.frame_side);
                for (std::size_t t = 0; t < tmp[j].size(); ++t) tmp[j][t] *= std::conj(fw[t]);
            }
            CVec acc(model.sample_len());
            for (int j = 0; j < J; ++j) embed_frame_add(tmp[j], g, j, acc);
            out.data = fft::inverse_sq(acc, g.image_side);
            break;
        }
        case ModelCase::FrogIII: {
            std::vector<CVec> tmp(J);
#pragma omp parallel for schedule(static)
            for (int j = 0; j < J; ++j) {
                CVec iz = fft::inverse1d(z.frames[j]);
                for (std::size_t t = 0; t < iz.size(); ++t) iz[t] *= std::conj(w.data[t]);
                tmp[j] = cyclic_shift(iz, -frog_shift(model, j));
            }
            for (int j = 0; j < J; ++j)
                for (std::size_t t = 0; t < out.data.size(); ++t) out.data[t] += tmp[j][t];
            break;
        }
        case ModelCase::ConvIV: {
            const double rootn = std::sqrt(static_cast<double>(model.sample_len()));
            const CVec fw = fft::forward1d(w.data);
            CVec zf = conv_z_to_fourier(model, z.frames[0]);
            for (std::size_t t = 0; t < zf.size(); ++t) zf[t] *= rootn * std::conj(fw[t]);
            out.data = fft::inverse1d(zf);
            break;
        }
    }
    return out;
}

Probe adjoint_wrt_w(const Model& model, const ComplexImage& u, const ExitWaveStack& z) {
    check_stack(model, z);
    if (u.size() != model.sample_len()) throw std::invalid_argument("adjoint_wrt_w: sample size mismatch");
    const int J = model.frames();
    Probe out = Probe::zeros(model.probe_side());

    switch (model.kind) {
        case ModelCase::PtychoI: {
            const auto& g = model.geometry;
            std::vector<CVec> tmp(J);
#pragma omp parallel for schedule(static)
            for (int j = 0; j < J; ++j) {
                CVec fr = extract_frame(u.data, g, j);
                CVec iz = fft::inverse_sq(z.frames[j], g.frame_side);
                for (std::size_t t = 0; t < iz.size(); ++t) iz[t] *= std::conj(fr[t]);
                tmp[j] = std::move(iz);
            }
            for (int j = 0; j < J; ++j)
                for (std::size_t t = 0; t < out.data.size(); ++t) out.data[t] += tmp[j][t];
            break;
        }
        case ModelCase::FourierPtychoII: {
            const auto& g = model.geometry;
            const CVec fu = fft::forward_sq(u.data, g.image_side);
            std::vector<CVec> tmp(J);
#pragma omp parallel for schedule(static)
            for (int j = 0; j < J; ++j) {
                CVec fr = extract_frame(fu, g, j);
                CVec fz = fft::forward_sq(z.frames[j], g.frame_side);
                for (std::size_t t = 0; t < fz.size(); ++t) fz[t] *= std::conj(fr[t]);
                tmp[j] = std::move(fz);
            }
            CVec acc(model.probe_len());
            for (int j = 0; j < J; ++j)
                for (std::size_t t = 0; t < acc.size(); ++t) acc[t] += tmp[j][t];
            out.data = fft::inverse_sq(acc, g.frame_side);
            break;
        }
        case ModelCase::FrogIII: {
            std::vector<CVec> tmp(J);
#pragma omp parallel for schedule(static)
            for (int j = 0; j < J; ++j) {
                CVec su = cyclic_shift(u.data, frog_shift(model, j));
                CVec iz = fft::inverse1d(z.frames[j]);
                for (std::size_t t = 0; t < iz.size(); ++t) iz[t] *= std::conj(su[t]);
                tmp[j] = std::move(iz);
            }
            for (int j = 0; j < J; ++j)
                for (std::size_t t = 0; t < out.data.size(); ++t) out.data[t] += tmp[j][t];
            break;
        }
        case ModelCase::ConvIV: {
            const double rootn = std::sqrt(static_cast<double>(model.sample_len()));
            const CVec fu = fft::forward1d(u.data);
            CVec zf = conv_z_to_fourier(model, z.frames[0]);
            for (std::size_t t = 0; t < zf.size(); ++t) zf[t] *= rootn * std::conj(fu[t]);
            out.data = fft::inverse1d(zf);
            break;
        }
    }
    return out;
}

RVec normal_diag_u(const Model& model, const Probe& w) {
    RVec diag(model.sample_len(), 0.0);
    switch (model.kind) {
        case ModelCase::PtychoI: {
            const auto& g = model.geometry;
            RVec w2(w.size());
            for (std::size_t t = 0; t < w.size(); ++t) w2[t] = std::norm(w.data[t]);
            for (int j = 0; j < g.frames(); ++j) embed_frame_add(w2, g, j, diag);
            break;
        }
        case ModelCase::FourierPtychoII: {
            const auto& g = model.geometry;
            const CVec fw = fft::forward_sq(w.data, g.frame_side);
            RVec w2(fw.size());
            for (std::size_t t = 0; t < fw.size(); ++t) w2[t] = std::norm(fw[t]);
            for (int j = 0; j < g.frames(); ++j) embed_frame_add(w2, g, j, diag);
            break;
        }
        case ModelCase::FrogIII: {
            RVec w2(w.size());
            for (std::size_t t = 0; t < w.size(); ++t) w2[t] = std::norm(w.data[t]);
            for (int j = 0; j < model.frames(); ++j) {
                RVec sh = cyclic_shift(w2, -frog_shift(model, j));
                for (std::size_t t = 0; t < diag.size(); ++t) diag[t] += sh[t];
            }
            break;
        }
        case ModelCase::ConvIV: {
            const double n = static_cast<double>(model.sample_len());
            const CVec fw = fft::forward1d(w.data);
            for (std::size_t t = 0; t < fw.size(); ++t) diag[t] = n * std::norm(fw[t]);
            break;
        }
    }
    return diag;
}

RVec normal_diag_w(const Model& model, const ComplexImage& u) {
    RVec diag(model.probe_len(), 0.0);
    switch (model.kind) {
        case ModelCase::PtychoI: {
            const auto& g = model.geometry;
            RVec u2(u.size());
            for (std::size_t t = 0; t < u.size(); ++t) u2[t] = std::norm(u.data[t]);
            for (int j = 0; j < g.frames(); ++j) {
                RVec fr = extract_frame(u2, g, j);
                for (std::size_t t = 0; t < diag.size(); ++t) diag[t] += fr[t];
            }
            break;
        }
        case ModelCase::FourierPtychoII: {
            const auto& g = model.geometry;
            const CVec fu = fft::forward_sq(u.data, g.image_side);
            RVec u2(fu.size());
            for (std::size_t t = 0; t < fu.size(); ++t) u2[t] = std::norm(fu[t]);
            for (int j = 0; j < g.frames(); ++j) {
                RVec fr = extract_frame(u2, g, j);
                for (std::size_t t = 0; t < diag.size(); ++t) diag[t] += fr[t];
            }
            break;
        }
        case ModelCase::FrogIII: {
            RVec u2(u.size());
            for (std::size_t t = 0; t < u.size(); ++t) u2[t] = std::norm(u.data[t]);
            for (int j = 0; j < model.frames(); ++j) {
                RVec sh = cyclic_shift(u2, frog_shift(model, j));
                for (std::size_t t = 0; t < diag.size(); ++t) diag[t] += sh[t];
            }
            break;
        }
        case ModelCase::ConvIV: {
            const double n = static_cast<double>(model.sample_len());
            const CVec fu = fft::forward1d(u.data);
            for (std::size_t t = 0; t < fu.size(); ++t) diag[t] = n * std::norm(fu[t]);
            break;
        }
    }
    return diag;
}

namespace {

bool fourier_diag(const Model& model) {
    return model.kind == ModelCase::FourierPtychoII || model.kind == ModelCase::ConvIV;
}

CVec apply_diag_domain(const Model& model, const CVec& x, int side, const RVec& diag, double alpha, bool solve) {
    if (!fourier_diag(model)) {
        CVec out(x.size());
        for (std::size_t t = 0; t < x.size(); ++t)
            out[t] = solve ? x[t] / (diag[t] + alpha) : x[t] * (diag[t] + alpha);
        return out;
    }
    CVec fx = (model.kind == ModelCase::ConvIV) ? fft::forward1d(x) : fft::forward_sq(x, side);
    for (std::size_t t = 0; t < fx.size(); ++t)
        fx[t] = solve ? fx[t] / (diag[t] + alpha) : fx[t] * (diag[t] + alpha);
    return (model.kind == ModelCase::ConvIV) ? fft::inverse1d(fx) : fft::inverse_sq(fx, side);
}

} // namespace

ComplexImage normal_wrt_u(const Model& model, const Probe& w, const ComplexImage& u) {
    check_shapes(model, w, u);
    ComplexImage out = u;
    out.data = apply_diag_domain(model, u.data, model.image_side(), normal_diag_u(model, w), 0.0, false);
    return out;
}

Probe normal_wrt_w(const Model& model, const ComplexImage& u, const Probe& w) {
    check_shapes(model, w, u);
    Probe out = w;
    out.data = apply_diag_domain(model, w.data, model.probe_side(), normal_diag_w(model, u), 0.0, false);
    return out;
}

ComplexImage solve_normal_u(const Model& model, const Probe& w, const ComplexImage& rhs, double alpha) {
    ComplexImage out = rhs;
    out.data = apply_diag_domain(model, rhs.data, model.image_side(), normal_diag_u(model, w), alpha, true);
    return out;
}

Probe solve_normal_w(const Model& model, const ComplexImage& u, const Probe& rhs, double alpha) {
    Probe out = rhs;
    out.data = apply_diag_domain(model, rhs.data, model.probe_side(), normal_diag_w(model, u), alpha, true);
    return out;
}

MeasurementStack intensity(const ExitWaveStack& z) {
    MeasurementStack out;
    out.frames.resize(z.count());
    for (int j = 0; j < z.count(); ++j) {
        out.frames[j].resize(z.frames[j].size());
        for (std::size_t t = 0; t < z.frames[j].size(); ++t) out.frames[j][t] = std::norm(z.frames[j][t]);
    }
    return out;
}

MeasurementStack simulate_poisson(const MeasurementStack& f, double scale, std::uint64_t seed) {
    if (!(scale > 0.0)) throw std::invalid_argument("simulate_poisson: scale must be positive");
    Rng rng(seed);
    MeasurementStack out = f;
    for (auto& frame : out.frames)
        for (auto& v : frame) {
            if (v < 0.0) throw std::invalid_argument("simulate_poisson: negative intensity");
            v = static_cast<double>(rng.poisson(scale * v)) / scale;
        }
    return out;
}

} // namespace bpr
