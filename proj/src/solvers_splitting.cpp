#include "bpr/solvers.hpp"

#include "bpr/fft.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <stdexcept>

namespace bpr {

namespace {

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

void clip_probe(Probe& w, double C) {
    if (C > 0.0) w.data = project_amplitude(w.data, C);
    if (w.fourier_support) w = project_fourier_support(w);
}

void clip_sample(ComplexImage& u, double C) {
    if (C > 0.0) u.data = project_amplitude(u.data, C);
}

double sqrt_f_norm(const MeasurementStack& f) {
    double s = 0.0;
    for (const auto& fr : f.frames)
        for (double v : fr) s += v;
    return std::sqrt(s);
}

ExitWaveStack stack_sub(const ExitWaveStack& a, const ExitWaveStack& b) {
    return stack_axpby(1.0, a, -1.0, b);
}

// Block-Lipschitz scales: each partial gradient has a diagonal Hessian
// (sum of squared moduli of the other factor over frames); the maximum of
// that diagonal is the exact Lipschitz constant of the block gradient.
double phebie_d1k(const Model& model, const ComplexImage& u, double d1) {
    RVec diag = normal_diag_w(model, u);
    return d1 * *std::max_element(diag.begin(), diag.end());
}

double phebie_d2k(const Model& model, const Probe& w, double d2) {
    RVec diag = normal_diag_u(model, w);
    return d2 * *std::max_element(diag.begin(), diag.end());
}

// eqZ-3 / eqZ-4 gradient projection on the modulus, warm-started at the
// previous iterate's modulus.
ExitWaveStack admm_z_update(const Metric& metric, double beta, const ExitWaveStack& zplus,
                            const ExitWaveStack& zprev, const MeasurementStack& f) {
    if (metric.kind != MetricKind::pAGM && metric.kind != MetricKind::pIPM)
        return prox(metric, beta, zplus, f);
    const double eps = metric.epsilon;
    const double delta = 1.0 / (1.0 + beta);
    ExitWaveStack out = zplus;
#pragma omp parallel for schedule(static)
    for (int j = 0; j < out.count(); ++j) {
        for (std::size_t t = 0; t < out.frames[j].size(); ++t) {
            double vmod = std::abs(zplus.frames[j][t]);
            double fe = f.frames[j][t] + eps;
            double x = std::abs(zprev.frames[j][t]);
            for (int l = 0; l < 20; ++l) {
                double pull = (metric.kind == MetricKind::pIPM) ? fe / (x * x + eps)
                                                                : std::sqrt(fe) / std::sqrt(x * x + eps);
                x = std::max(0.0, x - delta * ((1.0 + beta - pull) * x - beta * vmod));
            }
            out.frames[j][t] = x * csign(zplus.frames[j][t]);
        }
    }
    return out;
}

} // namespace

SolverReport run_phebie(const Model& model, const MeasurementStack& f, const SolverConfig& config,
                        const Probe* w0, const ComplexImage* u0) {
    config.validate();
    StartPoint s = default_start(model, config);
    if (w0) s.w = *w0;
    if (u0) s.u = *u0;

    ExitWaveStack psi = project_modulus(forward(model, s.w, s.u), f);
    const double fscale = std::max(sqrt_f_norm(f), 1e-300);
    SolverReport rep;
    double prev_obj = 0.0;

    for (int k = 0; k < config.max_iter; ++k) {
        double d1k = phebie_d1k(model, s.u, config.d1);
        if (!(d1k > 0.0)) throw std::runtime_error("run_phebie: probe stepsize denominator vanished");
        ExitWaveStack resid = stack_sub(forward(model, s.w, s.u), psi);
        Probe gw = adjoint_wrt_w(model, s.u, resid);
        for (std::size_t t = 0; t < s.w.size(); ++t) s.w.data[t] -= gw.data[t] / d1k;
        clip_probe(s.w, config.C_w);

        double d2k = phebie_d2k(model, s.w, config.d2);
        if (!(d2k > 0.0)) throw std::runtime_error("run_phebie: sample stepsize denominator vanished");
        resid = stack_sub(forward(model, s.w, s.u), psi);
        ComplexImage gu = adjoint_wrt_u(model, s.w, resid);
        for (std::size_t t = 0; t < s.u.size(); ++t) s.u.data[t] -= gu.data[t] / d2k;
        clip_sample(s.u, config.C_u);

        ExitWaveStack ahead = forward(model, s.w, s.u);
        psi = project_modulus(stack_axpby(1.0 / (1.0 + config.gamma), ahead,
                                          config.gamma / (1.0 + config.gamma), psi),
                              f);

        double obj = 0.5 * stack_norm2sq(stack_sub(ahead, psi));
        rep.objective_history.push_back(obj);
        rep.residual_history.push_back(data_residual(model, s.w, s.u, f));
        rep.iterations_run = k + 1;
        if (config.tol > 0.0 && k > 0 && std::abs(prev_obj - obj) <= config.tol * fscale) break;
        prev_obj = obj;
    }

    rep.final_w = s.w;
    rep.final_u = s.u;
    return rep;
}

SolverReport run_proxalt(const Model& model, const MeasurementStack& f, const SolverConfig& config,
                         const Probe* w0, const ComplexImage* u0) {
    config.validate();
    StartPoint s = default_start(model, config);
    if (w0) s.w = *w0;
    if (u0) s.u = *u0;

    SolverReport rep;
    for (int k = 0; k < config.max_iter; ++k) {
        ExitWaveStack z = prox(config.metric, config.beta, forward(model, s.w, s.u), f);
        s = inner_ls_factor(model, z, s.w, s.u, 1, config.alpha_bar1, config.alpha_bar2);

        rep.objective_history.push_back(metric_value(config.metric, forward(model, s.w, s.u), f));
        rep.residual_history.push_back(data_residual(model, s.w, s.u, f));
        rep.iterations_run = k + 1;
        if (config.tol > 0.0 && rep.residual_history.back() < config.tol) break;
    }

    rep.final_w = s.w;
    rep.final_u = s.u;
    return rep;
}

SolverReport run_admm(const Model& model, const MeasurementStack& f, const SolverConfig& config,
                      const Probe* w0, const ComplexImage* u0) {
    config.validate();
    if ((config.metric.kind == MetricKind::pAGM || config.metric.kind == MetricKind::pIPM) &&
        !(config.metric.epsilon > 0.0))
        throw std::invalid_argument("run_admm: penalized metrics need epsilon > 0");

    StartPoint s = default_start(model, config);
    if (w0) s.w = *w0;
    if (u0) s.u = *u0;

    const double beta = config.beta;
    AdmmState st{s.w, s.u, forward(model, s.w, s.u), ExitWaveStack::zeros(model.frames(), model.frame_len()),
                 RVec(model.probe_len(), 0.0), RVec(model.sample_len(), 0.0)};
    const double fscale = std::max(sqrt_f_norm(f), 1e-300);
    long long floor_raises = 0;
    SolverReport rep;

    for (int k = 0; k < config.max_iter; ++k) {
        ExitWaveStack zhat = stack_axpby(1.0, st.z, 1.0 / beta, st.lambda);

        // Step 1: probe, blended in the diagonalizing domain of A_u* A_u.
        {
            RVec cov = normal_diag_w(model, st.u);
            for (std::size_t t = 0; t < cov.size(); ++t) {
                st.m1[t] = std::max(0.0, 1e-3 * beta - beta * cov[t]);
                if (beta * cov[t] + config.alpha1 * st.m1[t] <= 1e-12) {
                    st.m1[t] = (1e-12 - beta * cov[t]) / config.alpha1 + 1e-12;
                    ++floor_raises;
                }
            }
            CVec num = to_diag_domain(model, adjoint_wrt_w(model, st.u, zhat).data, model.probe_side());
            CVec wv = to_diag_domain(model, st.w.data, model.probe_side());
            for (std::size_t t = 0; t < num.size(); ++t)
                num[t] = (beta * num[t] + config.alpha1 * st.m1[t] * wv[t]) /
                         (beta * cov[t] + config.alpha1 * st.m1[t]);
            st.w.data = from_diag_domain(model, num, model.probe_side());
            clip_probe(st.w, config.C_w);
        }

        // Step 2: sample, same construction against A_w* A_w.
        {
            RVec cov = normal_diag_u(model, st.w);
            for (std::size_t t = 0; t < cov.size(); ++t) {
                st.m2[t] = std::max(0.0, 1e-3 * beta - beta * cov[t]);
                if (beta * cov[t] + config.alpha2 * st.m2[t] <= 1e-12) {
                    st.m2[t] = (1e-12 - beta * cov[t]) / config.alpha2 + 1e-12;
                    ++floor_raises;
                }
            }
            CVec num = to_diag_domain(model, adjoint_wrt_u(model, st.w, zhat).data, model.image_side());
            CVec uv = to_diag_domain(model, st.u.data, model.image_side());
            for (std::size_t t = 0; t < num.size(); ++t)
                num[t] = (beta * num[t] + config.alpha2 * st.m2[t] * uv[t]) /
                         (beta * cov[t] + config.alpha2 * st.m2[t]);
            st.u.data = from_diag_domain(model, num, model.image_side());
            clip_sample(st.u, config.C_u);
        }

        // Steps 3-4: exit-wave prox and multiplier update.
        ExitWaveStack a = forward(model, st.w, st.u);
        ExitWaveStack zplus = stack_axpby(1.0, a, -1.0 / beta, st.lambda);
        st.z = admm_z_update(config.metric, beta, zplus, st.z, f);
        ExitWaveStack gap = stack_sub(st.z, a);
        st.lambda = stack_axpby(1.0, st.lambda, beta, gap);

        double lag = metric_value(config.metric, st.z, f) + std::real(stack_dot(gap, st.lambda)) +
                     0.5 * beta * stack_norm2sq(gap);
        rep.objective_history.push_back(lag);
        rep.residual_history.push_back(stack_norm2(gap) / fscale);
        rep.iterations_run = k + 1;
        if (config.tol > 0.0 && rep.residual_history.back() < config.tol) break;
    }

    if (floor_raises > 0)
        std::cerr << "run_admm: raised preconditioner diagonal floor on " << floor_raises << " entries\n";
    rep.final_w = st.w;
    rep.final_u = st.u;
    return rep;
}

SolverReport run_admm_variant(const Model& model, const MeasurementStack& f, const SolverConfig& config,
                              bool update_probe, const Probe* w0, const ComplexImage* u0) {
    config.validate();
    StartPoint s = default_start(model, config);
    if (w0) s.w = *w0;
    if (u0) s.u = *u0;

    const double beta = config.beta;
    const int inner_budget = 10;
    SolverReport rep;

    // One scaled-ADMM pass on the fixed constraint set, returning the fitted
    // free factor for the half-iterate z.
    auto half_step = [&](bool fit_sample) {
        ExitWaveStack zbar = forward(model, s.w, s.u);
        ExitWaveStack lam = ExitWaveStack::zeros(model.frames(), model.frame_len());
        ExitWaveStack z = zbar;
        for (int l = 0; l < inner_budget; ++l) {
            z = prox(config.metric, beta, stack_sub(zbar, lam), f);
            ExitWaveStack target = stack_axpby(1.0, z, 1.0, lam);
            if (fit_sample)
                s.u = solve_normal_u(model, s.w, adjoint_wrt_u(model, s.w, target), config.alpha_bar2);
            else
                s.w = solve_normal_w(model, s.u, adjoint_wrt_w(model, s.u, target), config.alpha_bar1);
            zbar = forward(model, s.w, s.u);
            lam = stack_axpby(1.0, lam, 1.0, stack_sub(z, zbar));
        }
        if (fit_sample)
            s.u = solve_normal_u(model, s.w, adjoint_wrt_u(model, s.w, z), config.alpha_bar2);
        else
            s.w = solve_normal_w(model, s.u, adjoint_wrt_w(model, s.u, z), config.alpha_bar1);
    };

    for (int k = 0; k < config.max_iter; ++k) {
        half_step(true);
        if (update_probe) half_step(false);

        rep.objective_history.push_back(metric_value(config.metric, forward(model, s.w, s.u), f));
        rep.residual_history.push_back(data_residual(model, s.w, s.u, f));
        rep.iterations_run = k + 1;
        if (config.tol > 0.0 && rep.residual_history.back() < config.tol) break;
    }

    rep.final_w = s.w;
    rep.final_u = s.u;
    return rep;
}

} // namespace bpr
