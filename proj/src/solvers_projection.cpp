#include "bpr/solvers.hpp"

#include <cmath>

namespace bpr {

StartPoint default_start(const Model& model, const SolverConfig& config) {
    Rng rng(config.seed);
    StartPoint s;
    s.u = ComplexImage::ones(model.image_side());
    s.w = disk_random_phase_probe(model.probe_side(), rng);
    return s;
}

double data_residual(const Model& model, const Probe& w, const ComplexImage& u, const MeasurementStack& f) {
    ExitWaveStack z = forward(model, w, u);
    double num = 0.0, den = 0.0;
    for (int j = 0; j < z.count(); ++j)
        for (std::size_t t = 0; t < z.frames[j].size(); ++t) {
            double d = std::abs(z.frames[j][t]) - std::sqrt(f.frames[j][t]);
            num += d * d;
            den += f.frames[j][t];
        }
    return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

StartPoint inner_ls_factor(const Model& model, const ExitWaveStack& psi, const Probe& w0,
                           const ComplexImage& u0, int T, double alpha_bar1, double alpha_bar2) {
    StartPoint s{w0, u0};
    for (int l = 0; l < T; ++l) {
        s.w = solve_normal_w(model, s.u, adjoint_wrt_w(model, s.u, psi), alpha_bar1);
        s.u = solve_normal_u(model, s.w, adjoint_wrt_u(model, s.w, psi), alpha_bar2);
    }
    return s;
}

namespace {

// Shared AP/DR/RAAR loop; delta = 1 gives DR, delta < 0 encodes plain AP.
SolverReport run_projection_family(const Model& model, const MeasurementStack& f, const SolverConfig& config,
                                   double delta, const Probe* w0, const ComplexImage* u0) {
    config.validate();
    StartPoint s = default_start(model, config);
    if (w0) s.w = *w0;
    if (u0) s.u = *u0;

    SolverReport rep;
    ExitWaveStack psi = project_modulus(forward(model, s.w, s.u), f);
    double prev_norm = stack_norm2(psi);

    for (int k = 0; k < config.max_iter; ++k) {
        s = inner_ls_factor(model, psi, s.w, s.u, config.inner_steps, config.alpha_bar1, config.alpha_bar2);
        ExitWaveStack psi_hat = forward(model, s.w, s.u);

        ExitWaveStack psi_next;
        if (delta < 0.0) {
            psi_next = project_modulus(psi_hat, f);
        } else {
            // Psi + P1(2*Psi_hat - Psi) - Psi_hat, relaxed by delta towards Psi_hat.
            ExitWaveStack reflected = stack_axpby(2.0, psi_hat, -1.0, psi);
            ExitWaveStack p1 = project_modulus(reflected, f);
            ExitWaveStack dr = stack_axpby(1.0, psi, 1.0, p1);
            dr = stack_axpby(1.0, dr, -1.0, psi_hat);
            psi_next = stack_axpby(delta, dr, 1.0 - delta, psi_hat);
        }

        rep.objective_history.push_back(metric_value(Metric(MetricKind::AGM), psi_hat, f));
        rep.residual_history.push_back(data_residual(model, s.w, s.u, f));
        rep.iterations_run = k + 1;

        double change = stack_dist(psi_next, psi);
        psi = std::move(psi_next);
        if (config.tol > 0.0 && prev_norm > 0.0 && change / prev_norm < config.tol) break;
        prev_norm = stack_norm2(psi);
    }

    // Extract the factors from the final exit wave with a long inner solve.
    if (rep.iterations_run > 0) s = inner_ls_factor(model, psi, s.w, s.u, 50, config.alpha_bar1, config.alpha_bar2);
    rep.final_w = s.w;
    rep.final_u = s.u;
    return rep;
}

} // namespace

SolverReport run_ap(const Model& model, const MeasurementStack& f, const SolverConfig& config,
                    const Probe* w0, const ComplexImage* u0) {
    return run_projection_family(model, f, config, -1.0, w0, u0);
}

SolverReport run_dr(const Model& model, const MeasurementStack& f, const SolverConfig& config,
                    const Probe* w0, const ComplexImage* u0) {
    return run_projection_family(model, f, config, 1.0, w0, u0);
}

SolverReport run_raar(const Model& model, const MeasurementStack& f, const SolverConfig& config,
                      const Probe* w0, const ComplexImage* u0) {
    if (!(config.delta > 0.0 && config.delta <= 1.0))
        throw std::invalid_argument("run_raar: delta must lie in (0,1]");
    return run_projection_family(model, f, config, config.delta, w0, u0);
}

} // namespace bpr
