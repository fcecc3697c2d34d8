#pragma once

#include "bpr/forward.hpp"
#include "bpr/metrics.hpp"
#include "bpr/types.hpp"

namespace bpr {

/// Default starting point: all-ones sample, disk-supported random-phase
/// probe drawn from config.seed.
struct StartPoint {
    Probe w;
    ComplexImage u;
};
StartPoint default_start(const Model& model, const SolverConfig& config);

/// Relative data residual || |A(w,u)| - sqrt(f) || / ||sqrt(f)||.
double data_residual(const Model& model, const Probe& w, const ComplexImage& u, const MeasurementStack& f);

// ---- projection solvers (AP / DR / RAAR on the exit wave) -------------------

/// T rounds of the alternating regularized least-squares factorization of
/// psi into (w, u); the inexact projection onto the bilinear set.
StartPoint inner_ls_factor(const Model& model, const ExitWaveStack& psi, const Probe& w0,
                           const ComplexImage& u0, int T, double alpha_bar1, double alpha_bar2);

SolverReport run_ap(const Model& model, const MeasurementStack& f, const SolverConfig& config,
                    const Probe* w0 = nullptr, const ComplexImage* u0 = nullptr);
SolverReport run_dr(const Model& model, const MeasurementStack& f, const SolverConfig& config,
                    const Probe* w0 = nullptr, const ComplexImage* u0 = nullptr);
SolverReport run_raar(const Model& model, const MeasurementStack& f, const SolverConfig& config,
                      const Probe* w0 = nullptr, const ComplexImage* u0 = nullptr);

// ---- stochastic single-frame engines ----------------------------------------

SolverReport run_epie(const Model& model, const MeasurementStack& f, const SolverConfig& config,
                      const Probe* w0 = nullptr, const ComplexImage* u0 = nullptr);
SolverReport run_rpie(const Model& model, const MeasurementStack& f, const SolverConfig& config,
                      const Probe* w0 = nullptr, const ComplexImage* u0 = nullptr);

// ---- splitting solvers -------------------------------------------------------

/// Proximal ADMM state: primal factors, exit-wave split variable, multiplier,
/// and the adaptive diagonal preconditioners (kept in the diagonalizing
/// domain of the respective normal operator).
struct AdmmState {
    Probe w;
    ComplexImage u;
    ExitWaveStack z;
    ExitWaveStack lambda;
    RVec m1; // length m_bar
    RVec m2; // length n
};

SolverReport run_phebie(const Model& model, const MeasurementStack& f, const SolverConfig& config,
                        const Probe* w0 = nullptr, const ComplexImage* u0 = nullptr);
SolverReport run_proxalt(const Model& model, const MeasurementStack& f, const SolverConfig& config,
                         const Probe* w0 = nullptr, const ComplexImage* u0 = nullptr);
SolverReport run_admm(const Model& model, const MeasurementStack& f, const SolverConfig& config,
                      const Probe* w0 = nullptr, const ComplexImage* u0 = nullptr);
SolverReport run_admm_variant(const Model& model, const MeasurementStack& f, const SolverConfig& config,
                              bool update_probe = true, const Probe* w0 = nullptr,
                              const ComplexImage* u0 = nullptr);

// ---- nonlinear least-squares machinery ---------------------------------------

/// Stacked real residual |z| - sqrt(f) (AGM) or |z|^2 - f (IGM).
RVec nls_residual(const Metric& metric, const ExitWaveStack& z, const MeasurementStack& f);

/// Matrix-free application of the NLS Jacobian linearized in the sample at
/// fixed probe, J v, and its adjoint J* r. `z` is forward(w, u) at the
/// linearization point.
ExitWaveStack jacobian_apply_u(const Metric& metric, const Model& model, const Probe& w,
                               const ExitWaveStack& z, const ComplexImage& direction);
ComplexImage jacobian_adjoint_apply_u(const Metric& metric, const Model& model, const Probe& w,
                                      const ExitWaveStack& z, const ExitWaveStack& r);

/// Same pair linearized in the probe at fixed sample.
ExitWaveStack jacobian_apply_w(const Metric& metric, const Model& model, const ComplexImage& u,
                               const ExitWaveStack& z, const Probe& direction);
Probe jacobian_adjoint_apply_w(const Metric& metric, const Model& model, const ComplexImage& u,
                               const ExitWaveStack& z, const ExitWaveStack& r);

SolverReport run_gn(const Model& model, const MeasurementStack& f, const SolverConfig& config,
                    bool update_probe = true, const Probe* w0 = nullptr, const ComplexImage* u0 = nullptr);
SolverReport run_lm(const Model& model, const MeasurementStack& f, const SolverConfig& config,
                    const DampingRule& rule, bool update_probe = true, const Probe* w0 = nullptr,
                    const ComplexImage* u0 = nullptr);
SolverReport run_nlcg(const Model& model, const MeasurementStack& f, const SolverConfig& config,
                      const Probe* w0 = nullptr, const ComplexImage* u0 = nullptr);

} // namespace bpr
