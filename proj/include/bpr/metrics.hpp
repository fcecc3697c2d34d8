#pragma once

#include "bpr/forward.hpp"
#include "bpr/types.hpp"

namespace bpr {

/// Data-fidelity value M(|z|^2, f); +inf for IPM where f > 0 meets |z| = 0.
double metric_value(const Metric& metric, const ExitWaveStack& z, const MeasurementStack& f);

/// z-space residual of the metric (the bracketed factor of the gradient;
/// callers chain A_w*/A_u* to land in sample or probe space).
ExitWaveStack metric_gradient(const Metric& metric, const ExitWaveStack& z, const MeasurementStack& f);

/// argmin_x M(|x|^2, f) + (beta/2)||x - v||^2, elementwise closed forms.
/// pAGM/pIPM dispatch to prox_penalized with default inner settings.
ExitWaveStack prox(const Metric& metric, double beta, const ExitWaveStack& v, const MeasurementStack& f);

/// Penalized-metric prox via per-entry projected gradient iterations on the
/// modulus, starting from |v|.
ExitWaveStack prox_penalized(const Metric& metric, double beta, const ExitWaveStack& v,
                             const MeasurementStack& f, int steps, double stepsize);

/// Scalar versions used by both the stack operations and the test oracles.
double prox_modulus(const Metric& metric, double beta, double vmod, double fval);
double prox_objective_1d(const Metric& metric, double beta, double rho, double vmod, double fval);

/// Modulus projection: sqrt(f) o sign(Psi).
ExitWaveStack project_modulus(const ExitWaveStack& psi, const MeasurementStack& f);

/// Amplitude clipping min{C, |x|} o sign(x).
CVec project_amplitude(const CVec& x, double C);

/// Zero the probe spectrum outside its Fourier support mask.
Probe project_fourier_support(const Probe& w);

} // namespace bpr
