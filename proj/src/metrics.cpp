#include "bpr/metrics.hpp"

#include "bpr/fft.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace bpr {

namespace {

constexpr double kPi = 3.14159265358979323846;

void check_pair(const ExitWaveStack& z, const MeasurementStack& f) {
    if (z.count() != f.count()) throw std::invalid_argument("metric: frame count mismatch");
    for (int j = 0; j < z.count(); ++j)
        if (z.frames[j].size() != f.frames[j].size()) throw std::invalid_argument("metric: frame length mismatch");
}

double metric_value_1d(const Metric& metric, double rho, double fval) {
    const double eps = metric.epsilon;
    switch (metric.kind) {
        case MetricKind::AGM: {
            double d = rho - std::sqrt(fval);
            return 0.5 * d * d;
        }
        case MetricKind::IPM: {
            double g = rho * rho;
            if (fval > 0.0 && g <= 0.0) return std::numeric_limits<double>::infinity();
            return 0.5 * (g - (fval > 0.0 ? fval * std::log(g) : 0.0));
        }
        case MetricKind::IGM: {
            double d = rho * rho - fval;
            return 0.5 * d * d;
        }
        case MetricKind::STAGM: {
            if (rho < eps * std::sqrt(fval)) return 0.5 * (1.0 - eps) * (fval - rho * rho / eps);
            double d = rho - std::sqrt(fval);
            return 0.5 * d * d;
        }
        case MetricKind::pAGM: {
            double d = std::sqrt(rho * rho + eps) - std::sqrt(fval + eps);
            return 0.5 * d * d;
        }
        case MetricKind::pIPM: {
            double g = rho * rho + eps;
            return 0.5 * (g - (fval + eps) * std::log(g));
        }
    }
    return 0.0;
}

// Gradient factor s so that grad = s * z (plus the AGM-style sign term
// handled separately); returns the full complex gradient of one entry.
cdouble metric_gradient_1d(const Metric& metric, cdouble z, double fval) {
    const double eps = metric.epsilon;
    const double rho = std::abs(z);
    switch (metric.kind) {
        case MetricKind::AGM:
            return z - std::sqrt(fval) * csign(z);
        case MetricKind::IPM:
            return z - (fval / std::max(rho * rho, 1e-300)) * z;
        case MetricKind::IGM:
            return 2.0 * (rho * rho - fval) * z;
        case MetricKind::STAGM:
            if (rho < eps * std::sqrt(fval)) return -((1.0 - eps) / eps) * z;
            return z - std::sqrt(fval) * csign(z);
        case MetricKind::pAGM:
            return z * (1.0 - std::sqrt(fval + eps) / std::sqrt(rho * rho + eps));
        case MetricKind::pIPM:
            return z * (1.0 - (fval + eps) / (rho * rho + eps));
    }
    return cdouble(0.0, 0.0);
}

// Real roots of the IGM prox cubic rho^3 + p rho + q = 0 with
// p = beta/2 - f, q = -beta*vmod/2 (Cardano / trigonometric branches).
double igm_prox_modulus(double beta, double vmod, double fval) {
    const double p = 0.5 * beta - fval;
    const double D = (p * p * p) / 27.0 + beta * beta * vmod * vmod / 16.0;
    double cands[4];
    int nc = 0;
    cands[nc++] = 0.0;
    if (D >= 0.0) {
        const double sD = std::sqrt(D);
        cands[nc++] = std::cbrt(0.25 * beta * vmod + sD) + std::cbrt(0.25 * beta * vmod - sD);
    } else {
        // Three real roots; D < 0 forces p < 0.
        const double r = 2.0 * std::sqrt(-p / 3.0);
        const double denom = std::sqrt(-(p * p * p) / 27.0);
        const double arg = std::clamp(0.25 * beta * vmod / denom, -1.0, 1.0);
        const double phi = std::acos(arg);
        for (int k = 0; k < 3; ++k) cands[nc++] = r * std::cos((phi - 2.0 * kPi * k) / 3.0);
    }
    Metric igm(MetricKind::IGM);
    double best = 0.0, best_obj = std::numeric_limits<double>::infinity();
    for (int i = 0; i < nc; ++i) {
        const double rho = std::max(cands[i], 0.0);
        const double obj = prox_objective_1d(igm, beta, rho, vmod, fval);
        if (obj < best_obj) { best_obj = obj; best = rho; }
    }
    return best;
}

double penalized_prox_modulus(const Metric& metric, double beta, double vmod, double fval,
                              int steps, double stepsize) {
    const double eps = metric.epsilon;
    double x = vmod;
    for (int l = 0; l < steps; ++l) {
        double pull = (metric.kind == MetricKind::pIPM)
            ? (fval + eps) / (x * x + eps)
            : std::sqrt(fval + eps) / std::sqrt(x * x + eps);
        x = std::max(0.0, x - stepsize * ((1.0 + beta - pull) * x - beta * vmod));
    }
    return x;
}

} // namespace

double prox_objective_1d(const Metric& metric, double beta, double rho, double vmod, double fval) {
    double d = rho - vmod;
    return metric_value_1d(metric, rho, fval) + 0.5 * beta * d * d;
}

double prox_modulus(const Metric& metric, double beta, double vmod, double fval) {
    const double eps = metric.epsilon;
    switch (metric.kind) {
        case MetricKind::AGM:
            return (std::sqrt(fval) + beta * vmod) / (1.0 + beta);
        case MetricKind::IPM:
            return (beta * vmod + std::sqrt(beta * beta * vmod * vmod + 4.0 * (1.0 + beta) * fval)) /
                   (2.0 * (1.0 + beta));
        case MetricKind::IGM:
            return igm_prox_modulus(beta, vmod, fval);
        case MetricKind::STAGM: {
            // Branch switch at the modulus where the clipped region ends:
            // |y| < (eps - (1-eps)/beta) sqrt(f).
            if (vmod < (eps - (1.0 - eps) / beta) * std::sqrt(fval)) {
                const double denom = beta - (1.0 - eps) / eps;
                return denom > 0.0 ? std::max(0.0, beta * vmod / denom) : 0.0;
            }
            return (std::sqrt(fval) + beta * vmod) / (1.0 + beta);
        }
        case MetricKind::pAGM:
        case MetricKind::pIPM:
            return penalized_prox_modulus(metric, beta, vmod, fval, 50, 1.0 / (1.0 + beta));
    }
    return vmod;
}

double metric_value(const Metric& metric, const ExitWaveStack& z, const MeasurementStack& f) {
    check_pair(z, f);
    double total = 0.0;
    for (int j = 0; j < z.count(); ++j) {
        const auto& zj = z.frames[j];
        const auto& fj = f.frames[j];
        double s = 0.0;
#pragma omp parallel for reduction(+ : s) schedule(static)
        for (long long t = 0; t < static_cast<long long>(zj.size()); ++t)
            s += metric_value_1d(metric, std::abs(zj[t]), fj[t]);
        total += s;
    }
    return total;
}

ExitWaveStack metric_gradient(const Metric& metric, const ExitWaveStack& z, const MeasurementStack& f) {
    check_pair(z, f);
    ExitWaveStack out = z;
    for (int j = 0; j < z.count(); ++j) {
        auto& oj = out.frames[j];
        const auto& fj = f.frames[j];
#pragma omp parallel for schedule(static)
        for (long long t = 0; t < static_cast<long long>(oj.size()); ++t)
            oj[t] = metric_gradient_1d(metric, z.frames[j][t], fj[t]);
    }
    return out;
}

ExitWaveStack prox(const Metric& metric, double beta, const ExitWaveStack& v, const MeasurementStack& f) {
    if (!(beta > 0.0)) throw std::invalid_argument("prox: beta must be positive");
    if (metric.kind == MetricKind::STAGM && !(metric.epsilon > 0.0 && metric.epsilon < 1.0))
        throw std::invalid_argument("prox: ST-AGM requires epsilon in (0,1)");
    if (metric.kind == MetricKind::pAGM || metric.kind == MetricKind::pIPM)
        return prox_penalized(metric, beta, v, f, 50, 1.0 / (1.0 + beta));
    check_pair(v, f);
    ExitWaveStack out = v;
    for (int j = 0; j < v.count(); ++j) {
        auto& oj = out.frames[j];
        const auto& fj = f.frames[j];
#pragma omp parallel for schedule(static)
        for (long long t = 0; t < static_cast<long long>(oj.size()); ++t)
            oj[t] = prox_modulus(metric, beta, std::abs(v.frames[j][t]), fj[t]) * csign(v.frames[j][t]);
    }
    return out;
}

ExitWaveStack prox_penalized(const Metric& metric, double beta, const ExitWaveStack& v,
                             const MeasurementStack& f, int steps, double stepsize) {
    if (metric.kind != MetricKind::pAGM && metric.kind != MetricKind::pIPM)
        throw std::invalid_argument("prox_penalized: metric must be pAGM or pIPM");
    if (!(metric.epsilon > 0.0)) throw std::invalid_argument("prox_penalized: epsilon must be positive");
    if (!(stepsize > 0.0)) throw std::invalid_argument("prox_penalized: stepsize must be positive");
    check_pair(v, f);
    ExitWaveStack out = v;
    for (int j = 0; j < v.count(); ++j) {
        auto& oj = out.frames[j];
        const auto& fj = f.frames[j];
#pragma omp parallel for schedule(static)
        for (long long t = 0; t < static_cast<long long>(oj.size()); ++t)
            oj[t] = penalized_prox_modulus(metric, beta, std::abs(v.frames[j][t]), fj[t], steps, stepsize) *
                    csign(v.frames[j][t]);
    }
    return out;
}

ExitWaveStack project_modulus(const ExitWaveStack& psi, const MeasurementStack& f) {
    check_pair(psi, f);
    ExitWaveStack out = psi;
    for (int j = 0; j < psi.count(); ++j) {
        auto& oj = out.frames[j];
        const auto& fj = f.frames[j];
#pragma omp parallel for schedule(static)
        for (long long t = 0; t < static_cast<long long>(oj.size()); ++t)
            oj[t] = std::sqrt(fj[t]) * csign(psi.frames[j][t]);
    }
    return out;
}

CVec project_amplitude(const CVec& x, double C) {
    if (!(C > 0.0)) throw std::invalid_argument("project_amplitude: bound must be positive");
    CVec out(x.size());
#pragma omp parallel for schedule(static)
    for (long long t = 0; t < static_cast<long long>(x.size()); ++t) {
        double m = std::abs(x[t]);
        out[t] = m > C ? x[t] * (C / m) : x[t];
    }
    return out;
}

Probe project_fourier_support(const Probe& w) {
    if (!w.fourier_support) throw std::invalid_argument("project_fourier_support: probe has no support mask");
    const auto& mask = *w.fourier_support;
    if (mask.size() != w.size()) throw std::invalid_argument("project_fourier_support: mask size mismatch");
    CVec fw = fft::forward_sq(w.data, w.side);
    for (std::size_t t = 0; t < fw.size(); ++t)
        if (!mask[t]) fw[t] = cdouble(0.0, 0.0);
    Probe out = w;
    out.data = fft::inverse_sq(fw, w.side);
    return out;
}

} // namespace bpr
