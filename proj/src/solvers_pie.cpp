#include "bpr/solvers.hpp"

#include "bpr/fft.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace bpr {

namespace {

// ePIE and rPIE run on Case I directly and on Case II in Fourier variables
// (w,u replaced by Fw, Fu with the frame propagator inverted).
struct PieVars {
    CVec w;        // probe variable (spatial or Fourier per case)
    CVec u;        // sample variable
    bool fourier;  // true for Case II
    const ScanGeometry* g;
};

PieVars to_vars(const Model& model, const Probe& w, const ComplexImage& u) {
    if (model.kind != ModelCase::PtychoI && model.kind != ModelCase::FourierPtychoII)
        throw std::invalid_argument("PIE solvers support Cases I and II only");
    PieVars v;
    v.fourier = (model.kind == ModelCase::FourierPtychoII);
    v.g = &model.geometry;
    v.w = v.fourier ? fft::forward_sq(w.data, w.side) : w.data;
    v.u = v.fourier ? fft::forward_sq(u.data, u.side) : u.data;
    return v;
}

void from_vars(const Model& model, const PieVars& v, Probe& w, ComplexImage& u) {
    w = Probe(v.fourier ? fft::inverse_sq(v.w, model.probe_side()) : v.w, model.probe_side());
    u = ComplexImage(v.fourier ? fft::inverse_sq(v.u, model.image_side()) : v.u, model.image_side());
}

CVec frame_propagate(const PieVars& v, const CVec& x) {
    return v.fourier ? fft::inverse_sq(x, v.g->frame_side) : fft::forward_sq(x, v.g->frame_side);
}
CVec frame_backpropagate(const PieVars& v, const CVec& x) {
    return v.fourier ? fft::forward_sq(x, v.g->frame_side) : fft::inverse_sq(x, v.g->frame_side);
}

double max_abs2(const CVec& x) {
    double m = 0.0;
    for (const auto& c : x) m = std::max(m, std::norm(c));
    return m;
}

SolverReport run_pie_family(const Model& model, const MeasurementStack& f, const SolverConfig& config,
                            bool regularized, const Probe* w0, const ComplexImage* u0) {
    config.validate();
    if (regularized && !(config.delta > 0.0 && config.delta < 1.0))
        throw std::invalid_argument("run_rpie: delta must lie in (0,1)");
    StartPoint s = default_start(model, config);
    if (w0) s.w = *w0;
    if (u0) s.u = *u0;

    PieVars v = to_vars(model, s.w, s.u);
    const int J = model.frames();
    Rng rng(config.seed + 0x9e3779b97f4a7c15ULL);
    std::vector<int> order(J);
    std::iota(order.begin(), order.end(), 0);

    CVec vel_w(v.w.size()), vel_u(v.u.size()); // optional momentum state
    SolverReport rep;

    for (int epoch = 0; epoch < config.max_iter; ++epoch) {
        rng.shuffle(order); // without replacement within each epoch
        for (int idx : order) {
            CVec uf = extract_frame(v.u, *v.g, idx);
            CVec exit(uf.size());
            for (std::size_t t = 0; t < uf.size(); ++t) exit[t] = v.w[t] * uf[t];
            CVec psi = frame_propagate(v, exit);
            for (std::size_t t = 0; t < psi.size(); ++t)
                psi[t] -= std::sqrt(f.frames[idx][t]) * csign(psi[t]);
            CVec resid = frame_backpropagate(v, psi);

            const double umax = max_abs2(uf);
            const double wmax = max_abs2(v.w);
            if (umax <= 0.0 || wmax <= 0.0)
                throw std::runtime_error("PIE: zero frame estimate, update denominator vanished");

            CVec dw(v.w.size()), du_frame(uf.size());
            if (!regularized) {
                for (std::size_t t = 0; t < uf.size(); ++t) {
                    dw[t] = -(config.d2 / umax) * std::conj(uf[t]) * resid[t];
                    du_frame[t] = -(config.d1 / wmax) * std::conj(v.w[t]) * resid[t];
                }
            } else {
                const double del = config.delta;
                for (std::size_t t = 0; t < uf.size(); ++t) {
                    double den_w = del * umax + (1.0 - del) * std::norm(uf[t]);
                    double den_u = del * wmax + (1.0 - del) * std::norm(v.w[t]);
                    dw[t] = -std::conj(uf[t]) * resid[t] / den_w;
                    du_frame[t] = -std::conj(v.w[t]) * resid[t] / den_u;
                }
            }
            if (config.momentum > 0.0) {
                for (std::size_t t = 0; t < dw.size(); ++t) dw[t] = (vel_w[t] = config.momentum * vel_w[t] + dw[t]);
                CVec du = embed_frame(du_frame, *v.g, idx);
                for (std::size_t t = 0; t < du.size(); ++t) du[t] = (vel_u[t] = config.momentum * vel_u[t] + du[t]);
                for (std::size_t t = 0; t < v.w.size(); ++t) v.w[t] += dw[t];
                for (std::size_t t = 0; t < v.u.size(); ++t) v.u[t] += du[t];
            } else {
                for (std::size_t t = 0; t < v.w.size(); ++t) v.w[t] += dw[t];
                embed_frame_add(du_frame, *v.g, idx, v.u);
            }
        }

        from_vars(model, v, s.w, s.u);
        double res = data_residual(model, s.w, s.u, f);
        rep.objective_history.push_back(metric_value(Metric(MetricKind::AGM), forward(model, s.w, s.u), f));
        rep.residual_history.push_back(res);
        rep.iterations_run = epoch + 1;
        if (config.tol > 0.0 && res < config.tol) break;
    }

    from_vars(model, v, s.w, s.u);
    rep.final_w = s.w;
    rep.final_u = s.u;
    return rep;
}

} // namespace

SolverReport run_epie(const Model& model, const MeasurementStack& f, const SolverConfig& config,
                      const Probe* w0, const ComplexImage* u0) {
    return run_pie_family(model, f, config, false, w0, u0);
}

SolverReport run_rpie(const Model& model, const MeasurementStack& f, const SolverConfig& config,
                      const Probe* w0, const ComplexImage* u0) {
    return run_pie_family(model, f, config, true, w0, u0);
}

} // namespace bpr
