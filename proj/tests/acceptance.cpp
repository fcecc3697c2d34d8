// End-to-end acceptance gate: one pass/fail line per criterion.
#include "bpr/core.hpp"
#include "bpr/forward.hpp"
#include "bpr/io.hpp"
#include "bpr/lifted.hpp"
#include "bpr/metrics.hpp"
#include "bpr/solvers.hpp"

#include "support/instances.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <sys/wait.h>

using namespace bpr;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int n, bool pass, const std::string& detail) {
    std::printf("criterion %d: %s  (%s)\n", n, pass ? "PASS" : "FAIL", detail.c_str());
    if (!pass) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

const ModelCase kCases[] = {ModelCase::PtychoI, ModelCase::FourierPtychoII, ModelCase::FrogIII,
                            ModelCase::ConvIV};

// ---- criterion 1: adjoint identities ----------------------------------------

void criterion1() {
    auto t0 = std::chrono::steady_clock::now();
    double worst = 0.0;
    for (ModelCase kind : kCases) {
        for (int trial = 0; trial < 100; ++trial) {
            inst::Blind b = inst::by_case(kind, 1 + trial % 5);
            Rng rng(10000 + trial);
            ComplexImage du(rng.complex_gaussian_vec(b.model.sample_len()), b.model.image_side());
            Probe dw(rng.complex_gaussian_vec(b.model.probe_len()), b.model.probe_side());
            ExitWaveStack y;
            for (int j = 0; j < b.model.frames(); ++j)
                y.frames.push_back(rng.complex_gaussian_vec(b.model.frame_len()));

            auto rel = [&](cdouble lhs, cdouble rhs, double nx, double ny) {
                return std::abs(lhs - rhs) / (nx * ny + 1e-300);
            };

            ExitWaveStack au = forward(b.model, b.w, du); // linear in u at fixed w
            worst = std::max(worst, rel(stack_dot(au, y), dot(du.data, adjoint_wrt_u(b.model, b.w, y).data),
                                        stack_norm2(au), stack_norm2(y)));
            ExitWaveStack aw = forward(b.model, dw, b.u); // linear in w at fixed u
            worst = std::max(worst, rel(stack_dot(aw, y), dot(dw.data, adjoint_wrt_w(b.model, b.u, y).data),
                                        stack_norm2(aw), stack_norm2(y)));

            ExitWaveStack z = forward(b.model, b.w, b.u);
            for (MetricKind mk : {MetricKind::AGM, MetricKind::IGM}) {
                Metric metric(mk);
                ExitWaveStack ju = jacobian_apply_u(metric, b.model, b.w, z, du);
                worst = std::max(worst, rel(stack_dot(ju, y),
                                            dot(du.data, jacobian_adjoint_apply_u(metric, b.model, b.w, z, y).data),
                                            stack_norm2(ju), stack_norm2(y)));
                ExitWaveStack jw = jacobian_apply_w(metric, b.model, b.u, z, dw);
                worst = std::max(worst, rel(stack_dot(jw, y),
                                            dot(dw.data, jacobian_adjoint_apply_w(metric, b.model, b.u, z, y).data),
                                            stack_norm2(jw), stack_norm2(y)));
            }
        }
    }
    double secs = seconds_since(t0);
    report(1, worst <= 1e-10 && secs < 10.0,
           "adjoint identities: worst relative mismatch " + sci(worst) + ", " +
               sci(secs) + " s");
}

// ---- criterion 2: prox grid oracle -------------------------------------------

void criterion2() {
    auto t0 = std::chrono::steady_clock::now();
    const Metric kinds[] = {Metric(MetricKind::AGM), Metric(MetricKind::IPM), Metric(MetricKind::IGM),
                            Metric(MetricKind::STAGM, 0.3)};
    Rng rng(20);
    int bad = 0;
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        double vmod = rng.uniform(0.0, 3.0);
        double fval = rng.uniform(0.0, 4.0);
        double beta = rng.uniform(0.05, 5.0);
        for (const Metric& metric : kinds) {
            double rho = prox_modulus(metric, beta, vmod, fval);
            double val = prox_objective_1d(metric, beta, rho, vmod, fval);
            double hi = 2.0 * std::max({vmod, std::sqrt(fval), 1e-3});
            double best = val;
            for (int i = 0; i <= 10000; ++i) {
                double x = hi * i / 10000.0;
                best = std::min(best, prox_objective_1d(metric, beta, x, vmod, fval));
            }
            double slack = val - best;
            worst = std::max(worst, slack);
            if (!(slack <= 1e-8)) ++bad;
        }
    }
    double secs = seconds_since(t0);
    report(2, bad == 0 && secs < 30.0,
           "prox vs 1e4-point grid oracle on 1000 triples x 4 metrics: worst objective slack " +
               sci(worst) + ", " + sci(secs) + " s");
}

// ---- criterion 3: finite-difference gradients ---------------------------------

void criterion3() {
    const Metric kinds[] = {Metric(MetricKind::AGM), Metric(MetricKind::IPM), Metric(MetricKind::IGM),
                            Metric(MetricKind::STAGM, 0.3)};
    double worst = 0.0;
    for (const Metric& metric : kinds) {
        for (int trial = 0; trial < 50; ++trial) {
            Rng rng(30000 + trial);
            const std::size_t len = 24;
            ExitWaveStack z;
            z.frames.push_back(CVec(len));
            for (auto& v : z.frames[0]) v = std::polar(rng.uniform(0.8, 2.0), rng.uniform(-3.0, 3.0));
            MeasurementStack f;
            f.frames.push_back(RVec(len));
            for (auto& v : f.frames[0]) v = rng.uniform(0.1, 3.0);

            ExitWaveStack g = metric_gradient(metric, z, f);
            CVec dir = rng.complex_gaussian_vec(len);
            const double h = 1e-6;
            ExitWaveStack zp = z, zm = z;
            for (std::size_t t = 0; t < len; ++t) {
                zp.frames[0][t] += h * dir[t];
                zm.frames[0][t] -= h * dir[t];
            }
            double fd = (metric_value(metric, zp, f) - metric_value(metric, zm, f)) / (2.0 * h);
            double an = 0.0;
            for (std::size_t t = 0; t < len; ++t)
                an += g.frames[0][t].real() * dir[t].real() + g.frames[0][t].imag() * dir[t].imag();
            double scale = std::abs(fd) + std::abs(an) + 1.0;
            worst = std::max(worst, std::abs(fd - an) / scale);
        }
    }
    // NLS Jacobian directional derivatives, both least-squares metrics
    for (MetricKind mk : {MetricKind::AGM, MetricKind::IGM}) {
        Metric metric(mk);
        const double c = mk == MetricKind::IGM ? 2.0 : 1.0;
        for (int trial = 0; trial < 50; ++trial) {
            inst::Blind b = inst::by_case(ModelCase::PtychoI, 1 + trial % 5);
            Rng rng(40000 + trial);
            ComplexImage du(rng.complex_gaussian_vec(b.model.sample_len()), b.model.image_side());
            ExitWaveStack z = forward(b.model, b.w, b.u);
            ExitWaveStack jv = jacobian_apply_u(metric, b.model, b.w, z, du);

            const double h = 1e-6;
            ComplexImage up = b.u, um = b.u;
            for (std::size_t t = 0; t < du.data.size(); ++t) {
                up.data[t] += h * du.data[t];
                um.data[t] -= h * du.data[t];
            }
            RVec rp = nls_residual(metric, forward(b.model, b.w, up), b.f);
            RVec rm = nls_residual(metric, forward(b.model, b.w, um), b.f);
            std::size_t o = 0;
            double num = 0.0, den = 0.0;
            for (int j = 0; j < jv.count(); ++j)
                for (std::size_t t = 0; t < jv.frames[j].size(); ++t, ++o) {
                    double fd = (rp[o] - rm[o]) / (2.0 * h);
                    double an = c * jv.frames[j][t].real();
                    num += (fd - an) * (fd - an);
                    den += an * an + 1.0;
                }
            worst = std::max(worst, std::sqrt(num / den));
        }
    }
    report(3, worst <= 1e-5,
           "central finite differences, 50 instances per metric: worst relative mismatch " +
               sci(worst));
}

// ---- criterion 4: blind recovery on the 64x64 instance ------------------------

void criterion4() {
    inst::Blind b = inst::rough_ptycho(64, 16, 2, 1, 7, 0.5); // 87.5% linear overlap
    Probe w0 = inst::probe_phase_init(b.w, 7);
    ComplexImage u0(CVec(b.model.sample_len(), cdouble(1.0, 0.0)), 64);

    struct Entry {
        const char* name;
        SolverReport rep;
        double secs;
    };
    std::vector<Entry> entries;

    {
        SolverConfig c;
        c.max_iter = 500;
        c.seed = 7;
        c.delta = 0.95;
        auto t0 = std::chrono::steady_clock::now();
        entries.push_back({"rpie", run_rpie(b.model, b.f, c, &w0, &u0), 0.0});
        entries.back().secs = seconds_since(t0);
    }
    {
        SolverConfig c;
        c.max_iter = 500;
        c.seed = 7;
        c.d1 = 1.0;
        c.d2 = 1.0;
        c.gamma = 0.1;
        auto t0 = std::chrono::steady_clock::now();
        entries.push_back({"phebie", run_phebie(b.model, b.f, c, &w0, &u0), 0.0});
        entries.back().secs = seconds_since(t0);
    }
    {
        SolverConfig c;
        c.max_iter = 500;
        c.seed = 7;
        c.beta = 1.0;
        auto t0 = std::chrono::steady_clock::now();
        entries.push_back({"admm", run_admm(b.model, b.f, c, &w0, &u0), 0.0});
        entries.back().secs = seconds_since(t0);
    }

    bool pass = true;
    std::string detail;
    for (const Entry& e : entries) {
        double ew = aligned_relative_error(e.rep.final_w.data, b.w.data);
        double eu = aligned_relative_error(e.rep.final_u.data, b.u.data);
        pass = pass && ew <= 1e-2 && eu <= 1e-2 && e.secs < 60.0;
        detail += std::string(e.name) + " err_w=" + sci(ew) + " err_u=" + sci(eu) +
                  " " + sci(e.secs) + "s; ";
    }
    report(4, pass, "noiseless 64x64 blind recovery: " + detail);
}

// ---- criterion 5: PHeBIE monotonicity -----------------------------------------

void criterion5() {
    int violations = 0;
    double worst = 0.0;
    for (int run = 0; run < 30; ++run) {
        inst::Blind b = inst::ptycho(12, 6, 3, 500 + run);
        SolverConfig c;
        c.max_iter = 40;
        c.seed = 600 + run;
        c.gamma = 0.0;
        SolverReport r = run_phebie(b.model, b.f, c);
        for (std::size_t k = 1; k < r.objective_history.size(); ++k) {
            double rise = r.objective_history[k] - r.objective_history[k - 1];
            worst = std::max(worst, rise);
            if (rise > 1e-12 * std::max(1.0, std::abs(r.objective_history[k - 1]))) ++violations;
        }
    }
    report(5, violations == 0,
           "objective nonincreasing over 30 seeded runs: " + std::to_string(violations) +
               " violations, worst rise " + sci(worst));
}

// ---- criterion 6: RAAR/DR reduction and fixed points ---------------------------

void criterion6() {
    inst::Blind b = inst::ptycho(16, 8, 4, 9);

    SolverConfig c;
    c.max_iter = 10;
    c.seed = 9;
    c.delta = 1.0;
    SolverReport raar = run_raar(b.model, b.f, c, nullptr, nullptr);
    SolverReport dr = run_dr(b.model, b.f, c, nullptr, nullptr);
    double gap = 0.0;
    for (std::size_t k = 0; k < raar.residual_history.size(); ++k)
        gap = std::max(gap, std::abs(raar.residual_history[k] - dr.residual_history[k]));
    for (std::size_t t = 0; t < raar.final_u.data.size(); ++t)
        gap = std::max(gap, std::abs(raar.final_u.data[t] - dr.final_u.data[t]));

    SolverConfig s;
    s.max_iter = 5;
    s.seed = 9;
    s.inner_steps = 30;
    double stat = 0.0;
    stat = std::max(stat, run_ap(b.model, b.f, s, &b.w, &b.u).residual_history.back());
    stat = std::max(stat, run_dr(b.model, b.f, s, &b.w, &b.u).residual_history.back());
    stat = std::max(stat, run_phebie(b.model, b.f, s, &b.w, &b.u).residual_history.back());
    stat = std::max(stat, run_admm(b.model, b.f, s, &b.w, &b.u).residual_history.back());

    report(6, gap <= 1e-12 && stat <= 1e-8,
           "RAAR(delta=1) vs DR gap " + sci(gap) + ", worst feasible-start residual " +
               sci(stat));
}

// ---- criterion 7: lifted convex recovery ---------------------------------------

void criterion7() {
    auto t0 = std::chrono::steady_clock::now();
    const int n = 32, k = 3;
    Rng rng(42);
    lifted::CMat B(n, k), C(n, k);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < k; ++j) {
            B.at(i, j) = rng.complex_gaussian();
            C.at(i, j) = rng.complex_gaussian();
        }
    CVec h = rng.complex_gaussian_vec(k);
    CVec m = rng.complex_gaussian_vec(k);

    lifted::LiftedInstance instc = lifted::build_instance(h, m, B, C);
    SolverConfig config;
    config.max_iter = 50000;
    config.beta1 = 0.1;
    config.beta2 = 1.0;
    lifted::LiftedSolution sol = lifted::solve_lifted(instc, config);

    RVec eh, em;
    lifted::CMat vh, vm;
    lifted::hermitian_eig(sol.H, eh, vh);
    lifted::hermitian_eig(sol.M, em, vm);
    double rh = std::abs(eh[1]) / eh[0];
    double rm = std::abs(em[1]) / em[0];
    double errh = aligned_relative_error(sol.h, h);
    double errm = aligned_relative_error(sol.m, m);
    double secs = seconds_since(t0);
    report(7, rh <= 1e-3 && rm <= 1e-3 && errh <= 1e-2 && errm <= 1e-2 && secs < 120.0,
           "eig ratios " + sci(rh) + "/" + sci(rm) + ", factor errors " +
               sci(errh) + "/" + sci(errm) + ", " + sci(secs) + " s");
}

// ---- criterion 8: LM local contraction ------------------------------------------

void criterion8() {
    // one accepted step from a 1e-4 perturbation, nonblind IGM
    inst::Blind b = inst::rough_ptycho(16, 8, 2, 1, 5, 0.4);
    ComplexImage up(b.u.data, 16);
    Rng pr(77);
    double scale = 1e-4 * norm2(b.u.data) / std::sqrt(static_cast<double>(b.u.size()));
    for (auto& v : up.data) v += scale * pr.complex_gaussian();
    double e0 = aligned_relative_error(up.data, b.u.data);

    SolverConfig c1;
    c1.max_iter = 1;
    c1.seed = 5;
    c1.metric = Metric(MetricKind::IGM);
    DampingRule rule;
    rule.kind = DampingKind::Marquardt;
    rule.mu0 = 1e-3;
    SolverReport one = run_lm(b.model, b.f, c1, rule, /*update_probe=*/false, &b.w, &up);
    double contraction = e0 / aligned_relative_error(one.final_u.data, b.u.data);

    // full blind warm-start run
    inst::Blind b2 = inst::rough_ptycho(16, 8, 2, 1, 2, 0.4);
    Probe w0(inst::perturbed(b2.w.data, 0.003, 88), 8);
    ComplexImage u0(inst::perturbed(b2.u.data, 0.003, 89), 16);
    SolverConfig c2;
    c2.max_iter = 30;
    c2.seed = 2;
    c2.metric = Metric(MetricKind::AGM);
    SolverReport warm = run_lm(b2.model, b2.f, c2, rule, true, &w0, &u0);
    double ew = aligned_relative_error(warm.final_w.data, b2.w.data);
    double eu = aligned_relative_error(warm.final_u.data, b2.u.data);

    report(8, contraction >= 10.0 && ew <= 1e-3 && eu <= 1e-3,
           "one-step contraction " + sci(contraction) + "x, warm-start errors " +
               sci(ew) + "/" + sci(eu) + " in 30 iterations");
}

// ---- criterion 9: Poisson statistics ---------------------------------------------

void criterion9() {
    inst::Blind b = inst::ptycho(12, 6, 3, 31);
    const int draws = 10000;
    std::vector<RVec> sum(b.f.frames.size());
    for (std::size_t j = 0; j < sum.size(); ++j) sum[j].assign(b.f.frames[j].size(), 0.0);
    for (int d = 0; d < draws; ++d) {
        MeasurementStack s = simulate_poisson(b.f, 1.0, 900 + d);
        for (std::size_t j = 0; j < sum.size(); ++j)
            for (std::size_t t = 0; t < sum[j].size(); ++t) sum[j][t] += s.frames[j][t];
    }
    std::size_t total = 0, ok = 0;
    for (std::size_t j = 0; j < sum.size(); ++j)
        for (std::size_t t = 0; t < sum[j].size(); ++t) {
            ++total;
            double mean = sum[j][t] / draws;
            double f = b.f.frames[j][t];
            if (std::abs(mean - f) <= 3.0 * std::sqrt(f / draws) + 1e-12) ++ok;
        }
    double frac = double(ok) / double(total);
    report(9, frac >= 0.99,
           "sample means within 3 sigma for " + sci(100.0 * frac) + "% of " +
               std::to_string(total) + " entries over 10000 draws");
}

// ---- criterion 10: CLI determinism -------------------------------------------------

int run_cli(const std::string& args) {
    std::string cmd = std::string(BPR_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    int rc = std::system(cmd.c_str());
    return rc < 0 ? rc : WEXITSTATUS(rc);
}

void criterion10() {
    fs::path dir = fs::temp_directory_path() / "bpr_acceptance_cli";
    fs::remove_all(dir);
    fs::create_directories(dir);
    io::write_text_file((dir / "sim.json").string(),
                        R"({"case": "ptycho", "image_side": 16, "frame_side": 8, "step": 4,
                            "jitter": 1, "seed": 11})");
    bool pass = run_cli("simulate --config " + (dir / "sim.json").string() + " --out " +
                        (dir / "data").string() + " --noiseless") == 0;
    std::string rec = "reconstruct " + (dir / "data").string() +
                      " --algorithm rpie --seed 4 --max-iter 25 --out ";
    pass = pass && run_cli(rec + (dir / "a").string()) == 0;
    pass = pass && run_cli(rec + (dir / "b").string()) == 0;
    bool identical = false;
    if (pass)
        identical = io::read_text_file((dir / "a/report.json").string()) ==
                    io::read_text_file((dir / "b/report.json").string());
    pass = pass && identical &&
           run_cli("compare " + (dir / "a/report.json").string() + " --truth " +
                   (dir / "data").string()) == 0;
    report(10, pass, std::string("simulate/reconstruct/compare round trip, byte-identical reports: ") +
                         (identical ? "yes" : "no"));
}

} // namespace

int main() {
    criterion1();
    criterion2();
    criterion3();
    criterion4();
    criterion5();
    criterion6();
    criterion7();
    criterion8();
    criterion9();
    criterion10();
    if (g_failures) std::printf("%d criterion(s) failed\n", g_failures);
    else std::printf("all criteria passed\n");
    return g_failures == 0 ? 0 : 1;
}
