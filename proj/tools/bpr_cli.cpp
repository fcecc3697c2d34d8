#include "bpr/core.hpp"
#include "bpr/fft.hpp"
#include "bpr/forward.hpp"
#include "bpr/io.hpp"
#include "bpr/lifted.hpp"
#include "bpr/solvers.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#ifdef _OPENMP
#include <omp.h>
#endif

#include <chrono>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct SimulateSpec {
    bpr::Model model;
    double poisson_scale = 1e6;
    std::uint64_t seed = 0;
};

SimulateSpec simulate_spec_from_file(const std::string& path) {
    json j = json::parse(bpr::io::read_text_file(path));
    std::string kind;
    int image_side = 0, frame_side = 16, step = 4, jitter = 1, shift_step = 1, num_shifts = 0;
    bool conv_fourier = true;
    SimulateSpec spec;
    for (const auto& [key, val] : j.items()) {
        if (key == "case") kind = val.get<std::string>();
        else if (key == "image_side") image_side = val.get<int>();
        else if (key == "frame_side") frame_side = val.get<int>();
        else if (key == "step") step = val.get<int>();
        else if (key == "jitter") jitter = val.get<int>();
        else if (key == "shift_step") shift_step = val.get<int>();
        else if (key == "num_shifts") num_shifts = val.get<int>();
        else if (key == "conv_fourier") conv_fourier = val.get<bool>();
        else if (key == "poisson_scale") spec.poisson_scale = val.get<double>();
        else if (key == "seed") spec.seed = val.get<std::uint64_t>();
        else throw std::invalid_argument("unknown simulate config key: " + key);
    }
    if (image_side < 1) throw std::invalid_argument("simulate config: image_side required");
    if (kind == "ptycho" || kind == "fourier_ptycho") {
        bpr::Rng rng(spec.seed);
        bpr::ScanGeometry g = bpr::jittered_grid_scan(image_side, frame_side, step, jitter, rng);
        spec.model = kind == "ptycho" ? bpr::Model::ptycho(std::move(g)) : bpr::Model::fourier_ptycho(std::move(g));
    } else if (kind == "frog") {
        if (num_shifts < 1) num_shifts = image_side * image_side / std::max(shift_step, 1);
        spec.model = bpr::Model::frog(image_side, shift_step, num_shifts);
    } else if (kind == "conv") {
        spec.model = bpr::Model::convolution(image_side, conv_fourier);
    } else {
        throw std::invalid_argument("simulate config: unknown or missing case: " + kind);
    }
    return spec;
}

int cmd_simulate(const std::string& config_path, const std::string& out_dir,
                 std::optional<std::uint64_t> seed, bool noiseless) {
    SimulateSpec spec = simulate_spec_from_file(config_path);
    if (seed) spec.seed = *seed;
    fs::create_directories(out_dir);

    bpr::Rng rng(spec.seed);
    bpr::ComplexImage u = bpr::gentle_random_image(spec.model.image_side(), rng);
    bpr::Probe w = bpr::gentle_random_probe(spec.model.probe_side(), rng);
    bpr::MeasurementStack f = bpr::intensity(bpr::forward(spec.model, w, u));
    if (!noiseless) f = bpr::simulate_poisson(f, spec.poisson_scale, spec.seed + 1);

    bpr::io::write_text_file(out_dir + "/model.json", bpr::io::model_to_json_text(spec.model) + "\n");
    bpr::io::save_measurements(out_dir + "/f.arr", f);
    bpr::io::write_c128(out_dir + "/truth_w.arr", w.data, {w.side, w.side});
    bpr::io::write_c128(out_dir + "/truth_u.arr", u.data, {u.side, u.side});
    std::cout << "wrote " << spec.model.frames() << " frames to " << out_dir << "\n";
    return 0;
}

bpr::SolverReport dispatch(const std::string& algo, const bpr::Model& model, const bpr::MeasurementStack& f,
                           const bpr::SolverConfig& cfg, const bpr::Probe* w0, const bpr::ComplexImage* u0) {
    if (algo == "ap") return bpr::run_ap(model, f, cfg, w0, u0);
    if (algo == "dr") return bpr::run_dr(model, f, cfg, w0, u0);
    if (algo == "raar") return bpr::run_raar(model, f, cfg, w0, u0);
    if (algo == "epie") return bpr::run_epie(model, f, cfg, w0, u0);
    if (algo == "rpie") return bpr::run_rpie(model, f, cfg, w0, u0);
    if (algo == "phebie") return bpr::run_phebie(model, f, cfg, w0, u0);
    if (algo == "proxalt") return bpr::run_proxalt(model, f, cfg, w0, u0);
    if (algo == "admm") return bpr::run_admm(model, f, cfg, w0, u0);
    if (algo == "admm-variant") return bpr::run_admm_variant(model, f, cfg, true, w0, u0);
    if (algo == "gn") return bpr::run_gn(model, f, cfg, true, w0, u0);
    if (algo == "lm") return bpr::run_lm(model, f, cfg, cfg.damping, true, w0, u0);
    if (algo == "nlcg") return bpr::run_nlcg(model, f, cfg, w0, u0);
    if (algo == "lifted") {
        if (model.kind != bpr::ModelCase::ConvIV || !model.conv_fourier)
            throw std::invalid_argument("lifted requires the Fourier-domain convolution case");
        const int n = static_cast<int>(model.sample_len());
        // identity subspaces: fbar = n * measured intensity
        bpr::lifted::LiftedInstance inst;
        inst.Bhat = bpr::lifted::CMat(n, n);
        bpr::CVec e(n);
        for (int j = 0; j < n; ++j) {
            std::fill(e.begin(), e.end(), bpr::cdouble(0.0, 0.0));
            e[j] = 1.0;
            bpr::CVec fe = bpr::fft::forward1d(e);
            for (int i = 0; i < n; ++i) inst.Bhat.at(i, j) = std::sqrt(static_cast<double>(n)) * fe[i];
        }
        inst.Chat = inst.Bhat;
        inst.fbar.resize(n);
        for (int i = 0; i < n; ++i) inst.fbar[i] = n * f.frames[0][i];
        bpr::lifted::LiftedSolution sol = bpr::lifted::solve_lifted(inst, cfg);
        bpr::SolverReport rep = sol.report;
        int side = model.image_side();
        rep.final_w = bpr::Probe(sol.h, side);
        rep.final_u = bpr::ComplexImage(sol.m, side);
        return rep;
    }
    throw std::invalid_argument("unknown algorithm: " + algo);
}

int cmd_reconstruct(const std::string& data_dir, const std::string& algo, const std::string& config_path,
                    const std::string& out_dir, std::optional<std::uint64_t> seed,
                    std::optional<int> max_iter, std::optional<double> tol, const std::string& resume) {
    bpr::Model model = bpr::io::model_from_json_text(bpr::io::read_text_file(data_dir + "/model.json"));
    bpr::MeasurementStack f = bpr::io::load_measurements(data_dir + "/f.arr");
    if (f.count() != model.frames() || (f.count() && f.frames[0].size() != model.frame_len()))
        throw std::invalid_argument("measurement shape does not match the model geometry");

    bpr::SolverConfig cfg;
    if (!config_path.empty()) cfg = bpr::io::solver_config_from_file(config_path);
    if (seed) cfg.seed = *seed;
    if (max_iter) cfg.max_iter = *max_iter;
    if (tol) cfg.tol = *tol;
    cfg.validate();

    std::optional<bpr::Probe> w0;
    std::optional<bpr::ComplexImage> u0;
    if (!resume.empty()) {
        bpr::SolverReport prev = bpr::io::read_report(resume);
        if (prev.final_w.side > 0) w0 = prev.final_w;
        if (prev.final_u.side > 0) u0 = prev.final_u;
    }

    auto t0 = std::chrono::steady_clock::now();
    bpr::SolverReport rep = dispatch(algo, model, f, cfg, w0 ? &*w0 : nullptr, u0 ? &*u0 : nullptr);
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    // aligned error against ground truth, when the data directory has it
    if (fs::exists(data_dir + "/truth_w.arr") && rep.final_w.side > 0) {
        std::vector<int> shape;
        bpr::CVec tw = bpr::io::read_c128(data_dir + "/truth_w.arr", shape);
        bpr::CVec tu = bpr::io::read_c128(data_dir + "/truth_u.arr", shape);
        if (tw.size() == rep.final_w.size() && tu.size() == rep.final_u.size())
            rep.aligned_error = std::max(bpr::aligned_relative_error(rep.final_w.data, tw),
                                         bpr::aligned_relative_error(rep.final_u.data, tu));
    }

    fs::create_directories(out_dir);
    bpr::io::write_report(out_dir + "/report.json", rep);
    bpr::io::write_text_file(out_dir + "/timing.json",
                             std::string("{\"wall_time_sec\": ") + std::to_string(secs) + "}\n");
    if (rep.final_w.side > 0) {
        bpr::io::write_png_modulus(out_dir + "/w_modulus.png", rep.final_w.data, rep.final_w.side);
        bpr::io::write_png_phase(out_dir + "/w_phase.png", rep.final_w.data, rep.final_w.side);
    }
    if (rep.final_u.side > 0) {
        bpr::io::write_png_modulus(out_dir + "/u_modulus.png", rep.final_u.data, rep.final_u.side);
        bpr::io::write_png_phase(out_dir + "/u_phase.png", rep.final_u.data, rep.final_u.side);
    }
    std::cout << "algorithm=" << algo << " iterations=" << rep.iterations_run;
    if (rep.aligned_error) std::cout << " aligned_error=" << *rep.aligned_error;
    std::cout << "\n";
    return 0;
}

int cmd_compare(const std::vector<std::string>& reports, const std::string& truth_dir,
                const std::string& csv_out) {
    std::vector<int> shape;
    bpr::CVec tw = bpr::io::read_c128(truth_dir + "/truth_w.arr", shape);
    bpr::CVec tu = bpr::io::read_c128(truth_dir + "/truth_u.arr", shape);

    std::ostringstream csv;
    csv << "report,iterations,err_w,err_u,wall_time_sec\n";
    std::cout << std::left << std::setw(40) << "report" << std::setw(12) << "iterations"
              << std::setw(14) << "err_w" << std::setw(14) << "err_u" << "wall_time_sec\n";
    for (const auto& path : reports) {
        bpr::SolverReport rep = bpr::io::read_report(path);
        if (rep.final_w.size() != tw.size() || rep.final_u.size() != tu.size())
            throw std::invalid_argument("report geometry does not match ground truth: " + path);
        double ew = bpr::aligned_relative_error(rep.final_w.data, tw);
        double eu = bpr::aligned_relative_error(rep.final_u.data, tu);
        double secs = 0.0;
        fs::path timing = fs::path(path).parent_path() / "timing.json";
        if (fs::exists(timing))
            secs = json::parse(bpr::io::read_text_file(timing.string())).at("wall_time_sec").get<double>();
        csv << path << "," << rep.iterations_run << "," << ew << "," << eu << "," << secs << "\n";
        std::cout << std::left << std::setw(40) << path << std::setw(12) << rep.iterations_run
                  << std::setw(14) << ew << std::setw(14) << eu << secs << "\n";
    }
    if (!csv_out.empty()) bpr::io::write_text_file(csv_out, csv.str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"blind phase retrieval toolkit"};
    app.require_subcommand(1);

    int threads = 1;
    app.add_option("--threads", threads, "solver thread count (default 1 for reproducibility)");

    std::string sim_config, sim_out;
    bool noiseless = false;
    std::optional<std::uint64_t> seed;
    auto* sim = app.add_subcommand("simulate", "generate phaseless data from a random ground truth");
    sim->add_option("--config", sim_config, "simulation config (JSON)")->required();
    sim->add_option("--out", sim_out, "output directory")->required();
    sim->add_option("--seed", seed, "seed override");
    sim->add_flag("--noiseless", noiseless, "skip Poisson noise");

    std::string rec_data, rec_algo, rec_config, rec_out, rec_resume;
    std::optional<int> max_iter;
    std::optional<double> tol;
    auto* rec = app.add_subcommand("reconstruct", "run a solver on simulated or measured data");
    rec->add_option("data", rec_data, "data directory from simulate")->required();
    rec->add_option("--algorithm", rec_algo, "solver name")->required();
    rec->add_option("--config", rec_config, "solver config (JSON)");
    rec->add_option("--out", rec_out, "output directory")->required();
    rec->add_option("--seed", seed, "seed override");
    rec->add_option("--max-iter", max_iter, "iteration override");
    rec->add_option("--tol", tol, "stopping tolerance override");
    rec->add_option("--resume", rec_resume, "warm start from a prior report");

    std::vector<std::string> cmp_reports;
    std::string cmp_truth, cmp_csv;
    auto* cmp = app.add_subcommand("compare", "tabulate aligned errors of reports against ground truth");
    cmp->add_option("reports", cmp_reports, "report.json files")->required();
    cmp->add_option("--truth", cmp_truth, "data directory holding the ground truth")->required();
    cmp->add_option("--csv", cmp_csv, "also write a CSV table");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

#ifdef _OPENMP
    omp_set_num_threads(threads > 0 ? threads : 1);
#endif

    try {
        if (sim->parsed()) return cmd_simulate(sim_config, sim_out, seed, noiseless);
        if (rec->parsed())
            return cmd_reconstruct(rec_data, rec_algo, rec_config, rec_out, seed, max_iter, tol, rec_resume);
        if (cmp->parsed()) return cmd_compare(cmp_reports, cmp_truth, cmp_csv);
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
