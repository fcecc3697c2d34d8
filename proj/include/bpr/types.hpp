#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace bpr {

using cdouble = std::complex<double>;
using CVec = std::vector<cdouble>;
using RVec = std::vector<double>;

/// Exact integer square root; throws if n is not a perfect square.
inline int side_from_length(std::size_t n, const char* what) {
    int s = static_cast<int>(std::sqrt(static_cast<double>(n)) + 0.5);
    if (s < 1 || static_cast<std::size_t>(s) * s != n)
        throw std::invalid_argument(std::string(what) + ": length is not a perfect square");
    return s;
}

/// Square complex-valued sample raster, stored row-major as a flat vector.
struct ComplexImage {
    CVec data;
    int side = 0;

    ComplexImage() = default;
    ComplexImage(CVec d, int s) : data(std::move(d)), side(s) {
        if (side < 1 || data.size() != static_cast<std::size_t>(side) * side)
            throw std::invalid_argument("ComplexImage: data length must equal side^2");
    }
    static ComplexImage zeros(int s) { return ComplexImage(CVec(std::size_t(s) * s), s); }
    static ComplexImage ones(int s) { return ComplexImage(CVec(std::size_t(s) * s, cdouble(1.0, 0.0)), s); }
    std::size_t size() const { return data.size(); }
};

/// Square complex-valued probe raster with optional amplitude bound and
/// Fourier support mask (mask entries mark frequencies that are kept).
struct Probe {
    CVec data;
    int side = 0;
    std::optional<double> amp_bound;
    std::optional<std::vector<std::uint8_t>> fourier_support;

    Probe() = default;
    Probe(CVec d, int s) : data(std::move(d)), side(s) {
        if (side < 1 || data.size() != static_cast<std::size_t>(side) * side)
            throw std::invalid_argument("Probe: data length must equal side^2");
    }
    static Probe zeros(int s) { return Probe(CVec(std::size_t(s) * s), s); }
    std::size_t size() const { return data.size(); }
};

/// Scan positions: J (row, col) offsets of frame_side x frame_side windows
/// inside an image_side x image_side raster. Frames never wrap at borders.
struct ScanGeometry {
    std::vector<std::array<int, 2>> offsets;
    int frame_side = 0;
    int image_side = 0;

    ScanGeometry() = default;
    ScanGeometry(std::vector<std::array<int, 2>> offs, int fs, int is)
        : offsets(std::move(offs)), frame_side(fs), image_side(is) {
        if (frame_side < 1 || image_side < frame_side)
            throw std::invalid_argument("ScanGeometry: need 1 <= frame_side <= image_side");
        if (offsets.empty()) throw std::invalid_argument("ScanGeometry: need at least one frame");
        for (const auto& o : offsets) {
            if (o[0] < 0 || o[1] < 0 || o[0] + frame_side > image_side || o[1] + frame_side > image_side)
                throw std::invalid_argument("ScanGeometry: frame crosses the image border");
        }
    }
    int frames() const { return static_cast<int>(offsets.size()); }
    std::size_t frame_len() const { return std::size_t(frame_side) * frame_side; }
};

enum class ModelCase { PtychoI, FourierPtychoII, FrogIII, ConvIV };

/// One of the four bilinear measurement cases plus its geometry.
struct Model {
    ModelCase kind = ModelCase::PtychoI;
    ScanGeometry geometry;   // Cases I-II
    int shift_step = 1;      // Case III cyclic-shift stride
    int num_shifts = 1;      // Case III frame count
    bool conv_fourier = false; // Case IV: apply the outer DFT
    int side = 0;            // Cases III-IV: sample raster side

    static Model ptycho(ScanGeometry g) {
        Model m; m.kind = ModelCase::PtychoI; m.side = g.image_side; m.geometry = std::move(g); return m;
    }
    static Model fourier_ptycho(ScanGeometry g) {
        Model m; m.kind = ModelCase::FourierPtychoII; m.side = g.image_side; m.geometry = std::move(g); return m;
    }
    static Model frog(int image_side, int step, int num) {
        if (step < 1 || num < 1) throw std::invalid_argument("Model::frog: step and frame count must be positive");
        Model m; m.kind = ModelCase::FrogIII; m.side = image_side; m.shift_step = step; m.num_shifts = num; return m;
    }
    static Model convolution(int image_side, bool outer_dft) {
        Model m; m.kind = ModelCase::ConvIV; m.side = image_side; m.conv_fourier = outer_dft; return m;
    }

    int image_side() const {
        return (kind == ModelCase::PtychoI || kind == ModelCase::FourierPtychoII) ? geometry.image_side : side;
    }
    int probe_side() const {
        return (kind == ModelCase::PtychoI || kind == ModelCase::FourierPtychoII) ? geometry.frame_side : side;
    }
    int frames() const {
        switch (kind) {
            case ModelCase::PtychoI:
            case ModelCase::FourierPtychoII: return geometry.frames();
            case ModelCase::FrogIII: return num_shifts;
            case ModelCase::ConvIV: return 1;
        }
        return 0;
    }
    std::size_t frame_len() const {
        switch (kind) {
            case ModelCase::PtychoI:
            case ModelCase::FourierPtychoII: return geometry.frame_len();
            case ModelCase::FrogIII:
            case ModelCase::ConvIV: return std::size_t(side) * side;
        }
        return 0;
    }
    std::size_t sample_len() const { return std::size_t(image_side()) * image_side(); }
    std::size_t probe_len() const { return std::size_t(probe_side()) * probe_side(); }
};

/// J frames of nonnegative intensities.
struct MeasurementStack {
    std::vector<RVec> frames;

    MeasurementStack() = default;
    explicit MeasurementStack(std::vector<RVec> fr) : frames(std::move(fr)) {
        for (const auto& f : frames)
            for (double v : f)
                if (v < 0.0) throw std::invalid_argument("MeasurementStack: negative intensity");
    }
    static MeasurementStack zeros(int J, std::size_t len) {
        MeasurementStack m; m.frames.assign(J, RVec(len, 0.0)); return m;
    }
    int count() const { return static_cast<int>(frames.size()); }
    std::size_t total_len() const {
        std::size_t n = 0;
        for (const auto& f : frames) n += f.size();
        return n;
    }
};

enum class MetricKind { AGM, IPM, IGM, STAGM, pAGM, pIPM };

struct Metric {
    MetricKind kind = MetricKind::AGM;
    double epsilon = 0.0; // STAGM truncation in (0,1); pAGM/pIPM penalization > 0

    Metric() = default;
    Metric(MetricKind k, double eps = 0.0) : kind(k), epsilon(eps) {
        if (k == MetricKind::STAGM && !(eps > 0.0 && eps < 1.0))
            throw std::invalid_argument("Metric: STAGM requires epsilon in (0,1)");
        if ((k == MetricKind::pAGM || k == MetricKind::pIPM) && !(eps > 0.0))
            throw std::invalid_argument("Metric: penalized metrics require epsilon > 0");
    }
};

enum class DampingKind { Marquardt, FanYuan, Thresholded };

struct DampingRule {
    DampingKind kind = DampingKind::FanYuan;
    double mu0 = 1e-3;  // Marquardt scale
    double nu = 1.0;    // Fan-Yuan exponent, in [1,2]
    double tau = 1e3;   // Thresholded boost factor, >> 1
    double c0 = 1.0;    // Thresholded switch level

    void validate() const {
        if (!(mu0 > 0.0)) throw std::invalid_argument("DampingRule: mu0 must be positive");
        if (!(nu >= 1.0 && nu <= 2.0)) throw std::invalid_argument("DampingRule: nu must lie in [1,2]");
        if (!(tau > 1.0)) throw std::invalid_argument("DampingRule: tau must exceed 1");
        if (!(c0 > 0.0)) throw std::invalid_argument("DampingRule: c0 must be positive");
    }
};

/// Shared hyperparameter bag for every solver; each algorithm reads the
/// subset it needs and validates ranges on entry.
struct SolverConfig {
    int max_iter = 100;
    double tol = 0.0;       // relative-change stop; 0 disables
    std::uint64_t seed = 0;

    int inner_steps = 5;    // T, inner alternating least squares rounds
    double d1 = 1.0;        // ePIE / PHeBIE stepsize scales
    double d2 = 1.0;
    double delta = 0.9;     // rPIE blend / RAAR relaxation, in (0,1)
    double gamma = 0.5;     // PHeBIE inertia, >= 0
    double beta = 1.0;      // proximal / ADMM penalty, > 0
    double alpha1 = 0.1;    // ADMM proximal weights, > 0
    double alpha2 = 0.1;
    double epsilon = 0.0;   // metric truncation/penalization
    double alpha_bar1 = 1e-8; // least-squares regularizers, > 0
    double alpha_bar2 = 1e-8;
    double C_w = 0.0;       // amplitude bounds; <= 0 means unbounded
    double C_u = 0.0;
    double beta1 = 1.0;     // lifted ADMM penalties, > 0
    double beta2 = 1.0;
    double momentum = 0.0;  // optional rPIE velocity coefficient, default off
    int prox_inner_steps = 50;  // pAGM/pIPM gradient-projection budget
    Metric metric{MetricKind::AGM, 0.0};
    DampingRule damping{};

    void validate() const {
        if (max_iter < 0) throw std::invalid_argument("SolverConfig: max_iter must be nonnegative");
        if (tol < 0.0) throw std::invalid_argument("SolverConfig: tol must be nonnegative");
        if (inner_steps < 0) throw std::invalid_argument("SolverConfig: inner_steps must be nonnegative");
        if (!(d1 > 0.0) || !(d2 > 0.0)) throw std::invalid_argument("SolverConfig: d1, d2 must be positive");
        if (!(delta > 0.0) || delta > 1.0) throw std::invalid_argument("SolverConfig: delta must lie in (0,1]");
        if (gamma < 0.0) throw std::invalid_argument("SolverConfig: gamma must be nonnegative");
        if (!(beta > 0.0)) throw std::invalid_argument("SolverConfig: beta must be positive");
        if (!(alpha1 > 0.0) || !(alpha2 > 0.0)) throw std::invalid_argument("SolverConfig: alpha1, alpha2 must be positive");
        if (!(alpha_bar1 > 0.0) || !(alpha_bar2 > 0.0))
            throw std::invalid_argument("SolverConfig: alpha_bar regularizers must be positive");
        if (!(beta1 > 0.0) || !(beta2 > 0.0)) throw std::invalid_argument("SolverConfig: beta1, beta2 must be positive");
        if (epsilon < 0.0) throw std::invalid_argument("SolverConfig: epsilon must be nonnegative");
        damping.validate();
    }
};

/// Per-run diagnostics shared by all solvers.
struct SolverReport {
    RVec objective_history;
    RVec residual_history;
    Probe final_w;
    ComplexImage final_u;
    int iterations_run = 0;
    std::optional<double> aligned_error;
};

} // namespace bpr
