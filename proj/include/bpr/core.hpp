#pragma once

#include "bpr/types.hpp"

#include <random>

namespace bpr {

// ---- small vector helpers -------------------------------------------------

inline cdouble dot(const CVec& a, const CVec& b) {
    cdouble s(0.0, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
    return s;
}

inline double norm2sq(const CVec& a) {
    double s = 0.0;
    for (const auto& v : a) s += std::norm(v);
    return s;
}

inline double norm2(const CVec& a) { return std::sqrt(norm2sq(a)); }

/// sign(z) with the sign(0) := 1 convention.
inline cdouble csign(cdouble z) {
    double m = std::abs(z);
    return m > 0.0 ? z / m : cdouble(1.0, 0.0);
}

// ---- frame extraction / embedding ----------------------------------------

/// Copy the frame_side x frame_side window at offsets[j] (row-major).
CVec extract_frame(const CVec& u, const ScanGeometry& g, int j);

/// Adjoint of extract_frame: zeros everywhere except the frame window.
CVec embed_frame(const CVec& v, const ScanGeometry& g, int j);

/// Adds the frame into an existing image-sized accumulator.
void embed_frame_add(const CVec& v, const ScanGeometry& g, int j, CVec& acc);
void embed_frame_add(const RVec& v, const ScanGeometry& g, int j, RVec& acc);
RVec extract_frame(const RVec& u, const ScanGeometry& g, int j);

/// Element i of output = element (i - k) mod n of input.
CVec cyclic_shift(const CVec& u, long long k);
RVec cyclic_shift(const RVec& u, long long k);

/// 2D cyclic shift of a square raster by (dr, dc).
CVec cyclic_shift2d(const CVec& u, int side, int dr, int dc);

// ---- error metric quotienting the global scalar ambiguity ------------------

/// min over complex c of ||c x - x_ref|| / ||x_ref||, closed form
/// c = <x, x_ref> / ||x||^2.
double aligned_relative_error(const CVec& x, const CVec& x_ref);

// ---- probe recentering -----------------------------------------------------

struct RecenterResult {
    Probe w;
    ComplexImage u;
    int shift_row = 0;
    int shift_col = 0;
};

/// Cyclically translate the probe so its |w|^2 mass center sits at the
/// geometric center pixel. For Cases III/IV the sample is counter-translated
/// so the product model is preserved; for Case I the sample is left alone and
/// the applied shift is reported.
RecenterResult recenter_probe(const Probe& w, const ComplexImage& u, ModelCase kind);

// ---- seeded random generation ----------------------------------------------

/// All solver and simulation randomness flows through this wrapper so runs
/// are reproducible from a single seed.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(gen_); }
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen_); }
    double normal() { return std::normal_distribution<double>(0.0, 1.0)(gen_); }
    int uniform_int(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen_); }
    long long poisson(double mean) {
        if (mean <= 0.0) return 0;
        return std::poisson_distribution<long long>(mean)(gen_);
    }
    cdouble complex_gaussian() {
        double re = normal(), im = normal();
        return cdouble(re, im) / std::sqrt(2.0);
    }
    cdouble unit_phase() {
        double th = uniform(0.0, 2.0 * 3.14159265358979323846);
        return cdouble(std::cos(th), std::sin(th));
    }
    CVec complex_gaussian_vec(std::size_t n) {
        CVec v(n);
        for (auto& x : v) x = complex_gaussian();
        return v;
    }
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[uniform_int(0, static_cast<int>(i) - 1)]);
    }
    std::mt19937_64& engine() { return gen_; }

  private:
    std::mt19937_64 gen_;
};

/// Jittered grid scan: step-spaced offsets with per-frame integer jitter in
/// [-jitter, jitter], clamped to the image border (grid scan alone creates
/// the raster ambiguity, so tests and the CLI default to jittered grids).
ScanGeometry jittered_grid_scan(int image_side, int frame_side, int step, int jitter, Rng& rng);

/// Default solver initialization: all-ones sample and a disk-supported
/// random-phase probe drawn from the seed.
Probe disk_random_phase_probe(int side, Rng& rng, double radius_frac = 0.4);

/// Ground-truth generators for simulations: amplitude in [0.8, 1.2] with
/// uniform random phase, so every pixel carries signal.
ComplexImage gentle_random_image(int side, Rng& rng);
Probe gentle_random_probe(int side, Rng& rng);

} // namespace bpr
