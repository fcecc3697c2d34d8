#pragma once

// Synthetic problem builders shared by the unit and acceptance tests.

#include "bpr/core.hpp"
#include "bpr/forward.hpp"
#include "bpr/types.hpp"

namespace inst {

struct Blind {
    bpr::Model model;
    bpr::Probe w;
    bpr::ComplexImage u;
    bpr::MeasurementStack f;
};

// Raster-scan instance with full-support gentle truth (every sample pixel is
// illuminated), jittered grid so the scan carries no raster ambiguity.
inline Blind ptycho(int image_side, int frame_side, int step, std::uint64_t seed,
                    bool fourier = false, int jitter = 1) {
    bpr::Rng rng(seed);
    bpr::ScanGeometry g = bpr::jittered_grid_scan(image_side, frame_side, step, jitter, rng);
    Blind b{fourier ? bpr::Model::fourier_ptycho(g) : bpr::Model::ptycho(g),
            bpr::gentle_random_probe(frame_side, rng), bpr::gentle_random_image(image_side, rng), {}};
    b.f = bpr::intensity(bpr::forward(b.model, b.w, b.u));
    return b;
}

inline Blind frog(int image_side, int shift_step, int num, std::uint64_t seed) {
    bpr::Rng rng(seed);
    Blind b{bpr::Model::frog(image_side, shift_step, num), bpr::gentle_random_probe(image_side, rng),
            bpr::gentle_random_image(image_side, rng), {}};
    b.f = bpr::intensity(bpr::forward(b.model, b.w, b.u));
    return b;
}

inline Blind conv(int image_side, bool outer_dft, std::uint64_t seed) {
    bpr::Rng rng(seed);
    Blind b{bpr::Model::convolution(image_side, outer_dft), bpr::gentle_random_probe(image_side, rng),
            bpr::gentle_random_image(image_side, rng), {}};
    b.f = bpr::intensity(bpr::forward(b.model, b.w, b.u));
    return b;
}

// Recovery instance with a controlled phase range. Rough per-pixel phases
// (pha around 0.3-0.5 rad) keep converged runs away from the linear
// phase-ramp ambiguity of the windowed product model, so the scalar-aligned
// error is meaningful. Separate generator streams for sample, probe, and
// scan keep the draws independent of each other.
inline Blind rough_ptycho(int image_side, int frame_side, int step, int jitter, std::uint64_t seed,
                          double pha, bool fourier = false) {
    bpr::Rng urng(seed), wrng(seed + 100), srng(seed + 200);
    bpr::CVec ud(std::size_t(image_side) * image_side);
    for (auto& v : ud) v = std::polar(urng.uniform(0.8, 1.2), urng.uniform(-pha, pha));
    bpr::CVec wd(std::size_t(frame_side) * frame_side);
    for (auto& v : wd) v = std::polar(wrng.uniform(0.8, 1.2), wrng.uniform(-pha, pha));
    bpr::ScanGeometry g = bpr::jittered_grid_scan(image_side, frame_side, step, jitter, srng);
    Blind b{fourier ? bpr::Model::fourier_ptycho(g) : bpr::Model::ptycho(g),
            bpr::Probe(std::move(wd), frame_side), bpr::ComplexImage(std::move(ud), image_side), {}};
    b.f = bpr::intensity(bpr::forward(b.model, b.w, b.u));
    return b;
}

// Cold-start initialization for end-to-end recovery runs: the probe keeps
// the true amplitude but gets fresh random phases, the sample starts at
// all-ones (the default solver initialization for the sample).
inline bpr::Probe probe_phase_init(const bpr::Probe& w_true, std::uint64_t seed) {
    bpr::Rng rng(seed + 300);
    bpr::Probe w0 = w_true;
    for (auto& v : w0.data) v = std::abs(v) * rng.unit_phase();
    return w0;
}

// Full-spectrum sample start for Fourier-variable engines: unit modulus with
// random phases, so no Fourier coefficient of the start is zero.
inline bpr::ComplexImage unit_phase_image(int side, std::uint64_t seed) {
    bpr::Rng rng(seed + 300);
    bpr::ComplexImage u0 = bpr::ComplexImage::ones(side);
    for (auto& v : u0.data) v = rng.unit_phase();
    return u0;
}

inline bpr::CVec perturbed(const bpr::CVec& x, double eps, std::uint64_t seed) {
    bpr::Rng rng(seed);
    bpr::CVec out = x;
    for (auto& v : out) v += eps * rng.complex_gaussian();
    return out;
}

inline Blind by_case(bpr::ModelCase kind, std::uint64_t seed) {
    switch (kind) {
        case bpr::ModelCase::PtychoI: return ptycho(12, 6, 3, seed);
        case bpr::ModelCase::FourierPtychoII: return ptycho(12, 6, 3, seed, true);
        case bpr::ModelCase::FrogIII: return frog(4, 3, 9, seed);
        case bpr::ModelCase::ConvIV: return conv(4, true, seed);
    }
    return ptycho(12, 6, 3, seed);
}

} // namespace inst
