#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bpr/core.hpp"

#include "support/instances.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

using namespace bpr;

namespace {

CVec random_cvec(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    return rng.complex_gaussian_vec(n);
}

} // namespace

TEST_CASE("extract_frame copies the requested window") {
    // image holds its own linear index so windows are easy to predict
    CVec data(16);
    for (int i = 0; i < 16; ++i) data[i] = cdouble(i, 0.0);
    ComplexImage u(data, 4);

    ScanGeometry g({{0, 0}, {1, 2}, {2, 2}}, 2, 4);
    CVec top_left = extract_frame(u.data, g, 0);
    CHECK(top_left == CVec{cdouble(0), cdouble(1), cdouble(4), cdouble(5)});

    CVec mid = extract_frame(u.data, g, 1);
    CHECK(mid == CVec{cdouble(6), cdouble(7), cdouble(10), cdouble(11)});

    ScanGeometry corner({{2, 2}}, 2, 4);
    CVec bottom_right = extract_frame(u.data, corner, 0);
    CHECK(bottom_right == CVec{cdouble(10), cdouble(11), cdouble(14), cdouble(15)});
}

TEST_CASE("embedding all-ones frames counts per-pixel coverage") {
    ScanGeometry g({{0, 0}, {0, 2}, {2, 0}, {2, 2}, {1, 1}}, 2, 4);
    CVec ones(4, cdouble(1.0, 0.0));
    CVec acc(16, cdouble(0.0, 0.0));
    for (int j = 0; j < g.frames(); ++j) embed_frame_add(ones, g, j, acc);

    // brute-force count
    std::vector<int> count(16, 0);
    for (const auto& off : g.offsets)
        for (int r = 0; r < 2; ++r)
            for (int c = 0; c < 2; ++c) count[(off[0] + r) * 4 + off[1] + c] += 1;
    for (int i = 0; i < 16; ++i) CHECK(acc[i] == cdouble(count[i], 0.0));
}

TEST_CASE("embed_frame is the exact adjoint of extract_frame") {
    Rng rng(11);
    ScanGeometry g = jittered_grid_scan(12, 5, 3, 2, rng);
    for (int trial = 0; trial < 100; ++trial) {
        int j = trial % g.frames();
        CVec u = random_cvec(g.image_side * g.image_side, 1000 + trial);
        CVec v = random_cvec(g.frame_len(), 2000 + trial);
        cdouble lhs = dot(extract_frame(u, g, j), v);
        cdouble rhs = dot(u, embed_frame(v, g, j));
        CHECK(std::abs(lhs - rhs) <= 1e-12 * (1.0 + std::abs(lhs)));
    }
}

TEST_CASE("embed_frame of zero input is zero and disjoint frames do not interfere") {
    ScanGeometry g({{0, 0}, {2, 2}}, 2, 4);
    CVec zeros(4, cdouble(0.0, 0.0));
    CVec img = embed_frame(zeros, g, 0);
    CHECK(norm2(img) == 0.0);

    CVec a(4, cdouble(1.0, 0.0)), b(4, cdouble(0.0, 1.0));
    CVec acc = embed_frame(a, g, 0);
    CVec other = embed_frame(b, g, 1);
    for (std::size_t i = 0; i < acc.size(); ++i) {
        // no pixel receives contributions from both frames
        CHECK((std::abs(acc[i]) == 0.0 || std::abs(other[i]) == 0.0));
    }
}

TEST_CASE("cyclic_shift periodicity and adjoint") {
    CVec u = random_cvec(9, 5);
    CHECK(cyclic_shift(u, 0) == u);
    CHECK(cyclic_shift(u, 9) == u);
    CHECK(cyclic_shift(u, -9) == u);

    // element i of output = element (i - k) mod n of input
    CVec s = cyclic_shift(u, 2);
    for (int i = 0; i < 9; ++i) CHECK(s[i] == u[(i - 2 + 9) % 9]);

    for (int k : {1, 3, 7, -4}) {
        CVec z = random_cvec(9, 50 + k);
        cdouble lhs = dot(cyclic_shift(u, k), z);
        cdouble rhs = dot(u, cyclic_shift(z, -k));
        CHECK(std::abs(lhs - rhs) <= 1e-12 * (1.0 + std::abs(lhs)));
    }
}

TEST_CASE("cyclic_shift2d moves rows and columns cyclically") {
    CVec u = random_cvec(16, 6);
    CVec s = cyclic_shift2d(u, 4, 1, 2);
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) CHECK(s[std::size_t(r) * 4 + c] == u[std::size_t((r + 3) % 4) * 4 + (c + 2) % 4]);
    CHECK(cyclic_shift2d(u, 4, 0, 0) == u);
    CHECK(cyclic_shift2d(u, 4, 4, -4) == u);
}

TEST_CASE("aligned_relative_error basics") {
    CVec x = random_cvec(32, 7);
    CHECK(aligned_relative_error(x, x) == doctest::Approx(0.0).epsilon(1e-12));

    CVec ix(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) ix[i] = cdouble(0.0, 1.0) * x[i];
    CHECK(aligned_relative_error(ix, x) <= 1e-12);

    // invariance under arbitrary nonzero complex rescaling of x
    CVec y = random_cvec(32, 8);
    double base = aligned_relative_error(x, y);
    Rng rng(9);
    for (int t = 0; t < 20; ++t) {
        cdouble c = std::polar(rng.uniform(0.1, 10.0), rng.uniform(0.0, 6.28));
        CVec cx(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) cx[i] = c * x[i];
        CHECK(std::abs(aligned_relative_error(cx, y) - base) <= 1e-10);
    }
}

TEST_CASE("aligned_relative_error matches a dense scan of the complex scalar") {
    CVec x = random_cvec(16, 21), y = random_cvec(16, 22);
    double got = aligned_relative_error(x, y);

    // scan |c| on a 1e3 grid around the closed-form magnitude and the phase
    // on a 1e3 grid (1e6 combinations total)
    cdouble c_opt = dot(x, y) / norm2sq(x);
    double best = 1e300;
    const int P = 1000, M = 1000;
    for (int m = 0; m <= M; ++m) {
        double mag = std::abs(c_opt) * (0.5 + 1.0 * m / M);
        for (int p = 0; p < P; ++p) {
            cdouble c = std::polar(mag, 2.0 * 3.141592653589793 * p / P);
            double e = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) e += std::norm(c * x[i] - y[i]);
            best = std::min(best, std::sqrt(e) / norm2(y));
        }
    }
    CHECK(got <= best + 1e-4);
    CHECK(best - got <= 1e-4);
}

TEST_CASE("recenter_probe brings the mass center to the central pixel") {
    // delta probe at a corner moves to the center pixel
    Probe w = Probe::zeros(5);
    w.data[0] = 1.0;
    RecenterResult r = recenter_probe(w, ComplexImage::ones(5), ModelCase::FrogIII);
    CHECK(std::abs(r.w.data[std::size_t(2) * 5 + 2]) == doctest::Approx(1.0));

    // already centered: no shift
    Probe c = Probe::zeros(5);
    c.data[std::size_t(2) * 5 + 2] = 1.0;
    RecenterResult rc = recenter_probe(c, ComplexImage::ones(5), ModelCase::FrogIII);
    CHECK(rc.shift_row == 0);
    CHECK(rc.shift_col == 0);

    // random blob: mass center of the recentered probe is within half a pixel
    Rng rng(31);
    Probe blob = Probe::zeros(9);
    for (int i = 3; i < 6; ++i)
        for (int j = 2; j < 5; ++j) blob.data[std::size_t(i) * 9 + j] = rng.complex_gaussian();
    RecenterResult rb = recenter_probe(blob, ComplexImage::ones(9), ModelCase::FrogIII);
    double mr = 0.0, mc = 0.0, mass = 0.0;
    for (int i = 0; i < 9; ++i)
        for (int j = 0; j < 9; ++j) {
            double m = std::norm(rb.w.data[std::size_t(i) * 9 + j]);
            mr += m * i;
            mc += m * j;
            mass += m;
        }
    CHECK(std::abs(mr / mass - 4.0) <= 0.5);
    CHECK(std::abs(mc / mass - 4.0) <= 0.5);
}

TEST_CASE("recenter_probe preserves the product model for the shift cases") {
    inst::Blind b = inst::frog(5, 2, 12, 3);
    Probe w = b.w;
    w.data[0] += cdouble(3.0, 0.0); // push the mass center off
    ExitWaveStack before = forward(b.model, w, b.u);
    RecenterResult r = recenter_probe(w, b.u, b.model.kind);
    ExitWaveStack after = forward(b.model, r.w, r.u);
    MeasurementStack fb = intensity(before), fa = intensity(after);
    for (int j = 0; j < fb.count(); ++j)
        for (std::size_t t = 0; t < fb.frames[j].size(); ++t)
            CHECK(fa.frames[j][t] == doctest::Approx(fb.frames[j][t]).epsilon(1e-10));
}

TEST_CASE("recenter_probe rejects an all-zero probe") {
    CHECK_THROWS_AS(recenter_probe(Probe::zeros(4), ComplexImage::ones(4), ModelCase::PtychoI),
                    std::invalid_argument);
}

TEST_CASE("ScanGeometry rejects frames crossing the border") {
    CHECK_THROWS_AS(ScanGeometry({{3, 0}}, 2, 4), std::invalid_argument);
    CHECK_THROWS_AS(ScanGeometry({{0, -1}}, 2, 4), std::invalid_argument);
    CHECK_NOTHROW(ScanGeometry({{2, 2}}, 2, 4));
}

TEST_CASE("jittered_grid_scan is reproducible, in-bounds, and covering") {
    Rng a(77), b(77);
    ScanGeometry g1 = jittered_grid_scan(32, 8, 4, 2, a);
    ScanGeometry g2 = jittered_grid_scan(32, 8, 4, 2, b);
    CHECK(g1.offsets == g2.offsets);

    std::vector<int> covered(32 * 32, 0);
    for (const auto& off : g1.offsets) {
        CHECK(off[0] >= 0);
        CHECK(off[1] >= 0);
        CHECK(off[0] + 8 <= 32);
        CHECK(off[1] + 8 <= 32);
        for (int r = 0; r < 8; ++r)
            for (int c = 0; c < 8; ++c) covered[(off[0] + r) * 32 + off[1] + c] = 1;
    }
    CHECK(std::count(covered.begin(), covered.end(), 1) == 32 * 32);
}

TEST_CASE("config and rule validation rejects out-of-range parameters") {
    SolverConfig c;
    CHECK_NOTHROW(c.validate());
    c.delta = 1.5;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c.delta = 0.9;
    c.beta = 0.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);

    DampingRule r;
    r.nu = 3.0;
    CHECK_THROWS_AS(r.validate(), std::invalid_argument);

    CHECK_THROWS_AS(Metric(MetricKind::STAGM, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(Metric(MetricKind::pAGM, 0.0), std::invalid_argument);
    CHECK_NOTHROW(Metric(MetricKind::STAGM, 0.5));
}
