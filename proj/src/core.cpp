#include "bpr/core.hpp"

#include <algorithm>
#include <cmath>

namespace bpr {

namespace {

template <typename T>
std::vector<T> extract_frame_impl(const std::vector<T>& u, const ScanGeometry& g, int j) {
    if (j < 0 || j >= g.frames()) throw std::out_of_range("extract_frame: frame index out of range");
    if (u.size() != std::size_t(g.image_side) * g.image_side)
        throw std::invalid_argument("extract_frame: image size mismatch");
    const auto [r0, c0] = g.offsets[j];
    std::vector<T> out(g.frame_len());
    for (int r = 0; r < g.frame_side; ++r) {
        const T* src = u.data() + std::size_t(r0 + r) * g.image_side + c0;
        std::copy(src, src + g.frame_side, out.data() + std::size_t(r) * g.frame_side);
    }
    return out;
}

template <typename T>
void embed_frame_add_impl(const std::vector<T>& v, const ScanGeometry& g, int j, std::vector<T>& acc) {
    if (j < 0 || j >= g.frames()) throw std::out_of_range("embed_frame: frame index out of range");
    if (v.size() != g.frame_len()) throw std::invalid_argument("embed_frame: frame size mismatch");
    if (acc.size() != std::size_t(g.image_side) * g.image_side)
        throw std::invalid_argument("embed_frame: image size mismatch");
    const auto [r0, c0] = g.offsets[j];
    for (int r = 0; r < g.frame_side; ++r) {
        T* dst = acc.data() + std::size_t(r0 + r) * g.image_side + c0;
        const T* src = v.data() + std::size_t(r) * g.frame_side;
        for (int c = 0; c < g.frame_side; ++c) dst[c] += src[c];
    }
}

template <typename T>
std::vector<T> cyclic_shift_impl(const std::vector<T>& u, long long k) {
    const long long n = static_cast<long long>(u.size());
    if (n == 0) return u;
    long long s = ((k % n) + n) % n;
    std::vector<T> out(u.size());
    for (long long i = 0; i < n; ++i) out[(i + s) % n] = u[i];
    return out;
}

} // namespace

CVec extract_frame(const CVec& u, const ScanGeometry& g, int j) { return extract_frame_impl(u, g, j); }
RVec extract_frame(const RVec& u, const ScanGeometry& g, int j) { return extract_frame_impl(u, g, j); }

CVec embed_frame(const CVec& v, const ScanGeometry& g, int j) {
    CVec out(std::size_t(g.image_side) * g.image_side);
    embed_frame_add_impl(v, g, j, out);
    return out;
}

void embed_frame_add(const CVec& v, const ScanGeometry& g, int j, CVec& acc) { embed_frame_add_impl(v, g, j, acc); }
void embed_frame_add(const RVec& v, const ScanGeometry& g, int j, RVec& acc) { embed_frame_add_impl(v, g, j, acc); }

CVec cyclic_shift(const CVec& u, long long k) { return cyclic_shift_impl(u, k); }
RVec cyclic_shift(const RVec& u, long long k) { return cyclic_shift_impl(u, k); }

CVec cyclic_shift2d(const CVec& u, int side, int dr, int dc) {
    CVec out(u.size());
    auto wrap = [side](int i) { return ((i % side) + side) % side; };
    for (int r = 0; r < side; ++r)
        for (int c = 0; c < side; ++c)
            out[std::size_t(wrap(r + dr)) * side + wrap(c + dc)] = u[std::size_t(r) * side + c];
    return out;
}

double aligned_relative_error(const CVec& x, const CVec& x_ref) {
    if (x.size() != x_ref.size()) throw std::invalid_argument("aligned_relative_error: length mismatch");
    const double ref_norm = norm2(x_ref);
    if (ref_norm == 0.0) throw std::invalid_argument("aligned_relative_error: zero reference");
    const double xn = norm2sq(x);
    if (xn == 0.0) throw std::invalid_argument("aligned_relative_error: zero input");
    const cdouble c = dot(x, x_ref) / xn;
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += std::norm(c * x[i] - x_ref[i]);
    return std::sqrt(s) / ref_norm;
}

RecenterResult recenter_probe(const Probe& w, const ComplexImage& u, ModelCase kind) {
    const int s = w.side;
    double mass = 0.0, mr = 0.0, mc = 0.0;
    for (int r = 0; r < s; ++r)
        for (int c = 0; c < s; ++c) {
            double p = std::norm(w.data[std::size_t(r) * s + c]);
            mass += p;
            mr += p * r;
            mc += p * c;
        }
    if (mass == 0.0) throw std::invalid_argument("recenter_probe: all-zero probe");
    const int center = s / 2;
    const int dr = center - static_cast<int>(std::lround(mr / mass));
    const int dc = center - static_cast<int>(std::lround(mc / mass));

    RecenterResult res;
    res.shift_row = dr;
    res.shift_col = dc;
    res.w = w;
    res.w.data = cyclic_shift2d(w.data, s, dr, dc);
    res.u = u;
    if (kind == ModelCase::FrogIII || kind == ModelCase::ConvIV) {
        // w(x) u(..) products are preserved when the sample moves opposite.
        res.u.data = cyclic_shift2d(u.data, u.side, -dr, -dc);
    }
    return res;
}

ScanGeometry jittered_grid_scan(int image_side, int frame_side, int step, int jitter, Rng& rng) {
    if (step < 1) throw std::invalid_argument("jittered_grid_scan: step must be positive");
    std::vector<std::array<int, 2>> offs;
    const int maxoff = image_side - frame_side;
    // Boundary grid positions are pinned (no jitter) so the first and last
    // rows/columns of the image always stay covered by at least one frame.
    for (int r = 0; r <= maxoff; r += step)
        for (int c = 0; c <= maxoff; c += step) {
            bool rb = (r == 0 || r + step > maxoff);
            bool cb = (c == 0 || c + step > maxoff);
            int rr = std::clamp(r + (jitter > 0 && !rb ? rng.uniform_int(-jitter, jitter) : 0), 0, maxoff);
            int cc = std::clamp(c + (jitter > 0 && !cb ? rng.uniform_int(-jitter, jitter) : 0), 0, maxoff);
            offs.push_back({rr, cc});
        }
    return ScanGeometry(std::move(offs), frame_side, image_side);
}

Probe disk_random_phase_probe(int side, Rng& rng, double radius_frac) {
    Probe w = Probe::zeros(side);
    const double cx = 0.5 * (side - 1);
    const double radius = radius_frac * side;
    for (int r = 0; r < side; ++r)
        for (int c = 0; c < side; ++c) {
            double dr = r - cx, dc = c - cx;
            if (std::sqrt(dr * dr + dc * dc) <= radius) w.data[std::size_t(r) * side + c] = rng.unit_phase();
        }
    return w;
}

ComplexImage gentle_random_image(int side, Rng& rng) {
    ComplexImage u = ComplexImage::zeros(side);
    for (auto& v : u.data) v = rng.uniform(0.8, 1.2) * rng.unit_phase();
    return u;
}

Probe gentle_random_probe(int side, Rng& rng) {
    Probe w = Probe::zeros(side);
    for (auto& v : w.data) v = rng.uniform(0.8, 1.2) * rng.unit_phase();
    return w;
}

} // namespace bpr
