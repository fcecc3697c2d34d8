#pragma once

// Serial reference implementations used as oracles: naive O(N^2) DFT and
// direct-sum bilinear operators, no FFT and no OpenMP. Deliberately slow and
// obvious.

#include "bpr/forward.hpp"
#include "bpr/types.hpp"

#include <cmath>
#include <complex>

namespace ref {

using bpr::CVec;
using bpr::cdouble;

inline CVec dft2d(const CVec& in, int rows, int cols, int sign) {
    const double tau = 2.0 * 3.14159265358979323846;
    CVec out(in.size(), cdouble(0.0, 0.0));
    for (int a = 0; a < rows; ++a)
        for (int b = 0; b < cols; ++b) {
            cdouble s(0.0, 0.0);
            for (int r = 0; r < rows; ++r)
                for (int c = 0; c < cols; ++c) {
                    double ang = sign * tau * (double(a) * r / rows + double(b) * c / cols);
                    s += in[std::size_t(r) * cols + c] * std::polar(1.0, ang);
                }
            out[std::size_t(a) * cols + b] = s / std::sqrt(double(rows) * cols);
        }
    return out;
}

inline CVec fwd2(const CVec& in, int side) { return dft2d(in, side, side, -1); }
inline CVec inv2(const CVec& in, int side) { return dft2d(in, side, side, +1); }
inline CVec fwd1(const CVec& in) { return dft2d(in, 1, static_cast<int>(in.size()), -1); }
inline CVec inv1(const CVec& in) { return dft2d(in, 1, static_cast<int>(in.size()), +1); }

inline CVec shift1(const CVec& u, long long k) {
    const long long n = static_cast<long long>(u.size());
    CVec out(u.size());
    for (long long i = 0; i < n; ++i) out[((i + k) % n + n) % n] = u[i];
    return out;
}

inline CVec hadamard(const CVec& a, const CVec& b) {
    CVec out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
    return out;
}

// Naive serial forward operator for all four cases.
inline bpr::ExitWaveStack forward(const bpr::Model& m, const bpr::Probe& w, const bpr::ComplexImage& u) {
    bpr::ExitWaveStack out;
    switch (m.kind) {
        case bpr::ModelCase::PtychoI:
            for (int j = 0; j < m.frames(); ++j)
                out.frames.push_back(fwd2(hadamard(w.data, bpr::extract_frame(u.data, m.geometry, j)), m.probe_side()));
            break;
        case bpr::ModelCase::FourierPtychoII: {
            CVec fw = fwd2(w.data, w.side), fu = fwd2(u.data, u.side);
            for (int j = 0; j < m.frames(); ++j)
                out.frames.push_back(inv2(hadamard(fw, bpr::extract_frame(fu, m.geometry, j)), m.probe_side()));
            break;
        }
        case bpr::ModelCase::FrogIII:
            for (int j = 0; j < m.frames(); ++j)
                out.frames.push_back(fwd1(hadamard(w.data, shift1(u.data, static_cast<long long>(j) * m.shift_step))));
            break;
        case bpr::ModelCase::ConvIV: {
            const std::size_t n = u.size();
            CVec conv(n, cdouble(0.0, 0.0));
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) conv[(i + j) % n] += w.data[i] * u.data[j];
            out.frames.push_back(m.conv_fourier ? fwd1(conv) : conv);
            break;
        }
    }
    return out;
}

} // namespace ref
