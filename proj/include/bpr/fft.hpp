#pragma once

#include "bpr/types.hpp"

namespace bpr::fft {

/// Unitary 2D DFT on a rows x cols raster stored row-major (1/sqrt(N) both
/// ways). rows == 1 gives the 1D transform. Thread-safe; plans are cached.
void forward2d(const cdouble* in, cdouble* out, int rows, int cols);
void inverse2d(const cdouble* in, cdouble* out, int rows, int cols);

inline CVec forward2d(const CVec& in, int rows, int cols) {
    CVec out(in.size());
    forward2d(in.data(), out.data(), rows, cols);
    return out;
}
inline CVec inverse2d(const CVec& in, int rows, int cols) {
    CVec out(in.size());
    inverse2d(in.data(), out.data(), rows, cols);
    return out;
}

/// Square-raster helpers: side x side transform of a length side^2 vector.
inline CVec forward_sq(const CVec& in, int side) { return forward2d(in, side, side); }
inline CVec inverse_sq(const CVec& in, int side) { return inverse2d(in, side, side); }

/// Unitary 1D DFT of the whole vector (Cases III and IV operate on the
/// lexicographic vector directly).
inline CVec forward1d(const CVec& in) { return forward2d(in, 1, static_cast<int>(in.size())); }
inline CVec inverse1d(const CVec& in) { return inverse2d(in, 1, static_cast<int>(in.size())); }

} // namespace bpr::fft
