#pragma once

#include "bpr/core.hpp"
#include "bpr/types.hpp"

namespace bpr {

/// Per-frame propagated exit waves Psi_j.
struct ExitWaveStack {
    std::vector<CVec> frames;

    ExitWaveStack() = default;
    explicit ExitWaveStack(std::vector<CVec> fr) : frames(std::move(fr)) {}
    static ExitWaveStack zeros(int J, std::size_t len) {
        ExitWaveStack z; z.frames.assign(J, CVec(len)); return z;
    }
    int count() const { return static_cast<int>(frames.size()); }
    std::size_t total_len() const {
        std::size_t n = 0;
        for (const auto& f : frames) n += f.size();
        return n;
    }
};

// Stack-wide arithmetic used by the exit-wave solvers.
double stack_norm2sq(const ExitWaveStack& a);
inline double stack_norm2(const ExitWaveStack& a) { return std::sqrt(stack_norm2sq(a)); }
cdouble stack_dot(const ExitWaveStack& a, const ExitWaveStack& b);
ExitWaveStack stack_axpby(double alpha, const ExitWaveStack& a, double beta, const ExitWaveStack& b);
double stack_dist(const ExitWaveStack& a, const ExitWaveStack& b);

/// The bilinear measurement operator A(w, u) for all four model cases; the
/// DFT is unitary throughout.
ExitWaveStack forward(const Model& model, const Probe& w, const ComplexImage& u);

/// A_w* z: adjoint of the linearization in u at fixed probe w.
ComplexImage adjoint_wrt_u(const Model& model, const Probe& w, const ExitWaveStack& z);

/// A_u* z: adjoint of the linearization in w at fixed sample u.
Probe adjoint_wrt_w(const Model& model, const ComplexImage& u, const ExitWaveStack& z);

/// Closed-form normal operators A_w* A_w u and A_u* A_u w.
ComplexImage normal_wrt_u(const Model& model, const Probe& w, const ComplexImage& u);
Probe normal_wrt_w(const Model& model, const ComplexImage& u, const Probe& w);

/// Diagonals of the normal operators in their diagonalizing domain (the
/// spatial domain for Cases I/III, the Fourier domain for Cases II/IV); used
/// by the regularized least-squares factor updates and ADMM steps.
RVec normal_diag_u(const Model& model, const Probe& w);   // length n
RVec normal_diag_w(const Model& model, const ComplexImage& u); // length m_bar

/// (A_w* A_w + alpha I)^{-1} rhs via pointwise or DFT-domain division.
ComplexImage solve_normal_u(const Model& model, const Probe& w, const ComplexImage& rhs, double alpha);
Probe solve_normal_w(const Model& model, const ComplexImage& u, const Probe& rhs, double alpha);

/// Elementwise squared modulus |z|^2.
MeasurementStack intensity(const ExitWaveStack& z);

/// Each entry drawn Poisson(scale * f) / scale, deterministically from seed.
MeasurementStack simulate_poisson(const MeasurementStack& f, double scale, std::uint64_t seed);

} // namespace bpr
