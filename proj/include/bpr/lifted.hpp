#pragma once

#include "bpr/types.hpp"

#include <utility>

namespace bpr::lifted {

/// Dense row-major complex matrix; everything in this module is toy-scale.
struct CMat {
    int rows = 0, cols = 0;
    CVec data;

    CMat() = default;
    CMat(int r, int c) : rows(r), cols(c), data(std::size_t(r) * c) {}
    cdouble& at(int i, int j) { return data[std::size_t(i) * cols + j]; }
    const cdouble& at(int i, int j) const { return data[std::size_t(i) * cols + j]; }
};

/// Lifted convolutional instance: Fourier-side subspace matrices and the
/// scaled intensity constraints.
struct LiftedInstance {
    CMat Bhat;  // n x k1
    CMat Chat;  // n x k2
    RVec fbar;  // length n, nonnegative
};

struct LiftedSolution {
    CMat H;  // k1 x k1 PSD
    CMat M;  // k2 x k2 PSD
    CVec h;  // top factor of H
    CVec m;  // top factor of M
    SolverReport report;
};

/// Assemble the instance from ground-truth coefficients and subspaces.
LiftedInstance build_instance(const CVec& h, const CVec& m, const CMat& B, const CMat& C);

/// Frobenius-nearest PSD matrix; input must be Hermitian to 1e-10.
CMat psd_project(const CMat& X);

/// Full Hermitian eigendecomposition (cyclic Jacobi on the real symmetric
/// embedding); eigenvalues descending, eigenvectors in columns.
void hermitian_eig(const CMat& X, RVec& evals, CMat& evecs);

/// Elementwise projection onto {(v1, v2): v1 v2 >= fbar, v1 >= 0}.
std::pair<double, double> project_hyperbolic(double p, double q, double fbar);

/// Six-block ADMM for the trace-minimization relaxation.
LiftedSolution solve_lifted(const LiftedInstance& inst, const SolverConfig& config);

} // namespace bpr::lifted
