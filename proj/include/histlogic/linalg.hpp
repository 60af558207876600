#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "histlogic/errors.hpp"

namespace histlogic {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

/// Absolute tolerance for "equal to zero" decisions, applied to the
/// entrywise max norm of dense matrices. One knob, stated everywhere.
struct Tolerance {
  double eps = 1e-9;
};

inline constexpr Eigen::Index kMaxMatrixDim = Eigen::Index(1) << 20;

inline double max_norm(const Matrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline bool approx_zero(const Matrix& m, Tolerance tol = {}) {
  return max_norm(m) <= tol.eps;
}

inline bool approx_equal(const Matrix& a, const Matrix& b, Tolerance tol = {}) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  Matrix d = a - b;
  return approx_zero(d, tol);
}

inline bool all_finite(const Matrix& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      if (!std::isfinite(m(i, j).real()) || !std::isfinite(m(i, j).imag()))
        return false;
  return true;
}

inline void require_square(const Matrix& m, const char* who) {
  if (m.rows() != m.cols() || m.rows() < 1)
    throw DimensionMismatch(std::string(who) + ": matrix must be square and non-empty, got " +
                            std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
}

inline Matrix identity(Eigen::Index dim) { return Matrix::Identity(dim, dim); }

inline Matrix adjoint(const Matrix& m) { return m.adjoint(); }

/// Hermitian and idempotent within tolerance.
inline bool is_projector(const Matrix& m, Tolerance tol = {}) {
  if (m.rows() != m.cols() || m.rows() < 1) return false;
  Matrix mm = m * m;
  Matrix idem = m - mm;
  Matrix herm = m - Matrix(m.adjoint());
  return max_norm(idem) <= tol.eps && max_norm(herm) <= tol.eps;
}

inline bool commutes(const Matrix& a, const Matrix& b, Tolerance tol = {}) {
  require_square(a, "commutes");
  require_square(b, "commutes");
  if (a.rows() != b.rows())
    throw DimensionMismatch("commutes: dimensions differ (" + std::to_string(a.rows()) + " vs " +
                            std::to_string(b.rows()) + ")");
  Matrix c = a * b - b * a;
  return max_norm(c) <= tol.eps;
}

/// Kronecker product, first factor slowest index.
inline Matrix tensor(const Matrix& a, const Matrix& b) {
  if (a.rows() * b.rows() > kMaxMatrixDim || a.cols() * b.cols() > kMaxMatrixDim)
    throw CapacityExceeded("tensor: result dimension exceeds the dense matrix guard");
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline Matrix tensor(const std::vector<Matrix>& factors) {
  if (factors.empty()) throw EmptySpan("tensor: no factors");
  Matrix out = factors.front();
  for (std::size_t k = 1; k < factors.size(); ++k) out = tensor(out, factors[k]);
  return out;
}

inline bool is_hermitian(const Matrix& m, Tolerance tol = {}) {
  if (m.rows() != m.cols()) return false;
  Matrix h = m - Matrix(m.adjoint());
  return max_norm(h) <= tol.eps;
}

inline bool is_unitary(const Matrix& m, Tolerance tol = {}) {
  if (m.rows() != m.cols() || m.rows() < 1) return false;
  Matrix g = m.adjoint() * m - identity(m.rows());
  return max_norm(g) <= tol.eps;
}

/// exp(-i dt H) for Hermitian H (hbar = 1), via eigendecomposition so the
/// result is unitary up to roundoff.
inline Matrix mat_exp_propagator(const Matrix& h, double dt, Tolerance tol = {}) {
  require_square(h, "mat_exp_propagator");
  if (!all_finite(h)) throw NonHermitianInput("mat_exp_propagator: non-finite entries");
  if (!is_hermitian(h, tol))
    throw NonHermitianInput("mat_exp_propagator: Hamiltonian is not Hermitian within tolerance");
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  const auto& lam = es.eigenvalues();
  Vector phases(lam.size());
  for (Eigen::Index k = 0; k < lam.size(); ++k)
    phases(k) = std::exp(Complex(0.0, -dt * lam(k)));
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

/// Orthogonal projector onto the span of the given vectors. Rank is decided
/// by Gram-Schmidt: a vector whose residual norm falls below tol.eps is
/// treated as dependent and dropped.
inline Matrix projector_onto_span(const std::vector<Vector>& vectors, Tolerance tol = {}) {
  if (vectors.empty())
    throw EmptySpan("projector_onto_span: cannot infer dimension from an empty set");
  const Eigen::Index dim = vectors.front().size();
  if (dim < 1) throw DimensionMismatch("projector_onto_span: zero-dimensional vector");
  std::vector<Vector> basis;
  for (const Vector& v : vectors) {
    if (v.size() != dim)
      throw DimensionMismatch("projector_onto_span: vectors have differing dimensions");
    Vector r = v;
    // two passes of modified Gram-Schmidt for numerical stability
    for (int pass = 0; pass < 2; ++pass)
      for (const Vector& q : basis) r -= q.dot(r) * q;
    const double rn = r.norm();
    if (rn > tol.eps) basis.push_back(Vector(r / rn));
  }
  Matrix p = Matrix::Zero(dim, dim);
  for (const Vector& q : basis) p += q * q.adjoint();
  return p;
}

/// Rank of a projector = trace, rounded. Input must actually be a projector.
inline Eigen::Index rank_of_projector(const Matrix& p, Tolerance tol = {}) {
  if (!is_projector(p, tol))
    throw NonProjectorInput("rank_of_projector: input is not a projector within tolerance");
  return static_cast<Eigen::Index>(std::llround(p.trace().real()));
}

}  // namespace histlogic
