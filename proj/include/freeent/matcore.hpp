#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "freeent/rng.hpp"

namespace freeent {

template <typename Real>
using ComplexMatrix = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Real>
using RealVector = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

using CMatrix = ComplexMatrix<double>;
using Complex = std::complex<double>;

class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A k x k self-adjoint matrix (an element of M_k^sa).
///
/// Construction symmetrizes the input, so entry(i,j) == conj(entry(j,i)) holds
/// bit-exactly afterwards and the diagonal is real.
///
/// Lebesgue measure on M_k^sa is taken with respect to the inner product
/// <a,b> = Tr(ab) (non-normalized trace). The orthonormal real coordinates are
///   a_ii                   for i = 0..k-1,
///   sqrt(2) Re a_ij, sqrt(2) Im a_ij   for i < j (row-major over the upper triangle),
/// so the volume element is prod_i da_ii * prod_{i<j} 2 dRe(a_ij) dIm(a_ij) and
/// ||a||_HS^2 = Tr(a^2) is the squared Euclidean norm of the coordinates.
template <typename Real>
class BasicHermitian {
 public:
  using Scalar = std::complex<Real>;
  using Matrix = ComplexMatrix<Real>;

  BasicHermitian() = default;

  /// Rejects non-finite entries and matrices whose anti-Hermitian part exceeds
  /// tol * (1 + max |entry|).
  explicit BasicHermitian(const Matrix& m, Real tol = Real(1e-9)) {
    if (m.rows() != m.cols()) throw std::invalid_argument("Hermitian: matrix is not square");
    if (!m.allFinite()) throw std::invalid_argument("Hermitian: non-finite entry");
    const Real scale = m.size() == 0 ? Real(0) : m.cwiseAbs().maxCoeff();
    const Matrix skew = m - m.adjoint();
    if (m.size() > 0 && skew.cwiseAbs().maxCoeff() > tol * (Real(1) + scale)) {
      throw std::invalid_argument("Hermitian: matrix is not self-adjoint");
    }
    m_ = (m + m.adjoint()) * Real(0.5);
    for (Eigen::Index i = 0; i < m_.rows(); ++i) {
      m_(i, i) = Scalar(m_(i, i).real(), Real(0));
      for (Eigen::Index j = i + 1; j < m_.cols(); ++j) m_(j, i) = std::conj(m_(i, j));
    }
  }

  static BasicHermitian identity(int k) { return BasicHermitian(Matrix::Identity(k, k)); }
  static BasicHermitian zero(int k) { return BasicHermitian(Matrix::Zero(k, k)); }

  static BasicHermitian diagonal(std::span<const Real> values) {
    const auto k = static_cast<Eigen::Index>(values.size());
    Matrix m = Matrix::Zero(k, k);
    for (Eigen::Index i = 0; i < k; ++i) m(i, i) = values[static_cast<std::size_t>(i)];
    return BasicHermitian(m);
  }

  /// Inverse of coordinates(); expects k*k values.
  static BasicHermitian from_coordinates(int k, std::span<const Real> c) {
    if (c.size() != static_cast<std::size_t>(k) * static_cast<std::size_t>(k)) {
      throw std::invalid_argument("Hermitian: coordinate count must be k^2");
    }
    const Real inv_sqrt2 = Real(1) / std::sqrt(Real(2));
    Matrix m(k, k);
    std::size_t pos = 0;
    for (int i = 0; i < k; ++i) m(i, i) = c[pos++];
    for (int i = 0; i < k; ++i) {
      for (int j = i + 1; j < k; ++j) {
        m(i, j) = Scalar(c[pos] * inv_sqrt2, c[pos + 1] * inv_sqrt2);
        m(j, i) = std::conj(m(i, j));
        pos += 2;
      }
    }
    return BasicHermitian(m);
  }

  RealVector<Real> coordinates() const {
    const auto k = dim();
    RealVector<Real> c(static_cast<Eigen::Index>(k) * k);
    const Real sqrt2 = std::sqrt(Real(2));
    Eigen::Index pos = 0;
    for (int i = 0; i < k; ++i) c(pos++) = m_(i, i).real();
    for (int i = 0; i < k; ++i) {
      for (int j = i + 1; j < k; ++j) {
        c(pos++) = sqrt2 * m_(i, j).real();
        c(pos++) = sqrt2 * m_(i, j).imag();
      }
    }
    return c;
  }

  int dim() const { return static_cast<int>(m_.rows()); }
  const Matrix& matrix() const { return m_; }
  Scalar operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

  /// Tr(a^2) = ||a||_HS^2.
  Real hs_norm_squared() const { return m_.squaredNorm(); }

  friend BasicHermitian operator+(const BasicHermitian& a, const BasicHermitian& b) {
    return BasicHermitian(Matrix(a.m_ + b.m_));
  }
  friend BasicHermitian operator-(const BasicHermitian& a, const BasicHermitian& b) {
    return BasicHermitian(Matrix(a.m_ - b.m_));
  }
  friend BasicHermitian operator*(Real c, const BasicHermitian& a) { return BasicHermitian(Matrix(c * a.m_)); }

 private:
  Matrix m_;
};

/// Ordered tuple of self-adjoint matrices of a common dimension.
template <typename Real>
class BasicMatrixTuple {
 public:
  using Element = BasicHermitian<Real>;

  BasicMatrixTuple() = default;
  explicit BasicMatrixTuple(std::vector<Element> mats) : mats_(std::move(mats)) {
    for (const auto& m : mats_) {
      if (m.dim() != mats_.front().dim()) {
        throw std::invalid_argument("MatrixTuple: matrices must share one dimension");
      }
    }
  }

  std::size_t size() const { return mats_.size(); }
  bool empty() const { return mats_.empty(); }
  int dim() const { return mats_.empty() ? 0 : mats_.front().dim(); }
  const Element& operator[](std::size_t i) const { return mats_[i]; }
  const std::vector<Element>& matrices() const { return mats_; }

  /// (x_1..x_n, y_1..y_m)
  BasicMatrixTuple concat(const BasicMatrixTuple& other) const {
    if (!empty() && !other.empty() && dim() != other.dim()) {
      throw std::invalid_argument("MatrixTuple: dimension mismatch in concat");
    }
    std::vector<Element> all = mats_;
    all.insert(all.end(), other.mats_.begin(), other.mats_.end());
    return BasicMatrixTuple(std::move(all));
  }

 private:
  std::vector<Element> mats_;
};

using Hermitian = BasicHermitian<double>;
using MatrixTuple = BasicMatrixTuple<double>;

/// (1/k) Tr m.
template <typename Real>
Real normalized_trace(const BasicHermitian<Real>& m) {
  if (m.dim() == 0) return Real(0);
  return m.matrix().diagonal().real().sum() / static_cast<Real>(m.dim());
}

/// tau_k(x_{w_0} x_{w_1} ... x_{w_{p-1}}) with 0-based letters; the empty word gives 1.
template <typename Real>
std::complex<Real> word_trace(const BasicMatrixTuple<Real>& t, std::span<const int> word) {
  for (const int letter : word) {
    if (letter < 0 || static_cast<std::size_t>(letter) >= t.size()) {
      throw std::out_of_range("word_trace: letter " + std::to_string(letter) + " out of range");
    }
  }
  if (word.empty()) return std::complex<Real>(1);
  const int k = t.dim();
  if (word.size() == 1) return std::complex<Real>(normalized_trace(t[static_cast<std::size_t>(word[0])]));
  ComplexMatrix<Real> prefix = t[static_cast<std::size_t>(word[0])].matrix();
  for (std::size_t p = 1; p + 1 < word.size(); ++p) {
    prefix = prefix * t[static_cast<std::size_t>(word[p])].matrix();
  }
  // Tr(P L) = sum_ij P_ij L_ji
  const auto& last = t[static_cast<std::size_t>(word.back())].matrix();
  return prefix.cwiseProduct(last.transpose()).sum() / static_cast<Real>(k);
}

/// Real part of word_trace. For self-adjoint tuples the imaginary part vanishes
/// whenever the word equals its reversal up to rotation.
template <typename Real>
Real eval_word_trace(const BasicMatrixTuple<Real>& t, std::span<const int> word) {
  return word_trace(t, word).real();
}

/// Ascending eigenvalues by cyclic complex Jacobi rotations.
///
/// Each rotation first removes the phase of a_pq (a diagonal unitary on
/// column q) and then applies the real symmetric Jacobi rotation. Sweeps 1-3
/// skip entries below 0.2 * off / k^2. Terminates once the off-diagonal
/// Frobenius mass is below 1e-12 ||m||_F (or an absolute floor for the zero
/// matrix); throws ConvergenceError after max_sweeps.
template <typename Real>
std::vector<Real> eigenvalues(const BasicHermitian<Real>& m, int max_sweeps = 100) {
  using Scalar = std::complex<Real>;
  const int k = m.dim();
  ComplexMatrix<Real> a = m.matrix();
  const Real total = std::sqrt(a.squaredNorm());
  const Real target = Real(1e-12) * total + std::numeric_limits<Real>::min();

  auto off_norm = [&] {
    Real s = 0;
    for (int p = 0; p < k; ++p)
      for (int q = p + 1; q < k; ++q) s += std::norm(a(p, q));
    return std::sqrt(Real(2) * s);
  };

  bool converged = k <= 1;
  for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
    const Real off = off_norm();
    if (off <= target) {
      converged = true;
      break;
    }
    const Real threshold = sweep < 3 ? Real(0.2) * off / static_cast<Real>(k * k) : Real(0);
    for (int p = 0; p < k - 1; ++p) {
      for (int q = p + 1; q < k; ++q) {
        const Real r = std::abs(a(p, q));
        if (r == Real(0) || r < threshold) continue;
        const Scalar phase = a(p, q) / r;  // a_pq = r e^{i phi}
        const Real app = a(p, p).real();
        const Real aqq = a(q, q).real();
        const Real theta = Real(0.5) * (aqq - app) / r;
        Real t = Real(1) / (std::abs(theta) + std::sqrt(theta * theta + Real(1)));
        if (theta < 0) t = -t;
        const Real c = Real(1) / std::sqrt(t * t + Real(1));
        const Real s = t * c;
        // V = D P with D = diag(.., e^{-i phi} at q, ..), P the real rotation.
        const Scalar dq = std::conj(phase);
        const Scalar vpp = c, vpq = s, vqp = -s * dq, vqq = c * dq;
        for (int i = 0; i < k; ++i) {  // A <- A V
          const Scalar aip = a(i, p), aiq = a(i, q);
          a(i, p) = aip * vpp + aiq * vqp;
          a(i, q) = aip * vpq + aiq * vqq;
        }
        for (int j = 0; j < k; ++j) {  // A <- V^* A
          const Scalar apj = a(p, j), aqj = a(q, j);
          a(p, j) = std::conj(vpp) * apj + std::conj(vqp) * aqj;
          a(q, j) = std::conj(vpq) * apj + std::conj(vqq) * aqj;
        }
        a(p, q) = a(q, p) = Scalar(0);
        a(p, p) = Scalar(a(p, p).real(), 0);
        a(q, q) = Scalar(a(q, q).real(), 0);
      }
    }
  }
  if (!converged && off_norm() > target) {
    throw ConvergenceError("eigenvalues: Jacobi iteration did not converge within " +
                           std::to_string(max_sweeps) + " sweeps");
  }
  std::vector<Real> values(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) values[static_cast<std::size_t>(i)] = a(i, i).real();
  std::sort(values.begin(), values.end());
  return values;
}

/// ||m||_op = max |eigenvalue|.
template <typename Real>
Real operator_norm(const BasicHermitian<Real>& m) {
  if (m.dim() == 0) return Real(0);
  const auto ev = eigenvalues(m);
  return std::max(std::abs(ev.front()), std::abs(ev.back()));
}

// -- samplers (double precision, Philox streams) ----------------------------

/// GUE with E[tau_k(x^2)] = variance: each orthonormal coordinate is
/// N(0, variance / k). Uses RandomStream(seed, 0).
Hermitian sample_gue(int k, double variance, std::uint64_t seed);
Hermitian sample_gue(int k, double variance, RandomStream& rng);

/// Uniform point of the Euclidean ball of the given radius in the k^2
/// orthonormal coordinates of M_k^sa.
Hermitian sample_hs_ball(int k, double radius, RandomStream& rng);

/// log of the volume of the unit ball in R^d.
double log_unit_ball_volume(int d);

class RejectionStall : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// n-tuple uniform (for lambda) on {each ||x_i||_op <= R}, by rejection from
/// the Hilbert-Schmidt ball of radius R sqrt(k) per coordinate. Throws
/// RejectionStall when fewer than 2 of the first 2e6 proposals for one
/// coordinate are accepted (acceptance below 1e-6).
MatrixTuple sample_ball(int k, int n, double radius, std::uint64_t seed);

/// Haar-distributed k x k unitary (QR of a complex Ginibre matrix with the
/// phases of diag(R) removed).
CMatrix sample_haar_unitary(int k, RandomStream& rng);

}  // namespace freeent
