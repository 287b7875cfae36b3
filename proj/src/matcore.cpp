#include "freeent/matcore.hpp"

#include <cmath>
#include <numbers>

namespace freeent {

Hermitian sample_gue(int k, double variance, std::uint64_t seed) {
  RandomStream rng(seed, 0);
  return sample_gue(k, variance, rng);
}

Hermitian sample_gue(int k, double variance, RandomStream& rng) {
  if (!(variance > 0.0)) throw std::invalid_argument("sample_gue: variance must be positive");
  const double sigma = std::sqrt(variance / k);
  std::vector<double> coords(static_cast<std::size_t>(k) * k);
  for (auto& c : coords) c = sigma * rng.normal();
  return Hermitian::from_coordinates(k, coords);
}

double log_unit_ball_volume(int d) {
  const double half = 0.5 * d;
  return half * std::log(std::numbers::pi) - std::lgamma(half + 1.0);
}

Hermitian sample_hs_ball(int k, double radius, RandomStream& rng) {
  const int d = k * k;
  std::vector<double> coords(static_cast<std::size_t>(d));
  double norm2 = 0.0;
  for (auto& c : coords) {
    c = rng.normal();
    norm2 += c * c;
  }
  const double r = radius * std::pow(rng.uniform(), 1.0 / d) / std::sqrt(norm2);
  for (auto& c : coords) c *= r;
  return Hermitian::from_coordinates(k, coords);
}

MatrixTuple sample_ball(int k, int n, double radius, std::uint64_t seed) {
  if (!(radius > 0.0)) throw std::invalid_argument("sample_ball: radius must be positive");
  constexpr long kWindow = 2'000'000;
  RandomStream rng(seed, 0);
  const double hs_radius = radius * std::sqrt(static_cast<double>(k));
  std::vector<Hermitian> mats;
  mats.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    long attempts = 0;
    for (;;) {
      Hermitian x = sample_hs_ball(k, hs_radius, rng);
      ++attempts;
      if (operator_norm(x) <= radius) {
        mats.push_back(std::move(x));
        break;
      }
      if (attempts >= kWindow) {
        throw RejectionStall(
            "sample_ball: acceptance rate below 1e-6 for k=" + std::to_string(k) +
            "; use the Gaussian importance estimator instead of ball rejection");
      }
    }
  }
  return MatrixTuple(std::move(mats));
}

CMatrix sample_haar_unitary(int k, RandomStream& rng) {
  CMatrix g(k, k);
  const double s = std::sqrt(0.5);
  for (int j = 0; j < k; ++j)
    for (int i = 0; i < k; ++i) g(i, j) = Complex(s * rng.normal(), s * rng.normal());
  Eigen::HouseholderQR<CMatrix> qr(g);
  CMatrix q = qr.householderQ();
  const CMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < k; ++j) {
    const double mag = std::abs(r(j, j));
    if (mag > 0.0) q.col(j) *= r(j, j) / mag;
  }
  return q;
}

}  // namespace freeent
