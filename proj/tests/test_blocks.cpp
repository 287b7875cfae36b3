#include <cmath>

#include "doctest.h"
#include "freeent/blocks.hpp"

using namespace freeent;

namespace {

MatrixTuple random_tuple(int n, int k, std::uint64_t seed) {
  RandomStream rng(seed, 3);
  std::vector<Hermitian> v;
  for (int i = 0; i < n; ++i) v.push_back(sample_gue(k, 1.0, rng));
  return MatrixTuple(std::move(v));
}

double max_diff(const MatrixTuple& a, const MatrixTuple& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, (a[i].matrix() - b[i].matrix()).cwiseAbs().maxCoeff());
  return d;
}

double hs_sum(const MatrixTuple& t) {
  double s = 0.0;
  for (const auto& h : t.matrices()) s += h.hs_norm_squared();
  return s;
}

}  // namespace

TEST_CASE("block_split examples") {
  CMatrix z(2, 2);
  z << Complex(1.5, 0), Complex(0.25, 0.75), Complex(0.25, -0.75), Complex(-2.0, 0);
  const MatrixTuple out = block_split(MatrixTuple({Hermitian(z)}), 2);
  REQUIRE(out.size() == 4);
  CHECK(out[0](0, 0).real() == doctest::Approx(1.5));    // a
  CHECK(out[1](0, 0).real() == doctest::Approx(-2.0));   // d
  CHECK(out[2](0, 0).real() == doctest::Approx(0.25));   // b
  CHECK(out[3](0, 0).real() == doctest::Approx(0.75));   // c

  const MatrixTuple t = random_tuple(2, 3, 1);
  CHECK(max_diff(block_split(t, 1), t) == 0.0);
  CHECK(max_diff(block_assemble(t, 1), t) == 0.0);
  CHECK_THROWS_AS(block_split(t, 2), std::invalid_argument);
  CHECK_THROWS_AS(block_assemble(random_tuple(3, 2, 1), 2), std::invalid_argument);
}

TEST_CASE("block_assemble inverts block_split") {
  for (const int N : {2, 3}) {
    for (const auto scaling : {BlockScaling::Halved, BlockScaling::Orthonormal}) {
      const MatrixTuple z = random_tuple(2, 2 * N, static_cast<std::uint64_t>(N));
      const MatrixTuple parts = block_split(z, N, scaling);
      CHECK(parts.size() == static_cast<std::size_t>(2 * N * N));
      CHECK(parts.dim() == 2);
      CHECK(max_diff(block_assemble(parts, N, scaling), z) < 1e-14);
    }
  }
}

TEST_CASE("block maps and the Hilbert-Schmidt norm") {
  for (const int N : {2, 3}) {
    const MatrixTuple z = random_tuple(1, 2 * N, 10 + static_cast<std::uint64_t>(N));
    // orthonormal scaling: an isometry, hence measure preserving
    CHECK(hs_sum(block_split(z, N, BlockScaling::Orthonormal)) == doctest::Approx(hs_sum(z)).epsilon(1e-12));
    // halved scaling: off-diagonal parts carry weight 2
    const MatrixTuple h = block_split(z, N, BlockScaling::Halved);
    double weighted = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) weighted += (i < static_cast<std::size_t>(N) ? 1.0 : 2.0) * h[i].hs_norm_squared();
    CHECK(weighted == doctest::Approx(hs_sum(z)).epsilon(1e-12));

    // Parseval over the block basis: assembling unit coordinate tuples gives
    // orthonormal matrices
    const int kp = 1, count = N * N;
    Eigen::MatrixXd gram(count, count);
    std::vector<RealVector<double>> coords;
    for (int e = 0; e < count; ++e) {
      std::vector<Hermitian> unit;
      for (int j = 0; j < count; ++j) unit.push_back(Hermitian::zero(kp));
      std::vector<double> one{1.0};
      unit[static_cast<std::size_t>(e)] = Hermitian::diagonal(std::span<const double>(one));
      coords.push_back(block_assemble(MatrixTuple(unit), N, BlockScaling::Orthonormal)[0].coordinates());
    }
    for (int a = 0; a < count; ++a)
      for (int b = 0; b < count; ++b) gram(a, b) = coords[static_cast<std::size_t>(a)].dot(coords[static_cast<std::size_t>(b)]);
    CHECK((gram - Eigen::MatrixXd::Identity(count, count)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("property: split outputs are Hermitian for random inputs") {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const MatrixTuple parts = block_split(random_tuple(2, 6, s), 3);
    for (const auto& p : parts.matrices()) CHECK((p.matrix() - p.matrix().adjoint()).cwiseAbs().maxCoeff() == 0.0);
  }
}
