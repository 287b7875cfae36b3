#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "freeent/spectra.hpp"
#include "freeent/spectra_io.hpp"

using namespace freeent;

namespace {

constexpr double kPi = std::numbers::pi;

// Log-energy through the cosine expansion
//   log|cos a - cos b| = -log 2 - sum_n (2/n) cos(n a) cos(n b),
// so I = log h - log 2 - sum_n (2/n) c_n^2 with c_n = int_0^pi w(theta) cos(n theta).
double chebyshev_log_energy(const std::function<double(double)>& p, double lo, double hi, int terms = 400) {
  const double m = 0.5 * (lo + hi), h = 0.5 * (hi - lo);
  const int cells = 40000;
  const double step = kPi / cells;
  std::vector<double> w(cells + 1);
  for (int i = 0; i <= cells; ++i) {
    const double th = i * step;
    w[static_cast<std::size_t>(i)] = p(m - h * std::cos(th)) * h * std::sin(th);
  }
  auto simpson = [&](int n) {
    double s = 0.0;
    for (int i = 0; i <= cells; ++i) {
      const double c = (i == 0 || i == cells) ? 1.0 : (i % 2 ? 4.0 : 2.0);
      s += c * w[static_cast<std::size_t>(i)] * std::cos(n * i * step);
    }
    return s * step / 3.0;
  };
  double sum = 0.0;
  for (int n = 1; n <= terms; ++n) {
    const double c = simpson(n);
    sum += 2.0 / n * c * c;
  }
  return std::log(h) - std::log(2.0) - sum;
}

double semicircle_cdf_simpson(double x, double v) {
  const double r = 2.0 * std::sqrt(v);
  if (x <= -r) return 0.0;
  if (x >= r) return 1.0;
  const int n = 4000;
  const double step = (x + r) / n;
  auto p = [&](double t) { return std::sqrt(std::max(0.0, r * r - t * t)) * 2.0 / (kPi * r * r); };
  double s = p(-r) + p(x);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * p(-r + i * step);
  return s * step / 3.0;
}

const Atomic& atoms_of(const SpectralMeasure& mu) { return std::get<Atomic>(mu.kind()); }

}  // namespace

TEST_CASE("measure validation") {
  CHECK_THROWS_AS(SpectralMeasure(Atomic{{{0.0, 0.4}}}), std::invalid_argument);
  CHECK_THROWS_AS(SpectralMeasure(Atomic{{{0.0, -0.5}, {1.0, 1.5}}}), std::invalid_argument);
  CHECK_THROWS_AS(SpectralMeasure(GriddedDensity{0.0, 1.0, {1.0, 2.0}}), std::invalid_argument);
  CHECK_NOTHROW(SpectralMeasure(GriddedDensity{0.0, 1.0, {1.0, 1.0}}));
  CHECK_THROWS_AS(SpectralMeasure(Semicircle{0.0}), std::invalid_argument);
  CHECK_THROWS_AS(SpectralMeasure(Uniform{1.0, 1.0}), std::invalid_argument);
}

TEST_CASE("esd examples") {
  const std::vector<double> pm{1, -1};
  const auto a = atoms_of(esd(Hermitian::diagonal(std::span<const double>(pm))));
  REQUIRE(a.atoms.size() == 2);
  CHECK(a.atoms[0] == std::make_pair(-1.0, 0.5));
  CHECK(a.atoms[1] == std::make_pair(1.0, 0.5));
  const auto id = atoms_of(esd(Hermitian::identity(3)));
  REQUIRE(id.atoms.size() == 1);
  CHECK(id.atoms[0].first == doctest::Approx(1.0));
  CHECK(id.atoms[0].second == doctest::Approx(1.0));

  const auto ev = atoms_of(esd(sample_gue(256, 1.0, 77)));
  double ks = 0.0, cum = 0.0;
  for (const auto& [x, w] : ev.atoms) {
    const double f = semicircle_cdf_simpson(x, 1.0);
    ks = std::max({ks, std::abs(f - cum), std::abs(f - cum - w)});
    cum += w;
  }
  CHECK(ks < 0.05);
  CHECK(kolmogorov_distance(esd(sample_gue(256, 1.0, 77)), unit_semicircle()) == doctest::Approx(ks).epsilon(1e-6));
}

TEST_CASE("cdf of the closed-form families") {
  CHECK(unit_semicircle().cdf(0.7) == doctest::Approx(semicircle_cdf_simpson(0.7, 1.0)).epsilon(1e-5));
  CHECK(SpectralMeasure(Uniform{0, 2}).cdf(0.5) == doctest::Approx(0.25));
  CHECK(unit_arcsine().cdf(0.0) == doctest::Approx(0.5));
  CHECK(SpectralMeasure::normalized_grid(0, 1, {1, 1, 1}).cdf(0.3) == doctest::Approx(0.3));
}

TEST_CASE("log_energy examples") {
  CHECK(std::abs(log_energy(Uniform{0.0, 1.0}) + 1.5) < 1e-3);
  const double sc_oracle = chebyshev_log_energy([](double x) { return std::sqrt(std::max(0.0, 4 - x * x)) / (2 * kPi); }, -2, 2);
  CHECK(sc_oracle == doctest::Approx(-0.25).epsilon(1e-6));
  CHECK(std::abs(log_energy(unit_semicircle()) + 0.25) < 1e-3);
  CHECK(std::abs(log_energy(unit_semicircle()) - sc_oracle) < 1e-8);
  CHECK(log_energy(Atomic{{{0.0, 1.0}}}) == -std::numeric_limits<double>::infinity());
  CHECK(log_energy(unit_two_atom()) == -std::numeric_limits<double>::infinity());
}

TEST_CASE("log_energy of a gridded density matches the cosine-expansion oracle") {
  // triangle density on [-1, 1]
  std::vector<double> values(2049);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double x = -1.0 + 2.0 * static_cast<double>(i) / 2048.0;
    values[i] = 1.0 - std::abs(x);
  }
  const SpectralMeasure tri = GriddedDensity{-1.0, 1.0, values};
  const double oracle = chebyshev_log_energy([](double x) { return std::max(0.0, 1.0 - std::abs(x)); }, -1, 1);
  CHECK(std::abs(log_energy(tri) - oracle) < 1e-5);
}

TEST_CASE("chi_single examples") {
  CHECK(chi_single(unit_semicircle()) == doctest::Approx(1.418939).epsilon(1e-6));
  for (const double t : {0.25, 2.0, 5.0})
    CHECK(chi_single(Semicircle{t}) == doctest::Approx(0.5 * std::log(2 * kPi * std::numbers::e * t)).epsilon(1e-9));
  CHECK(chi_single(Atomic{{{0.0, 1.0}}}) == -std::numeric_limits<double>::infinity());
}

TEST_CASE("cov_correction examples") {
  const SpectralMeasure sc = unit_semicircle();
  CHECK(std::abs(cov_correction(sc, ScalarField::identity(-3, 3))) < 1e-12);
  for (const SpectralMeasure& mu : {sc, SpectralMeasure(Uniform{-1, 2}), unit_two_atom(), unit_arcsine()})
    CHECK(cov_correction(mu, ScalarField::affine(2.5, -1.0, -3, 3)) == doctest::Approx(std::log(2.5)).epsilon(1e-10));
  CHECK(cov_correction(sc, ScalarField::affine(-2.0, 0.0, -3, 3)) == doctest::Approx(std::log(2.0)).epsilon(1e-10));

  const ScalarField cubic = ScalarField::polynomial({0, 1, 0, 1}, -2, 2);
  const double direct = cov_correction(sc, cubic);
  const double oracle = log_energy(pushforward(sc, cubic)) - log_energy(sc);
  CHECK(std::abs(direct - oracle) < 2e-3);

  CHECK_THROWS_AS(ScalarField::polynomial({0, -1, 0, 1}, -2, 2), std::invalid_argument);
  CHECK_THROWS_AS(cov_correction(sc, ScalarField::polynomial({0, -1, 0, 1}, -2, 2, false)), std::invalid_argument);
  CHECK_THROWS_AS(cov_correction(sc, ScalarField::identity(-1, 1)), std::domain_error);
}

TEST_CASE("cov_correction on atoms uses divided differences") {
  const SpectralMeasure mu = Atomic{{{-1.0, 0.25}, {0.5, 0.75}}};
  auto f = [](double x) { return x * x * x + 2 * x; };
  auto df = [](double x) { return 3 * x * x + 2; };
  const double dd = (f(0.5) - f(-1.0)) / 1.5;
  const double expected = 0.0625 * std::log(df(-1.0)) + 0.5625 * std::log(df(0.5)) + 2 * 0.1875 * std::log(dd);
  CHECK(cov_correction(mu, ScalarField::polynomial({0, 2, 0, 1}, -2, 2)) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("pushforward examples") {
  const SpectralMeasure u = Uniform{0, 1};
  const SpectralMeasure same = pushforward(u, ScalarField::identity(0, 1));
  for (const double x : {0.1, 0.5, 0.9}) CHECK(same.density(x) == doctest::Approx(1.0).epsilon(1e-9));

  const auto atoms = atoms_of(pushforward(unit_two_atom(), ScalarField::polynomial({0, 0, 0, 1}, -1, 1, false)));
  REQUIRE(atoms.atoms.size() == 2);
  CHECK(atoms.atoms[0].first == doctest::Approx(-1.0));
  CHECK(atoms.atoms[1].first == doctest::Approx(1.0));
  CHECK(atoms.atoms[0].second == doctest::Approx(0.5));

  const SpectralMeasure doubled = pushforward(u, ScalarField::affine(2, 0, 0, 1));
  CHECK(doubled.support().first == doctest::Approx(0.0));
  CHECK(doubled.support().second == doctest::Approx(2.0));
  for (const double x : {0.1, 1.0, 1.9}) CHECK(doubled.density(x) == doctest::Approx(0.5).epsilon(1e-9));

  const SpectralMeasure image = pushforward(unit_semicircle(), ScalarField::polynomial({0, 1, 0, 1}, -2, 2));
  CHECK(image.moment(0) == doctest::Approx(1.0).epsilon(1e-6));
  // x^3 + x has zero derivative nowhere, x^3 does at 0
  CHECK_THROWS_AS(pushforward(Uniform{-1, 1}, ScalarField::polynomial({0, 0, 0, 1}, -1, 1, false), 2049),
                  std::domain_error);
}

TEST_CASE("conjugate_variable examples") {
  const ScalarField j = conjugate_variable(unit_semicircle());
  double err = 0.0;
  for (double x = -1.8; x <= 1.8; x += 0.01) err = std::max(err, std::abs(j(x) - x));
  CHECK(err < 1e-2);
  CHECK(std::abs(j(0.0)) < 1e-12);
  CHECK(std::abs(conjugate_value(Uniform{-1, 1}, 0.0)) < 1e-12);

  const double c = 1.5;
  const ScalarField jc = conjugate_variable(Semicircle{c * c}, 512);
  err = 0.0;
  for (double x = -0.9 * 2 * c; x <= 0.9 * 2 * c; x += 0.01) err = std::max(err, std::abs(jc(x) - x / (c * c)));
  CHECK(err < 1e-2);

  CHECK_THROWS_AS(j(2.5), std::domain_error);
  CHECK_THROWS_AS(conjugate_value(unit_semicircle(), 2.0), std::domain_error);
  CHECK_THROWS_AS(conjugate_value(unit_two_atom(), 0.0), std::invalid_argument);
}

TEST_CASE("conjugate variable of the uniform law matches its closed form") {
  // 2 PV int_{-1}^{1} (1/2) / (x - t) dt = log((1 + x) / (1 - x))
  for (const double x : {-0.9, -0.3, 0.2, 0.75}) {
    CHECK(conjugate_value(Uniform{-1, 1}, x) == doctest::Approx(std::log((1 + x) / (1 - x))).epsilon(1e-10));
  }
}

TEST_CASE("inner_product_stationarity examples") {
  const SpectralMeasure sc = unit_semicircle();
  auto [l1, r1] = inner_product_stationarity(sc, {0, 1});
  CHECK(std::abs(l1 - 1.0) < 1e-2);
  CHECK(std::abs(r1 - 1.0) < 1e-2);
  auto [l2, r2] = inner_product_stationarity(sc, {0, 0, 1});
  CHECK(std::abs(l2) < 1e-2);
  CHECK(std::abs(r2) < 1e-2);
  auto [l3, r3] = inner_product_stationarity(sc, {0, 0, 0, 1});
  CHECK(std::abs(l3 - 2.0) < 2e-2);
  CHECK(std::abs(r3 - 2.0) < 2e-2);
}

TEST_CASE("property: log_energy is translation invariant") {
  for (const double c : {-3.0, 0.7, 10.0}) {
    CHECK(std::abs(log_energy(Semicircle{1.0, c}) - log_energy(unit_semicircle())) < 1e-6);
    CHECK(std::abs(log_energy(Uniform{c, c + 1}) - log_energy(Uniform{0, 1})) < 1e-6);
  }
}

TEST_CASE("property: dilation shifts log_energy by log a") {
  for (const double a : {0.5, 2.0, 3.7}) {
    const SpectralMeasure image = pushforward(unit_semicircle(), ScalarField::affine(a, 0, -2, 2));
    CHECK(std::abs(log_energy(image) - log_energy(unit_semicircle()) - std::log(a)) < 1e-4);
  }
}

TEST_CASE("property: cov_correction equals the log-energy difference for random monotone cubics") {
  RandomStream rng(12, 0);
  for (int trial = 0; trial < 20; ++trial) {
    // f' = 3 c3 x^2 + 2 c2 x + c1 > 0 when c2^2 < 3 c1 c3
    const double c3 = 0.1 + rng.uniform();
    const double c1 = 0.2 + rng.uniform();
    const double c2 = (2.0 * rng.uniform() - 1.0) * 0.95 * std::sqrt(3.0 * c1 * c3);
    const double c0 = rng.normal();
    const ScalarField f = ScalarField::polynomial({c0, c1, c2, c3}, -2, 2);
    const SpectralMeasure& mu = trial % 2 ? unit_semicircle() : SpectralMeasure(Uniform{-1.5, 2});
    const double direct = cov_correction(mu, f);
    const double oracle = log_energy(pushforward(mu, f)) - log_energy(mu);
    CHECK(std::abs(direct - oracle) < 2e-3);
  }
}

TEST_CASE("property: the semicircle maximizes chi_single among variance-one laws") {
  const double best = chi_single(unit_semicircle());
  for (const SpectralMeasure& mu : {unit_uniform(), unit_arcsine(), unit_two_atom()}) {
    CHECK(mu.moment(2) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(chi_single(mu) < best);
  }
}

TEST_CASE("property: the semicircle conjugate variable passes the stationarity identity") {
  for (const std::vector<double>& p : {std::vector<double>{0, 1}, {0, 0, 1}, {0, 0, 0, 1}}) {
    const auto [lhs, rhs] = inner_product_stationarity(unit_semicircle(), p);
    CHECK(std::abs(lhs - rhs) < 1e-6);
  }
}

TEST_CASE("measure documents round-trip") {
  const std::vector<SpectralMeasure> cases{unit_semicircle(), Semicircle{2.0, 0.5}, Uniform{-1, 3}, unit_arcsine(),
                                           unit_two_atom(), SpectralMeasure(GriddedDensity{0, 1, {1, 1, 1}})};
  for (const auto& mu : cases) {
    const SpectralMeasure back = measure_from_json(nlohmann::json::parse(measure_to_json(mu).dump()));
    CHECK(back.kind_name() == mu.kind_name());
    CHECK(back.cdf(0.3) == mu.cdf(0.3));
  }
  CHECK_THROWS_AS(measure_from_json(nlohmann::json::parse(R"({"kind":"cauchy"})")), std::invalid_argument);
  CHECK_THROWS_AS(measure_from_json(nlohmann::json::parse(R"({"kind":"uniform","lo":0})")), std::invalid_argument);
  CHECK_THROWS_AS(measure_from_json(nlohmann::json::parse(R"({"kind":"atomic","atoms":[[0,0.5]]})")), std::invalid_argument);
}

TEST_CASE("map specifications") {
  CHECK(map_from_string("affine:2,1", 0, 1)(0.5) == doctest::Approx(2.0));
  CHECK(map_from_string("poly:0,1,0,1", -1, 1)(0.5) == doctest::Approx(0.625));
  CHECK(map_from_string("arctan:2", -1, 1)(0.5) == doctest::Approx(std::atan(1.0)).epsilon(1e-10));
  CHECK(map_from_string("identity", -1, 1)(0.25) == doctest::Approx(0.25));
  CHECK_THROWS_AS(map_from_string("affine:1", 0, 1), std::invalid_argument);
  CHECK_THROWS_AS(map_from_string("sqrt", 0, 1), std::invalid_argument);
}
