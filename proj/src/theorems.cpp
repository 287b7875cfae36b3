#include "freeent/theorems.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>

#include "freeent/blocks.hpp"
#include "freeent/microstates.hpp"
#include "freeent/ncalg.hpp"
#include "freeent/spectra_io.hpp"

namespace freeent {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTwoPiE = 2.0 * std::numbers::pi * std::numbers::e;

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v < 0 ? "-inf" : "inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

nlohmann::json num(double v) {
  if (std::isfinite(v)) return v;
  return fmt(v);
}

// How far a row is from passing; positive means it fails.
double shortfall(const CheckRow& r, Relation rel) {
  if (std::isnan(r.lhs) || std::isnan(r.rhs)) return kInf;
  double gap = 0.0;
  switch (rel) {
    case Relation::LessEqual:
      if (r.lhs == -kInf) return -kInf;
      if (r.rhs == -kInf) return kInf;
      gap = r.lhs - r.rhs;
      break;
    case Relation::GreaterEqual:
      if (r.rhs == -kInf) return -kInf;
      if (r.lhs == -kInf) return kInf;
      gap = r.rhs - r.lhs;
      break;
    case Relation::Equal:
      if (r.lhs == -kInf && r.rhs == -kInf) return -kInf;
      if (r.lhs == -kInf || r.rhs == -kInf) return kInf;
      gap = std::abs(r.lhs - r.rhs);
      break;
  }
  return gap - r.tolerance;
}

struct Rows {
  std::vector<CheckRow> rows;
  std::vector<Relation> relations;

  void add(std::string label, double lhs, double rhs, Relation rel, double tol) {
    CheckRow r{std::move(label), lhs, rhs, tol, relation_holds(lhs, rhs, rel, tol)};
    rows.push_back(r);
    relations.push_back(rel);
  }
};

CheckReport finish(std::string id, Rows rows, std::vector<std::string> diagnostics) {
  CheckReport out;
  out.id = std::move(id);
  out.tier = check_tier(out.id);
  out.diagnostics = std::move(diagnostics);
  if (rows.rows.empty()) throw CheckConfigError(out.id + ": nothing to compare");
  std::size_t worst = 0;
  double worst_gap = -kInf;
  bool all = true;
  for (std::size_t i = 0; i < rows.rows.size(); ++i) {
    const double gap = shortfall(rows.rows[i], rows.relations[i]);
    all = all && rows.rows[i].pass;
    if (i == 0 || gap > worst_gap) {
      worst = i;
      worst_gap = gap;
    }
  }
  const CheckRow& w = rows.rows[worst];
  out.lhs = w.lhs;
  out.rhs = w.rhs;
  out.tolerance = w.tolerance;
  out.relation = rows.relations[worst];
  out.pass = all;
  out.diagnostics.insert(out.diagnostics.begin(), "deciding row: " + w.label);
  out.rows = std::move(rows.rows);
  return out;
}

// ---- deterministic checks -------------------------------------------------

ScalarField map_on_support(const CheckConfig& cfg, const SpectralMeasure& mu, const std::string& fallback) {
  const auto [lo, hi] = mu.support();
  const double pad = 1e-9 * (1.0 + hi - lo);
  return map_from_string(cfg.map.value_or(fallback), lo - pad, hi + pad);
}

CheckReport check_cov1(const CheckConfig& cfg) {
  const SpectralMeasure mu = cfg.measure.value_or(unit_semicircle());
  const ScalarField f = map_on_support(cfg, mu, "identity");
  const double pushed = chi_single(pushforward(mu, f));
  const double base = chi_single(mu);
  const double corr = cov_correction(mu, f);
  Rows rows;
  rows.add("chi(f(X)) vs chi(X) + correction", pushed, base + corr, Relation::Equal, 2e-3);
  return finish("T-COV1", std::move(rows),
                {"measure " + mu.kind_name() + ", map " + cfg.map.value_or("identity"),
                 "chi(X) = " + fmt(base) + ", correction = " + fmt(corr)});
}

std::vector<double> poly_coefficients(const std::string& map) {
  if (map.rfind("poly:", 0) != 0) throw CheckConfigError("T-COVGEN needs a polynomial map \"poly:c0,c1,...\"");
  std::vector<double> c;
  std::stringstream ss(map.substr(5));
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      c.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw CheckConfigError("T-COVGEN: bad coefficient \"" + item + "\"");
    }
  }
  if (c.empty()) throw CheckConfigError("T-COVGEN: empty polynomial");
  return c;
}

CheckReport check_covgen(const CheckConfig& cfg) {
  const std::string map = cfg.map.value_or("poly:0,1,0,1");
  const std::vector<double> c = poly_coefficients(map);
  const int k = 6;
  const Hermitian x = sample_gue(k, 1.0, cfg.seed);
  NcPoly F(1);
  NcPoly power = NcPoly::constant(1, 1.0);
  for (const double cj : c) {
    F += Complex(cj) * power;
    power = multiply(power, NcPoly::variable(1, 0));
  }
  const double lhs = logabs_functional(jacobian({F}, MatrixTuple({x})));
  const std::vector<double> ev = eigenvalues(x);
  const auto [lo, hi] = std::minmax_element(ev.begin(), ev.end());
  const double rhs = cov_correction(esd(x), ScalarField::polynomial(c, *lo - 0.5, *hi + 0.5));
  Rows rows;
  rows.add("k=6: (1/k^2) log|det D f(x)| vs correction for the spectral law", lhs, rhs, Relation::Equal, 1e-8);

  // F(t) = a t a* with a in M_2 embedded in M_4: |det| = |det a|^(2 k^2 / d)
  CMatrix a(2, 2);
  a << Complex(1.5, 0.2), Complex(0.3, -0.4), Complex(-0.1, 0.6), Complex(0.8, 0.0);
  const auto alg = CoefficientAlgebra::matrices({"a"}, {a});
  const NcPoly G = parse_poly("a t1 a*", 1, alg);
  const Hermitian x4 = sample_gue(4, 1.0, cfg.seed + 1);
  const double lhs_a = logabs_functional(jacobian({G}, MatrixTuple({x4})));
  const double rhs_a = std::log(std::abs(a.determinant()));
  rows.add("k=4: t -> a t a* with a in M_2", lhs_a, rhs_a, Relation::Equal, 1e-8);
  return finish("T-COVGEN", std::move(rows), {"map " + map + ", x = GUE(6) with seed " + std::to_string(cfg.seed)});
}

CheckReport check_conj(const CheckConfig& cfg) {
  const SpectralMeasure mu = cfg.measure.value_or(unit_semicircle());
  const auto [lo, hi] = mu.support();
  const double h = 0.02;
  Rows rows;
  std::vector<std::string> diag{"measure " + mu.kind_name() + ", central difference step " + fmt(h)};
  const char* names[] = {"t", "t^2", "t^3"};
  for (int deg = 1; deg <= 3; ++deg) {
    std::vector<double> p(static_cast<std::size_t>(deg) + 1, 0.0);
    p.back() = 1.0;
    auto entropy_at = [&](double e) {
      std::vector<double> f(std::max<std::size_t>(p.size(), 2), 0.0);
      f[1] = 1.0;
      for (std::size_t j = 0; j < p.size(); ++j) f[j] += e * p[j];
      return chi_single(pushforward(mu, ScalarField::polynomial(f, lo, hi)));
    };
    const double fd = (entropy_at(h) - entropy_at(-h)) / (2 * h);
    const double pairing = inner_product_stationarity(mu, p).first;
    rows.add(std::string("P = ") + names[deg - 1], fd, pairing, Relation::Equal, 1e-2);
  }
  return finish("T-CONJ", std::move(rows), std::move(diag));
}

double sup_deviation_from_identity(const SpectralMeasure& mu) {
  const auto [lo, hi] = mu.support();
  const double a = lo + 0.05 * (hi - lo), b = hi - 0.05 * (hi - lo);
  double dev = 0.0;
  const int points = 400;
  for (int i = 0; i <= points; ++i) {
    const double x = a + (b - a) * i / points;
    dev = std::max(dev, std::abs(conjugate_value(mu, x) - x));
  }
  return dev;
}

CheckReport check_max(const CheckConfig&) {
  const std::vector<std::pair<std::string, SpectralMeasure>> family{
      {"uniform", unit_uniform()}, {"arcsine", unit_arcsine()}, {"two-atom", unit_two_atom()}};
  const double sc = chi_single(unit_semicircle());
  Rows rows;
  std::vector<std::string> diag{"chi(semicircle) = " + fmt(sc)};
  rows.add("semicircle: sup |J - id| on the inner 90%", sup_deviation_from_identity(unit_semicircle()), 0.0,
           Relation::Equal, 1e-2);
  for (const auto& [name, mu] : family) {
    const double chi = chi_single(mu);
    diag.push_back("chi(" + name + ") = " + fmt(chi));
    rows.add("margin over " + name, chi == -kInf ? kInf : sc - chi, 0.05, Relation::GreaterEqual, 0.0);
    if (mu.is_atomic()) {
      diag.push_back(name + " has no density, so J is undefined and J = id fails");
      continue;
    }
    rows.add(name + ": sup |J - id| on the inner 90%", sup_deviation_from_identity(mu), 0.1, Relation::GreaterEqual,
             0.0);
  }
  return finish("T-MAX", std::move(rows), std::move(diag));
}

CheckReport check_block(const CheckConfig& cfg) {
  Rows rows;
  std::vector<std::string> diag;
  const double chi_z = chi_single(unit_semicircle());
  for (const int N : cfg.block_sizes) {
    if (N < 1) throw CheckConfigError("T-BLOCK: block sizes must be positive");
    for (const int n : cfg.block_arities) {
      if (n < 1) throw CheckConfigError("T-BLOCK: arities must be positive");
      const double N2 = static_cast<double>(N) * N;
      const double lhs = N2 * n * chi_z - N2 * 0.5 * n * std::log(static_cast<double>(N));
      const double rhs = n * N2 * chi_single(Semicircle{1.0 / N, 0.0});
      const std::string tag = "N=" + std::to_string(N) + " n=" + std::to_string(n);
      rows.add(tag + ": N^2 chi(Z) - N^2 (n/2) log N vs sum over entries", lhs, rhs, Relation::Equal, 1e-12);
      diag.push_back(tag + ": with the halved off-diagonal parts the entry sum shifts by " +
                     fmt(-n * N * (N - 1) / 2.0 * std::log(2.0)));
    }
  }
  // the orthonormal split is an isometry, so it carries Lebesgue measure to Lebesgue measure
  const Hermitian z = sample_gue(6, 1.0, cfg.seed);
  const MatrixTuple parts = block_split(MatrixTuple({z}), 2, BlockScaling::Orthonormal);
  double sq = 0.0;
  for (std::size_t i = 0; i < parts.size(); ++i) sq += parts[i].hs_norm_squared();
  rows.add("orthonormal split of GUE(6), N=2: squared HS norm", sq, z.hs_norm_squared(), Relation::Equal,
           1e-10 * (1.0 + sq));
  return finish("T-BLOCK", std::move(rows), std::move(diag));
}

CheckReport check_brown(const CheckConfig& cfg) {
  Rows rows;
  std::vector<std::string> diag{
      "stated bound: chi >= n log(2 pi e t); the proof yields (n/2) log(2 pi e t), which is what is checked"};
  for (const double t : cfg.times) {
    if (!(t > 0)) throw CheckConfigError("T-BROWN: times must be positive");
    const double chi = chi_single(two_atom_semicircle_convolution(t));
    const double half = 0.5 * std::log(kTwoPiE * t);
    rows.add("t=" + fmt(t) + ": chi(X + sqrt(t) S) vs (1/2) log(2 pi e t)", chi, half, Relation::GreaterEqual, 1e-3);
    const double full = std::log(kTwoPiE * t);
    diag.push_back("t=" + fmt(t) + ": chi = " + fmt(chi) + "; stated bound log(2 pi e t) = " + fmt(full) +
                   (chi >= full ? " holds" : " fails"));
  }
  return finish("T-BROWN", std::move(rows), std::move(diag));
}

// ---- statistical checks ---------------------------------------------------

struct Stat {
  double value = -kInf;
  double se = 0.0;
};

Stat stat(const ChiRow& r) { return {r.normalized, std::isfinite(r.normalized) ? r.normalized_stderr : 0.0}; }

Stat minus(Stat a, Stat b) {
  if (a.value == -kInf) return {-kInf, 0.0};
  if (b.value == -kInf) return {kInf, 0.0};
  return {a.value - b.value, std::hypot(a.se, b.se)};
}

Stat plus(Stat a, Stat b) {
  if (a.value == -kInf || b.value == -kInf) return {-kInf, 0.0};
  return {a.value + b.value, std::hypot(a.se, b.se)};
}

void add_stat(Rows& rows, std::string label, Stat a, Stat b, Relation rel) {
  rows.add(std::move(label), a.value, b.value, rel, 3.0 * std::hypot(a.se, b.se));
}

std::string row_text(const std::string& what, Stat s) {
  return what + " = " + fmt(s.value) + " +- " + fmt(s.se);
}

struct Runner {
  const CheckConfig& cfg;
  RunOptions options;

  explicit Runner(const CheckConfig& c) : cfg(c), options{c.samples, c.seed, c.threads, Sampler::Auto} {
    if (cfg.ks.empty()) throw CheckConfigError("statistical checks need a nonempty k list");
    for (const int k : cfg.ks)
      if (k < 1) throw CheckConfigError("k must be positive");
    if (cfg.samples < 100) throw CheckConfigError("statistical checks need at least 100 samples");
    if (cfg.y_pool < 1) throw CheckConfigError("y_pool must be positive");
  }

  SweepCell cell(const TracialSpec& spec) const {
    return {cfg.l, cfg.eps, cfg.radius > 0 ? cfg.radius : default_radius(spec)};
  }

  Stat plain(const TracialSpec& spec, int k, const SweepCell& c) const {
    const VolumePass pass = estimate_volumes(spec, k, {c}, {}, options);
    return stat(make_row(pass.estimates[0][0], k, spec.n(), c, "-"));
  }

  // sup over candidates of the relative volume, and the union over candidates
  std::pair<Stat, Stat> relative(const TracialSpec& spec, int k, const SweepCell& c,
                                 const std::vector<MatrixTuple>& cands) const {
    if (cands.empty()) return {};
    const VolumePass pass = estimate_volumes(spec, k, {c}, cands, options);
    Stat best;
    for (const auto& e : pass.estimates) {
      const Stat s = stat(make_row(e[0], k, spec.n(), c, ""));
      if (s.value > best.value) best = s;
    }
    return {best, stat(make_row(pass.union_estimates[0], k, spec.n(), c, ""))};
  }

  std::vector<MatrixTuple> candidates(const TracialSpec& spec, int k, const SweepCell& c) const {
    return y_candidates(spec, k, cfg.y_pool, c, cfg.seed);
  }
};

TracialSpec free_model(std::vector<SpectralMeasure> laws, int m) {
  FreeModel f{std::move(laws), {}};
  for (int i = 0; i < static_cast<int>(f.components.size()); ++i) f.variables.push_back({i, {0.0, 1.0}});
  const int total = static_cast<int>(f.components.size());
  return TracialSpec::from_generator(total - m, m, f);
}

TracialSpec model_or(const CheckConfig& cfg, TracialSpec fallback, int min_n, int min_m, const std::string& id) {
  if (!cfg.spec) return fallback;
  if (cfg.spec->n() < min_n || cfg.spec->m() < min_m)
    throw CheckConfigError(id + " needs a spec with n >= " + std::to_string(min_n) + " and m >= " +
                           std::to_string(min_m));
  return *cfg.spec;
}

std::string k_label(int k) { return "k=" + std::to_string(k); }

CheckReport check_chain(const CheckConfig& cfg) {
  const Runner run(cfg);
  const TracialSpec spec = model_or(cfg, free_model({unit_semicircle(), unit_two_atom()}, 1), 1, 1, "T-CHAIN");
  const SweepCell c = run.cell(spec);
  Rows rows;
  std::vector<std::string> diag{
      "chi(Y : X) is estimated by chi(Y), so the first two terms of the chain coincide",
      "lhs = chi(X, Y) - chi(Y), rhs = chi(X | Y) (sup over " + std::to_string(cfg.y_pool) + " y-candidates)"};
  for (const int k : cfg.ks) {
    const Stat joint = run.plain(spec.joint(), k, c);
    const Stat y = run.plain(spec.y_marginal(), k, c);
    const Stat rel = run.relative(spec, k, c, run.candidates(spec, k, c)).first;
    add_stat(rows, k_label(k), minus(joint, y), rel, Relation::LessEqual);
    diag.push_back(k_label(k) + ": " + row_text("chi(X,Y)", joint) + ", " + row_text("chi(Y)", y) + ", " +
                   row_text("chi(X|Y)", rel));
  }
  return finish("T-CHAIN", std::move(rows), std::move(diag));
}

CheckReport check_mono_y(const CheckConfig& cfg) {
  const Runner run(cfg);
  const TracialSpec spec =
      model_or(cfg, free_model({unit_semicircle(), unit_two_atom(), unit_semicircle()}, 2), 1, 2, "T-MONO-Y");
  const int n = spec.n(), m = spec.m();
  std::vector<int> xs, ys;
  for (int i = 0; i < n; ++i) xs.push_back(i);
  for (int j = 0; j + 1 < m; ++j) ys.push_back(n + j);
  const TracialSpec fewer = spec.restrict(xs, ys);
  const SweepCell c = run.cell(spec);
  Rows rows;
  std::vector<std::string> diag{"lhs = chi(X | Y_1..Y_m), rhs = chi(X | Y_1..Y_{m-1}); the shorter list uses the "
                                "same candidates with the last matrix dropped"};
  for (const int k : cfg.ks) {
    const auto cands = run.candidates(spec, k, c);
    std::vector<MatrixTuple> shorter;
    for (const auto& y : cands) {
      std::vector<Hermitian> mats(y.matrices().begin(), y.matrices().end() - 1);
      shorter.emplace_back(std::move(mats));
    }
    const Stat all = run.relative(spec, k, c, cands).first;
    const Stat some = run.relative(fewer, k, c, shorter).first;
    add_stat(rows, k_label(k), all, some, Relation::LessEqual);
  }
  return finish("T-MONO-Y", std::move(rows), std::move(diag));
}

CheckReport check_vs_joint(const CheckConfig& cfg) {
  const Runner run(cfg);
  const TracialSpec spec = model_or(cfg, free_model({unit_semicircle(), unit_two_atom()}, 1), 1, 1, "T-VS-JOINT");
  const SweepCell c = run.cell(spec);
  Rows rows;
  std::vector<std::string> diag{
      "chi(X : Y) is estimated from below by the volume of the union of Gamma(X | y) over the candidates"};
  for (const int k : cfg.ks) {
    const auto [rel, presence] = run.relative(spec, k, c, run.candidates(spec, k, c));
    const Stat plain = run.plain(spec.x_marginal(), k, c);
    add_stat(rows, k_label(k) + ": chi(X | Y) <= chi(X : Y)", rel, presence, Relation::LessEqual);
    add_stat(rows, k_label(k) + ": chi(X : Y) <= chi(X)", presence, plain, Relation::LessEqual);
  }
  return finish("T-VS-JOINT", std::move(rows), std::move(diag));
}

CheckReport check_maxbound(const CheckConfig& cfg) {
  const Runner run(cfg);
  const TracialSpec spec = model_or(cfg, free_model({unit_semicircle()}, 0), 1, 0, "T-MAXBOUND");
  double c2 = 0.0;
  for (int i = 0; i < spec.n(); ++i) c2 += spec.second_moment(i);
  c2 /= spec.n();
  const double bound = 0.5 * spec.n() * std::log(kTwoPiE * c2);
  Sweep sweep{cfg.ks, {2, 3, 4}, {0.5, 0.35, 0.2}, {}};
  if (cfg.radius > 0) sweep.radii = {cfg.radius};
  const SweepResult r = sweep_chi(spec, sweep, run.options, cfg.y_pool);
  // standard error of the value that attains the summary
  double se = 0.0;
  for (const auto& s : r.series)
    if (s.extrapolated == r.summary)
      for (const auto& row : s.per_k)
        if (row.normalized - row.normalized_stderr == s.extrapolated) se = row.normalized_stderr;
  Rows rows;
  rows.add("summary (sup over R of inf over l, eps)", r.summary, bound, Relation::LessEqual, 3.0 * se);
  std::vector<std::string> diag{"c^2 = " + fmt(c2) + ", bound (n/2) log(2 pi e c^2) = " + fmt(bound)};
  for (const auto& s : r.series)
    diag.push_back("l=" + std::to_string(s.cell.l) + " eps=" + fmt(s.cell.eps) + " R=" + fmt(s.cell.R) +
                   ": extrapolated " + fmt(s.extrapolated) + ", finite-eps ball bound " +
                   fmt(0.5 * spec.n() * std::log(kTwoPiE * (c2 + s.cell.eps))));
  diag.insert(diag.end(), r.diagnostics.begin(), r.diagnostics.end());
  return finish("T-MAXBOUND", std::move(rows), std::move(diag));
}

std::vector<double> square_poly(const std::vector<double>& p) {
  std::vector<double> q(2 * p.size() - 1, 0.0);
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = 0; j < p.size(); ++j) q[i + j] += p[i] * p[j];
  return q;
}

const FreeModel& free_generator(const TracialSpec& spec, const std::string& id) {
  if (!spec.has_generator() || !std::holds_alternative<FreeModel>(*spec.generator()))
    throw CheckConfigError(id + " needs a spec with a free generator, so that polynomial images of Y have known laws");
  return std::get<FreeModel>(*spec.generator());
}

CheckReport check_gen(const CheckConfig& cfg) {
  const Runner run(cfg);
  const TracialSpec spec =
      model_or(cfg, free_model({unit_semicircle(), unit_semicircle()}, 1), 1, 1, "T-GEN");
  const FreeModel& g = free_generator(spec, "T-GEN");
  FreeModel zg{g.components, {}};
  for (int i = 0; i < spec.n(); ++i) zg.variables.push_back(g.variables[static_cast<std::size_t>(i)]);
  for (int j = 0; j < spec.m(); ++j) {
    const auto& v = g.variables[static_cast<std::size_t>(spec.n() + j)];
    zg.variables.push_back({v.component, square_poly(v.poly)});
    zg.variables.push_back(v);
  }
  const TracialSpec zspec = TracialSpec::from_generator(spec.n(), 2 * spec.m(), zg);
  const SweepCell c = run.cell(spec);
  Rows rows;
  std::vector<std::string> diag{"Z = (Y^2, Y) for each Y; both sups run over candidates from the respective "
                                "microstate sets"};
  for (const int k : cfg.ks) {
    const auto cands = run.candidates(spec, k, c);
    const auto zc = run.candidates(zspec, k, c);
    const Stat ry = run.relative(spec, k, c, cands).first;
    const Stat rz = run.relative(zspec, k, c, zc).first;
    add_stat(rows, k_label(k), ry, rz, Relation::Equal);
    diag.push_back(k_label(k) + ": " + std::to_string(cands.size()) + " y-candidates, " + std::to_string(zc.size()) +
                   " z-candidates");
  }
  return finish("T-GEN", std::move(rows), std::move(diag));
}

CheckReport check_subadd(const CheckConfig& cfg) {
  const Runner run(cfg);
  TracialSpec spec = model_or(cfg, free_model({unit_semicircle(), unit_two_atom()}, 0), 1, 0, "T-SUBADD");
  if (spec.m() > 0) spec = spec.joint();
  if (spec.n() < 2) throw CheckConfigError("T-SUBADD needs at least two variables");
  const int p = spec.n() / 2;
  std::vector<int> first, second;
  for (int i = 0; i < spec.n(); ++i) (i < p ? first : second).push_back(i);
  const TracialSpec a = spec.restrict(first, {}), b = spec.restrict(second, {});
  const SweepCell c = run.cell(spec);
  Rows rows;
  std::vector<std::string> diag{"split (X_1..X_" + std::to_string(p) + ") and (X_" + std::to_string(p + 1) + "..X_" +
                                std::to_string(spec.n()) + ")"};
  for (const int k : cfg.ks) {
    const Stat whole = run.plain(spec, k, c);
    const Stat parts = plus(run.plain(a, k, c), run.plain(b, k, c));
    add_stat(rows, k_label(k), whole, parts, Relation::LessEqual);
  }
  return finish("T-SUBADD", std::move(rows), std::move(diag));
}

CheckReport check_mono_b(const CheckConfig& cfg) {
  const Runner run(cfg);
  const TracialSpec spec =
      model_or(cfg, free_model({unit_semicircle(), unit_semicircle()}, 1), 1, 1, "T-MONO-B");
  const FreeModel& g = free_generator(spec, "T-MONO-B");
  FreeModel sq{g.components, {}};
  for (int i = 0; i < spec.n(); ++i) sq.variables.push_back(g.variables[static_cast<std::size_t>(i)]);
  for (int j = 0; j < spec.m(); ++j) {
    const auto& v = g.variables[static_cast<std::size_t>(spec.n() + j)];
    sq.variables.push_back({v.component, square_poly(v.poly)});
  }
  const TracialSpec small = TracialSpec::from_generator(spec.n(), spec.m(), sq);
  const SweepCell c = run.cell(spec);
  Rows rows;
  std::vector<std::string> diag{"B_1 = W*(Y^2) inside B_2 = W*(Y); lhs = chi(X | B_2), rhs = chi(X | B_1)"};
  for (const int k : cfg.ks) {
    const auto cands = run.candidates(spec, k, c);
    const auto squared = run.candidates(small, k, c);
    add_stat(rows, k_label(k), run.relative(spec, k, c, cands).first, run.relative(small, k, c, squared).first,
             Relation::LessEqual);
  }
  return finish("T-MONO-B", std::move(rows), std::move(diag));
}

// extrapolated value of a series together with the error of the row attaining it
Stat extrapolated(const std::vector<Stat>& per_k) {
  Stat best;
  double key = -kInf;
  for (const Stat& s : per_k) {
    if (!std::isfinite(s.value)) continue;
    if (s.value - s.se > key) {
      key = s.value - s.se;
      best = {key, s.se};
    }
  }
  return best;
}

std::pair<Stat, Stat> free_pair_series(const Runner& run, const TracialSpec& spec, std::vector<std::string>& diag) {
  const SweepCell c = run.cell(spec);
  std::vector<Stat> plain, rel;
  for (const int k : run.cfg.ks) {
    plain.push_back(run.plain(spec.x_marginal(), k, c));
    rel.push_back(run.relative(spec, k, c, run.candidates(spec, k, c)).first);
    diag.push_back(k_label(k) + ": " + row_text("chi(X)", plain.back()) + ", " + row_text("chi(X|Y)", rel.back()));
  }
  return {extrapolated(plain), extrapolated(rel)};
}

CheckReport check_free_b(const CheckConfig& cfg) {
  const Runner run(cfg);
  const TracialSpec spec = model_or(cfg, free_model({unit_semicircle(), unit_two_atom()}, 1), 1, 1, "T-FREE-B");
  std::vector<std::string> diag{"X free from Y: chi(X) <= chi(X | Y) on extrapolated values"};
  const auto [plain, rel] = free_pair_series(run, spec, diag);
  Rows rows;
  add_stat(rows, "extrapolated", plain, rel, Relation::LessEqual);
  return finish("T-FREE-B", std::move(rows), std::move(diag));
}

CheckReport check_freecrit(const CheckConfig& cfg) {
  const Runner run(cfg);
  const TracialSpec spec = model_or(cfg, free_model({unit_semicircle(), unit_two_atom()}, 1), 1, 1, "T-FREECRIT");
  std::vector<std::string> diag{
      "forward direction only: for a free pair chi(X | Y) and chi(X) agree; agreement does not certify freeness"};
  const auto [plain, rel] = free_pair_series(run, spec, diag);
  Rows rows;
  rows.add("extrapolated, tolerance 0.2 + 3 sigma", rel.value, plain.value, Relation::Equal,
           0.2 + 3.0 * std::hypot(plain.se, rel.se));
  return finish("T-FREECRIT", std::move(rows), std::move(diag));
}

using CheckFn = CheckReport (*)(const CheckConfig&);

const std::vector<std::pair<std::string, CheckFn>>& registry() {
  static const std::vector<std::pair<std::string, CheckFn>> r{
      {"T-CHAIN", check_chain},   {"T-MONO-Y", check_mono_y}, {"T-VS-JOINT", check_vs_joint},
      {"T-MAXBOUND", check_maxbound}, {"T-MONO-B", check_mono_b}, {"T-GEN", check_gen},
      {"T-SUBADD", check_subadd}, {"T-FREE-B", check_free_b}, {"T-COV1", check_cov1},
      {"T-COVGEN", check_covgen}, {"T-BROWN", check_brown},   {"T-CONJ", check_conj},
      {"T-MAX", check_max},       {"T-FREECRIT", check_freecrit}, {"T-BLOCK", check_block},
  };
  return r;
}

}  // namespace

std::string relation_symbol(Relation r) {
  switch (r) {
    case Relation::LessEqual: return "<=";
    case Relation::Equal: return "=";
    case Relation::GreaterEqual: return ">=";
  }
  return "?";
}

bool relation_holds(double lhs, double rhs, Relation r, double tolerance) {
  return shortfall(CheckRow{"", lhs, rhs, tolerance, false}, r) <= 0.0;
}

const std::vector<std::string>& check_ids() {
  static const std::vector<std::string> ids = [] {
    std::vector<std::string> v;
    for (const auto& [id, fn] : registry()) v.push_back(id);
    return v;
  }();
  return ids;
}

CheckTier check_tier(const std::string& id) {
  static const std::vector<std::string> det{"T-COV1", "T-COVGEN", "T-BROWN", "T-CONJ", "T-MAX", "T-BLOCK"};
  return std::find(det.begin(), det.end(), id) != det.end() ? CheckTier::Deterministic : CheckTier::Statistical;
}

CheckReport run_check(const std::string& id, const CheckConfig& cfg) {
  for (const auto& [name, fn] : registry())
    if (name == id) return fn(cfg);
  throw CheckConfigError("unknown check id " + id);
}

CheckConfig check_config_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw CheckConfigError("check config must be a JSON object");
  static const std::vector<std::string> keys{"ks",      "l",       "eps",     "radius", "samples",
                                             "seed",    "threads", "y_pool",  "measure", "map",
                                             "spec",    "times",   "block_sizes", "block_arities"};
  for (const auto& [key, value] : doc.items())
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) throw CheckConfigError("unknown config key " + key);
  CheckConfig cfg;
  try {
    if (doc.contains("ks")) cfg.ks = doc["ks"].get<std::vector<int>>();
    if (doc.contains("l")) cfg.l = doc["l"].get<int>();
    if (doc.contains("eps")) cfg.eps = doc["eps"].get<double>();
    if (doc.contains("radius")) cfg.radius = doc["radius"].get<double>();
    if (doc.contains("samples")) cfg.samples = doc["samples"].get<std::size_t>();
    if (doc.contains("seed")) cfg.seed = doc["seed"].get<std::uint64_t>();
    if (doc.contains("threads")) cfg.threads = doc["threads"].get<int>();
    if (doc.contains("y_pool")) cfg.y_pool = doc["y_pool"].get<int>();
    if (doc.contains("map")) cfg.map = doc["map"].get<std::string>();
    if (doc.contains("times")) cfg.times = doc["times"].get<std::vector<double>>();
    if (doc.contains("block_sizes")) cfg.block_sizes = doc["block_sizes"].get<std::vector<int>>();
    if (doc.contains("block_arities")) cfg.block_arities = doc["block_arities"].get<std::vector<int>>();
  } catch (const nlohmann::json::exception& e) {
    throw CheckConfigError(std::string("check config: ") + e.what());
  }
  if (doc.contains("measure")) cfg.measure = measure_from_json(doc["measure"]);
  if (doc.contains("spec")) cfg.spec = spec_from_json(doc["spec"]);
  return cfg;
}

nlohmann::json report_to_json(const CheckReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows)
    rows.push_back({{"label", row.label},
                    {"lhs", num(row.lhs)},
                    {"rhs", num(row.rhs)},
                    {"tolerance", num(row.tolerance)},
                    {"pass", row.pass}});
  return {{"id", r.id},
          {"tier", r.tier == CheckTier::Deterministic ? "deterministic" : "statistical"},
          {"lhs", num(r.lhs)},
          {"rhs", num(r.rhs)},
          {"relation", relation_symbol(r.relation)},
          {"tolerance", num(r.tolerance)},
          {"pass", r.pass},
          {"rows", rows},
          {"diagnostics", r.diagnostics}};
}

std::string report_to_text(const CheckReport& r) {
  std::ostringstream os;
  os << r.id << " [" << (r.tier == CheckTier::Deterministic ? "deterministic" : "statistical") << "] "
     << (r.pass ? "PASS" : "FAIL") << "\n";
  os << "  " << fmt(r.lhs) << " " << relation_symbol(r.relation) << " " << fmt(r.rhs) << "  (tolerance "
     << fmt(r.tolerance) << ")\n";
  for (const auto& row : r.rows)
    os << "  " << (row.pass ? "ok   " : "FAIL ") << row.label << ": lhs " << fmt(row.lhs) << ", rhs " << fmt(row.rhs)
       << ", tolerance " << fmt(row.tolerance) << "\n";
  for (const auto& d : r.diagnostics) os << "  note: " << d << "\n";
  return os.str();
}

SpectralMeasure two_atom_semicircle_convolution(double t, int points) {
  if (!(t > 0)) throw std::invalid_argument("convolution time must be positive");
  if (points < 3) throw std::invalid_argument("convolution grid needs at least three points");
  // the subordination function w solves w^3 - x w^2 + (t - 1) w + x = 0 and
  // the density is Im w / (pi t) for the root in the upper half plane
  auto density = [t](double x) {
    Eigen::Matrix3d companion;
    companion << x, -(t - 1.0), -x, 1, 0, 0, 0, 1, 0;
    const Eigen::Vector3cd roots = Eigen::EigenSolver<Eigen::Matrix3d>(companion, false).eigenvalues();
    double im = 0.0;
    for (int i = 0; i < 3; ++i) im = std::max(im, roots[i].imag());
    return im / (std::numbers::pi * t);
  };
  // outer edge of the support by bisection on positivity of the density
  double a = 0.0, b = 1.0 + 2.0 * std::sqrt(t) + 1.0;
  const double probe = density(0.0) > 0 ? 0.0 : 1.0;
  a = probe;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (a + b);
    (density(mid) > 1e-14 ? a : b) = mid;
  }
  const double edge = b;
  std::vector<double> values(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) {
    const double x = -edge + 2.0 * edge * i / (points - 1);
    values[static_cast<std::size_t>(i)] = (i == 0 || i == points - 1) ? 0.0 : density(x);
  }
  return SpectralMeasure::normalized_grid(-edge, edge, std::move(values));
}

}  // namespace freeent
