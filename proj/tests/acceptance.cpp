// Acceptance runner: `acceptance [N...]` evaluates the listed criteria (all
// when none are given), prints one PASS/FAIL line each, exits 1 if any fail.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "freeent/microstates.hpp"
#include "freeent/ncalg.hpp"
#include "freeent/spectra.hpp"
#include "freeent/theorems.hpp"

using namespace freeent;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances.
constexpr double kJacobianRelErr = 1e-6;
constexpr double kLogDetResidual = 1e-8;
constexpr double kQuadrature = 1e-3;
constexpr double kCov = 2e-3;
constexpr double kConjSup = 1e-2;
constexpr double kStationarity = 2e-2;
constexpr double kBlockResidual = 1e-12;
constexpr double kSemicircleMc = 0.5;
constexpr double kRelativeMc = 0.6;
constexpr double kSigmas = 3.0;

const double kChiSemicircle = 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e);

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

CMatrix random_complex(int d, RandomStream& rng) {
  CMatrix m(d, d);
  for (int j = 0; j < d; ++j)
    for (int i = 0; i < d; ++i) m(i, j) = Complex(rng.normal(), rng.normal());
  return m;
}

// ---- 1 ------------------------------------------------------------------

Outcome ac1() {
  const std::string got = to_string(dquotient(parse_poly("b0 t1 b1 t2 b2 t1 b3 t4 b4"), 0));
  const std::string want = "b0 (x) b1 t2 b2 t1 b3 t4 b4 + b0 t1 b1 t2 b2 (x) b3 t4 b4";
  return {got == want, "D_1 = " + got};
}

// ---- 2 ------------------------------------------------------------------

// Random B-valued polynomial, B generated by two 2 x 2 matrices.
NcPoly random_bpoly(int n, const AlgebraPtr& alg, RandomStream& rng) {
  static const std::vector<CoefWord> slots{
      {}, {{"a", false}}, {{"b", false}}, {{"a", true}}, {{"b", false}, {"a", true}}};
  NcPoly p(n, alg);
  const int terms = 1 + static_cast<int>(rng.below(5));
  for (int t = 0; t < terms; ++t) {
    const int deg = static_cast<int>(rng.below(4));
    Monomial m;
    m.slots.clear();
    for (int s = 0; s <= deg; ++s) m.slots.push_back(slots[rng.below(slots.size())]);
    for (int d = 0; d < deg; ++d) m.letters.push_back(static_cast<int>(rng.below(static_cast<std::uint64_t>(n))));
    p.add_term(Complex(rng.normal(), rng.normal()), m);
  }
  return p;
}

Outcome ac2() {
  RandomStream rng(2024, 0);
  const auto alg = CoefficientAlgebra::matrices({"a", "b"}, {random_complex(2, rng), random_complex(2, rng)});
  double worst = 0.0;
  int compared = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(3));
    const int k = trial % 2 ? 4 : 2;
    std::vector<NcPoly> f;
    for (int j = 0; j < n; ++j) f.push_back(random_bpoly(n, alg, rng));
    std::vector<Hermitian> xs, plus, minus;
    std::vector<CMatrix> dir;
    const double h = 1e-5;
    for (int i = 0; i < n; ++i) {
      xs.push_back(sample_gue(k, 1.0, rng));
      const Hermitian d = sample_gue(k, 1.0, rng);
      plus.push_back(xs.back() + h * d);
      minus.push_back(xs.back() - h * d);
      dir.push_back(d.matrix());
    }
    const auto jd = jacobian(f, MatrixTuple(xs)).apply(dir);
    for (int j = 0; j < n; ++j) {
      const auto& fj = f[static_cast<std::size_t>(j)];
      const CMatrix fd = (evaluate(fj, MatrixTuple(plus)) - evaluate(fj, MatrixTuple(minus))) / (2 * h);
      const CMatrix& an = jd[static_cast<std::size_t>(j)];
      const double scale = std::max(an.norm(), fd.norm());
      if (scale < 1e-12) continue;  // f_j has no t-dependence
      worst = std::max(worst, (an - fd).norm() / scale);
      ++compared;
    }
  }
  return {worst < kJacobianRelErr, "max relative error " + num(worst) + " over " + std::to_string(compared) +
                                       " components (< " + num(kJacobianRelErr) + ")"};
}

// ---- 3 ------------------------------------------------------------------

Outcome ac3() {
  RandomStream rng(77, 0);
  double worst = 0.0;
  for (int trial = 0; trial < 12; ++trial) {
    const int d = 1 + trial % 2;
    const int k = d * (1 + trial % 3);
    const CMatrix a = random_complex(d, rng);
    const auto alg = CoefficientAlgebra::matrices({"a"}, {a});
    const MatrixTuple x({sample_gue(k, 1.0, rng)});
    const EvaluatedJacobian jac = jacobian({parse_poly("a t1 a*", 1, alg)}, x);
    const Eigen::MatrixXd real = jac.real_matrix();
    const double direct = std::log(std::abs(real.partialPivLu().determinant()));
    const double trace_side = double(k) * k * logabs_functional(jac);
    // a embeds as a (x) 1_{k/d}: det J = |det a|^(2k (k/d))
    const double analytic = 2.0 * k * (double(k) / d) * std::log(std::abs(a.determinant()));
    worst = std::max({worst, std::abs(direct - trace_side), std::abs(direct - analytic)});
  }
  return {worst < kLogDetResidual, "max residual " + num(worst) + " (< " + num(kLogDetResidual) + ")"};
}

// ---- 4 ------------------------------------------------------------------

Outcome ac4() {
  const double iu = log_energy(Uniform{0.0, 1.0});
  const double isc = log_energy(unit_semicircle());
  const double chi = chi_single(unit_semicircle());
  const bool pass = std::abs(iu + 1.5) < kQuadrature && std::abs(isc + 0.25) < kQuadrature &&
                    std::abs(chi - 1.418939) < kQuadrature;
  return {pass, "I(U[0,1]) " + num(iu) + ", I(SC) " + num(isc) + ", chi(SC) " + num(chi)};
}

// ---- 5 ------------------------------------------------------------------

Outcome ac5() {
  double worst = 0.0;
  for (const SpectralMeasure& mu : {unit_semicircle(), SpectralMeasure(Uniform{0.0, 1.0})}) {
    const auto [lo, hi] = mu.support();
    const std::vector<ScalarField> maps{ScalarField::affine(2.0, 1.0, lo, hi), ScalarField::polynomial({0, 1, 0, 1}, lo, hi),
                                        ScalarField::arctan(1.0, lo, hi)};
    for (const ScalarField& f : maps) {
      const double r = chi_single(pushforward(mu, f)) - chi_single(mu) - cov_correction(mu, f);
      worst = std::max(worst, std::abs(r));
    }
  }
  return {worst < kCov, "max |chi(f#mu) - chi(mu) - correction| " + num(worst) + " (< " + num(kCov) + ")"};
}

// ---- 6 ------------------------------------------------------------------

Outcome ac6() {
  const ScalarField j = conjugate_variable(unit_semicircle());
  double sup = 0.0;
  for (int i = 0; i <= 3600; ++i) {
    const double x = -1.8 + 0.001 * i;
    sup = std::max(sup, std::abs(j(x) - x));
  }
  double stat = 0.0;
  for (const std::vector<double>& p : {std::vector<double>{0, 1}, {0, 0, 1}, {0, 0, 0, 1}}) {
    const auto [lhs, rhs] = inner_product_stationarity(unit_semicircle(), p);
    stat = std::max(stat, std::abs(lhs - rhs));
  }
  const CheckReport conj = run_check("T-CONJ");
  const bool pass = sup < kConjSup && stat < kStationarity && conj.pass && conj.tolerance <= kConjSup;
  return {pass, "sup |J - id| " + num(sup) + ", stationarity " + num(stat) + ", T-CONJ " + (conj.pass ? "pass" : "fail")};
}

// ---- 7, 8 ---------------------------------------------------------------

Outcome ac7() {
  const CheckReport r = run_check("T-MAX");
  std::string failing;
  for (const auto& row : r.rows)
    if (!row.pass) failing += (failing.empty() ? "" : "; ") + row.label + " " + num(row.lhs) + " vs " + num(row.rhs);
  return {r.pass, r.pass ? "all rows pass" : "failing: " + failing};
}

Outcome ac8() {
  const CheckReport r = run_check("T-BLOCK");
  double worst = 0.0;
  for (const auto& row : r.rows) worst = std::max(worst, std::abs(row.lhs - row.rhs));
  return {r.pass && worst < kBlockResidual, "max residual " + num(worst) + " over " + std::to_string(r.rows.size()) + " cases"};
}

// ---- 9 ------------------------------------------------------------------

TracialSpec free_spec(std::vector<SpectralMeasure> comps, int m) {
  FreeModel f{comps, {}};
  for (std::size_t i = 0; i < comps.size(); ++i) f.variables.push_back({static_cast<int>(i), {0, 1}});
  return TracialSpec::from_generator(static_cast<int>(comps.size()) - m, m, f);
}

Outcome ac9() {
  std::ostringstream os;
  bool pass = true;
  // k = 1: the unconstrained set is the box [-R, R]^n
  for (int n = 1; n <= 3; ++n) {
    const TracialSpec spec = free_spec(std::vector<SpectralMeasure>(static_cast<std::size_t>(n), unit_semicircle()), 0);
    const double R = 1.5;
    const auto e = estimate_volume(spec, {1, 0, 0.1, R}, Sampler::BallRejection, std::nullopt, 100000, 31);
    pass = pass && std::abs(e.log_volume - n * std::log(2 * R)) <= kSigmas * e.stderr_log + 1e-12;
  }
  // k = 1 with constraints, law delta_1: |x - 1| < 0.3 and |x^2 - 1| < 0.3
  const TracialSpec one = free_spec({SpectralMeasure(Atomic{{{1.0, 1.0}}})}, 0);
  const auto e = estimate_volume(one, {1, 2, 0.3, 2.0}, Sampler::BallRejection, std::nullopt, 200000, 32);
  const double exact = std::log(std::sqrt(1.3) - std::sqrt(0.7));
  pass = pass && std::abs(e.log_volume - exact) <= kSigmas * e.stderr_log;
  os << "k=1 volumes " << (pass ? "ok" : "off");

  const Sweep sweep;
  const SweepResult sc = sweep_chi(free_spec({unit_semicircle()}, 0), sweep, RunOptions{1000000, 1, 1, Sampler::Auto});
  const bool sc_ok = std::abs(sc.summary - kChiSemicircle) < kSemicircleMc;
  const SweepResult rel =
      sweep_chi(free_spec({unit_semicircle(), unit_two_atom()}, 1), sweep, RunOptions{100000, 1, 1, Sampler::Auto}, 32);
  const bool rel_ok = std::abs(rel.summary - kChiSemicircle) < kRelativeMc;
  os << ", semicircle " << num(sc.summary) << ", relative " << num(rel.summary) << " vs " << num(kChiSemicircle);
  return {pass && sc_ok && rel_ok, os.str()};
}

// ---- 10 -----------------------------------------------------------------

Outcome ac10() {
  std::ostringstream os;
  bool pass = true;
  for (const char* id : {"T-CHAIN", "T-MONO-Y", "T-VS-JOINT", "T-SUBADD", "T-MAXBOUND", "T-GEN"}) {
    const CheckReport r = run_check(id);
    pass = pass && r.pass;
    os << (os.tellp() > 0 ? ", " : "") << id << " " << (r.pass ? "pass" : "FAIL");
    if (!r.pass) os << " (" << num(r.lhs) << " " << relation_symbol(r.relation) << " " << num(r.rhs) << " +- " << num(r.tolerance) << ")";
  }
  return {pass, os.str()};
}

// ---- 11 -----------------------------------------------------------------

int shell(const std::string& cmd) {
  const int status = std::system((cmd + " 2>/dev/null").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome ac11() {
  const fs::path dir = fs::temp_directory_path() / "freeent_acceptance";
  fs::create_directories(dir);
  const std::string cli = FREEENT_CLI;
  const std::string data = FREEENT_TEST_DATA;
  // each command writes <dir>/<name>.<run>; files listed are compared
  struct Case {
    std::string name;
    std::string args;
    std::vector<std::string> suffixes;
  };
  const std::vector<Case> cases{
      {"single", "chi-single " + data + "/uniform01.json --map arctan:1 --format json > @", {""}},
      {"dq", "dq \"b0 t1 b1 t2 b2 t1 b3 t4 b4\" 1 > @", {""}},
      {"mc_csv", "chi-mc --spec " + data + "/spec_free_pair.json --k 2,3,4 --l 2,3 --eps 0.5 --samples 20000 --seed 5 --out @",
       {"", ".summary.json"}},
      {"mc_json", "chi-mc --spec " + data + "/spec_semicircle.json --k 2,3 --samples 20000 --seed 5 --format json --out @", {""}},
      {"check_det", "check T-BLOCK --out @ > /dev/null", {"", ".txt"}},
      {"check_mc", "check T-SUBADD " + data + "/check_small.json --out @ > /dev/null", {"", ".txt"}},
  };
  int same = 0, total = 0;
  std::string bad;
  for (const auto& c : cases) {
    for (const char* run : {"1", "2"}) {
      std::string args = c.args;
      args.replace(args.find('@'), 1, (dir / (c.name + "." + run)).string());
      shell(cli + " " + args);
    }
    for (const auto& s : c.suffixes) {
      const std::string a = slurp(dir / (c.name + ".1" + s)), b = slurp(dir / (c.name + ".2" + s));
      ++total;
      if (!a.empty() && a == b)
        ++same;
      else
        bad += " " + c.name + s;
    }
  }
  return {same == total, std::to_string(same) + "/" + std::to_string(total) + " output files identical" +
                             (bad.empty() ? "" : "; differ or empty:" + bad)};
}

struct Criterion {
  int id;
  const char* title;
  Outcome (*run)();
};

const std::vector<Criterion> kCriteria{
    {1, "difference quotient worked example", ac1},
    {2, "Jacobian vs central differences", ac2},
    {3, "log-det bridge for a t a*", ac3},
    {4, "quadrature oracles", ac4},
    {5, "change of variables", ac5},
    {6, "conjugate-variable suite", ac6},
    {7, "maximality (T-MAX)", ac7},
    {8, "block identity (T-BLOCK)", ac8},
    {9, "Monte Carlo sanity", ac9},
    {10, "inequality suite", ac10},
    {11, "determinism", ac11},
};

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.push_back(std::atoi(argv[i]));
  bool all = true;
  for (const auto& c : kCriteria) {
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.id) == wanted.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    all = all && o.pass;
    std::printf("AC%d %s: %s: %s [%.1f s]\n", c.id, o.pass ? "PASS" : "FAIL", c.title, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
