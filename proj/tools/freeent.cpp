// freeent: command-line front end.
//
//   freeent chi-single <measure.json> [--map SPEC] [--format text|json]
//   freeent chi-mc --spec FILE [--k 2,3] [--l 2,3,4] [--eps 0.5,0.2] [--radius 4]
//                  [--samples N] [--seed S] [--y-pool P] [--threads T] [--presence]
//                  [--format csv|json|text] [--out PATH] [--config FILE]
//   freeent dq "<poly>" <i> [--format text|json]
//   freeent check <ID> [config.json] [--format text|json] [--out PATH]
//
// Exit codes: 0 success, 1 computation failure, 2 usage error, 3 deterministic check failed.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "freeent/microstates.hpp"
#include "freeent/ncalg.hpp"
#include "freeent/spectra.hpp"
#include "freeent/spectra_io.hpp"
#include "freeent/theorems.hpp"
#include "freeent/tracial_spec.hpp"
#include "json.hpp"

using namespace freeent;
using nlohmann::json;

namespace {

constexpr int kOk = 0;
constexpr int kComputeFailure = 1;
constexpr int kUsage = 2;
constexpr int kCheckFailed = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v < 0 ? "-inf" : "inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

json num(double v) {
  if (std::isfinite(v)) return v;
  return fmt(v);
}

// Reads a JSON file; syntax errors report line and column.
json read_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw UsageError(path + ":" + std::to_string(line) + ":" + std::to_string(col) + ": parse error: " + e.what());
  }
}

// Writes to `path`, or stdout when it is empty.
void emit(const std::string& path, const std::string& content) {
  if (path.empty()) {
    std::cout << content;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

void check_format(const std::string& format, std::initializer_list<const char*> allowed) {
  for (const char* a : allowed)
    if (format == a) return;
  throw UsageError("unsupported --format " + format);
}

// ---- chi-single ---------------------------------------------------------

struct ChiSingleArgs {
  std::string file;
  std::string map;
  std::string format = "text";
};

int cmd_chi_single(const ChiSingleArgs& a) {
  check_format(a.format, {"text", "json"});
  SpectralMeasure mu = [&] {
    try {
      return measure_from_json(read_json(a.file));
    } catch (const std::invalid_argument& e) {
      throw UsageError(a.file + ": " + e.what());
    }
  }();
  std::optional<ScalarField> f;
  if (!a.map.empty()) {
    const auto [lo, hi] = mu.support();
    const double pad = 1e-9 * (1.0 + hi - lo);
    try {
      f = map_from_string(a.map, lo - pad, hi + pad);
    } catch (const std::invalid_argument& e) {
      throw UsageError(std::string("--map: ") + e.what());
    }
  }
  const double energy = log_energy(mu);
  const double chi = chi_single(mu);
  const double corr = f ? cov_correction(mu, *f) : 0.0;
  if (a.format == "json") {
    json out{{"measure", mu.kind_name()}, {"log_energy", num(energy)}, {"chi", num(chi)}};
    if (f) {
      out["map"] = a.map;
      out["cov_correction"] = num(corr);
    }
    std::cout << out.dump(2) << "\n";
    return kOk;
  }
  std::cout << "measure         " << mu.kind_name() << "\n";
  std::cout << "log_energy      " << fmt(energy) << "\n";
  std::cout << "chi             " << fmt(chi) << "\n";
  if (f) std::cout << "cov_correction  " << fmt(corr) << "  (map " << a.map << ")\n";
  if (!mu.is_atomic()) std::cout << "note: quadrature values, accurate to about 1e-3\n";
  return kOk;
}

// ---- chi-mc -------------------------------------------------------------

struct ChiMcArgs {
  std::string spec;
  std::vector<int> ks{2, 3, 4, 5, 6, 7, 8};
  std::vector<int> ls{2, 3, 4};
  std::vector<double> epss{0.5, 0.35, 0.2};
  std::vector<double> radii;
  std::size_t samples = 100000;
  std::uint64_t seed = 1;
  int y_pool = 32;
  int threads = 0;
  bool presence = false;
  std::string format = "csv";
  std::string out;
  std::string config;
};

template <typename T>
void take(const json& doc, const char* key, T& target, const CLI::App& app, const std::string& flag) {
  if (!doc.contains(key) || app.count(flag) > 0) return;
  try {
    target = doc[key].get<T>();
  } catch (const json::exception& e) {
    throw UsageError(std::string("config key ") + key + ": " + e.what());
  }
}

// Config file values apply unless the flag was given.
void apply_config(ChiMcArgs& a, const CLI::App& app) {
  const json doc = read_json(a.config);
  if (!doc.is_object()) throw UsageError(a.config + ": config must be a JSON object");
  static const std::vector<std::string> keys{"spec", "k",       "l",        "eps",    "radius", "samples",
                                             "seed", "y_pool",  "threads",  "format", "out",    "presence"};
  for (const auto& [key, value] : doc.items())
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) throw UsageError(a.config + ": unknown key " + key);
  take(doc, "spec", a.spec, app, "--spec");
  take(doc, "k", a.ks, app, "--k");
  take(doc, "l", a.ls, app, "--l");
  take(doc, "eps", a.epss, app, "--eps");
  take(doc, "radius", a.radii, app, "--radius");
  take(doc, "samples", a.samples, app, "--samples");
  take(doc, "seed", a.seed, app, "--seed");
  take(doc, "y_pool", a.y_pool, app, "--y-pool");
  take(doc, "threads", a.threads, app, "--threads");
  take(doc, "format", a.format, app, "--format");
  take(doc, "out", a.out, app, "--out");
  take(doc, "presence", a.presence, app, "--presence");
}

void validate(const ChiMcArgs& a) {
  if (a.spec.empty()) throw UsageError("chi-mc needs --spec");
  check_format(a.format, {"csv", "json", "text"});
  if (a.ks.empty() || a.ls.empty() || a.epss.empty()) throw UsageError("--k, --l and --eps need at least one value");
  for (const int k : a.ks)
    if (k < 1 || k > 64) throw UsageError("--k values must lie in 1..64");
  if (!std::is_sorted(a.ks.begin(), a.ks.end())) throw UsageError("--k values must be ascending");
  for (const int l : a.ls)
    if (l < 0) throw UsageError("--l values must be nonnegative");
  for (const double e : a.epss)
    if (!(e > 0)) throw UsageError("--eps values must be positive");
  for (const double r : a.radii)
    if (!(r > 0)) throw UsageError("--radius values must be positive");
  if (a.samples < 100) throw UsageError("--samples must be at least 100");
  if (a.y_pool < 0) throw UsageError("--y-pool must be nonnegative");
  if (a.threads < 0) throw UsageError("--threads must be nonnegative");
}

std::string csv(const SweepResult& r) {
  std::ostringstream os;
  os << "k,l,eps,R,N,log_volume,stderr,normalized_chi,y_id\n";
  for (const auto& s : r.series)
    for (const auto& row : s.per_k)
      os << row.k << "," << row.l << "," << fmt(row.eps) << "," << fmt(row.R) << "," << row.samples << ","
         << fmt(row.log_volume) << "," << fmt(row.stderr_log) << "," << fmt(row.normalized) << "," << row.y_id << "\n";
  return os.str();
}

json summary_json(const SweepResult& r, const TracialSpec& spec, const ChiMcArgs& a) {
  json cells = json::array();
  for (const auto& s : r.series)
    cells.push_back({{"l", s.cell.l},
                     {"eps", s.cell.eps},
                     {"R", s.cell.R},
                     {"extrapolated", num(s.extrapolated)},
                     {"attained_at", s.y_used},
                     {"diagnostics", s.diagnostics}});
  std::string kind = "plain";
  if (spec.m() > 0) kind = a.presence ? "presence" : "relative";
  return {{"extrapolated", num(r.summary)},
          {"kind", kind},
          {"n", spec.n()},
          {"m", spec.m()},
          {"samples", a.samples},
          {"seed", a.seed},
          {"y_pool", a.y_pool},
          {"cells", cells},
          {"diagnostics", r.diagnostics}};
}

int cmd_chi_mc(ChiMcArgs a, const CLI::App& app) {
  if (!a.config.empty()) apply_config(a, app);
  validate(a);
  const TracialSpec spec = [&] {
    const json doc = read_json(a.spec);
    try {
      return spec_from_json(doc);
    } catch (const SpecError& e) {
      std::ostringstream os;
      os << a.spec << ": invalid spec";
      for (const auto& p : e.problems()) os << "\n  " << p;
      throw UsageError(os.str());
    }
  }();
  for (const int l : a.ls)
    if (!spec.covers(l)) throw UsageError("--l " + std::to_string(l) + " exceeds the spec's l_max " + std::to_string(spec.l_max()));
  const int threads = a.threads > 0 ? a.threads : std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
  const Sweep sweep{a.ks, a.ls, a.epss, a.radii};
  const SweepResult r = sweep_chi(spec, sweep, RunOptions{a.samples, a.seed, threads, Sampler::Auto}, a.y_pool,
                                  a.presence ? Conditioning::Presence : Conditioning::Relative);
  const json summary = summary_json(r, spec, a);
  if (a.format == "csv") {
    emit(a.out, csv(r));
    if (a.out.empty())
      std::cerr << summary.dump(2) << "\n";
    else
      emit(a.out + ".summary.json", summary.dump(2) + "\n");
  } else if (a.format == "json") {
    json rows = json::array();
    for (const auto& s : r.series)
      for (const auto& row : s.per_k)
        rows.push_back({{"k", row.k},
                        {"l", row.l},
                        {"eps", row.eps},
                        {"R", row.R},
                        {"N", row.samples},
                        {"log_volume", num(row.log_volume)},
                        {"stderr", num(row.stderr_log)},
                        {"normalized_chi", num(row.normalized)},
                        {"y_id", row.y_id}});
    emit(a.out, json{{"rows", rows}, {"summary", summary}}.dump(2) + "\n");
  } else {
    std::ostringstream os;
    os << csv(r);
    os << "extrapolated " << fmt(r.summary) << "\n";
    for (const auto& d : r.diagnostics) os << "note: " << d << "\n";
    for (const auto& s : r.series)
      for (const auto& d : s.diagnostics) os << "note: l=" << s.cell.l << " eps=" << fmt(s.cell.eps) << ": " << d << "\n";
    emit(a.out, os.str());
  }
  return kOk;
}

// ---- dq -----------------------------------------------------------------

int cmd_dq(const std::string& text, int index, const std::string& format) {
  check_format(format, {"text", "json"});
  if (index < 1) throw UsageError("variable index must be at least 1");
  NcPoly f(1);
  try {
    f = parse_poly(text);
    if (index > f.arity()) f = parse_poly(text, index);
  } catch (const ParseError& e) {
    throw UsageError(std::string("polynomial: ") + e.what());
  }
  const std::string out = to_string(dquotient(f, index - 1));
  if (format == "json")
    std::cout << json{{"poly", to_string(f)}, {"index", index}, {"dq", out}}.dump(2) << "\n";
  else
    std::cout << out << "\n";
  return kOk;
}

// ---- check --------------------------------------------------------------

int cmd_check(const std::string& id, const std::string& config, const std::string& format, const std::string& out) {
  check_format(format, {"text", "json"});
  const auto& ids = check_ids();
  if (std::find(ids.begin(), ids.end(), id) == ids.end()) {
    std::ostringstream os;
    os << "unknown check id " << id << "; available:";
    for (const auto& i : ids) os << " " << i;
    throw UsageError(os.str());
  }
  CheckConfig cfg;
  if (!config.empty()) {
    try {
      cfg = check_config_from_json(read_json(config));
    } catch (const std::invalid_argument& e) {
      throw UsageError(config + ": " + e.what());
    }
  }
  CheckReport r = [&] {
    try {
      return run_check(id, cfg);
    } catch (const CheckConfigError& e) {
      throw UsageError(e.what());
    }
  }();
  const std::string js = report_to_json(r).dump(2) + "\n";
  const std::string text = report_to_text(r);
  if (!out.empty()) {
    emit(out, js);
    emit(out + ".txt", text);
  }
  std::cout << (format == "json" ? js : text);
  return r.pass || r.tier == CheckTier::Statistical ? kOk : kCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"microstates free entropy laboratory"};
  app.require_subcommand(1);

  ChiSingleArgs single;
  auto* s = app.add_subcommand("chi-single", "log energy and chi of a one-variable law");
  s->add_option("measure", single.file, "measure document (JSON)")->required();
  s->add_option("--map", single.map, "also print the change-of-variables correction for this map");
  s->add_option("--format", single.format, "text or json");

  ChiMcArgs mc;
  auto* m = app.add_subcommand("chi-mc", "Monte Carlo microstate volumes over a (k, l, eps, R) sweep");
  m->add_option("--spec", mc.spec, "tracial spec document (JSON)");
  m->add_option("--k", mc.ks, "matrix sizes")->delimiter(',');
  m->add_option("--l", mc.ls, "word lengths")->delimiter(',');
  m->add_option("--eps", mc.epss, "moment tolerances")->delimiter(',');
  m->add_option("--radius", mc.radii, "operator norm bounds (default from the spec)")->delimiter(',');
  m->add_option("--samples", mc.samples, "samples per k");
  m->add_option("--seed", mc.seed, "random seed");
  m->add_option("--y-pool", mc.y_pool, "y-candidates per k for m > 0");
  m->add_option("--threads", mc.threads, "worker threads (0: all cores)");
  m->add_flag("--presence", mc.presence, "estimate the projection of the joint set instead of the sup over y");
  m->add_option("--format", mc.format, "csv, json or text");
  m->add_option("--out", mc.out, "output file (csv also writes <out>.summary.json)");
  m->add_option("--config", mc.config, "JSON file with the same keys; flags win");

  std::string poly;
  int index = 1;
  std::string dq_format = "text";
  auto* d = app.add_subcommand("dq", "free difference quotient of a polynomial");
  d->add_option("poly", poly, "polynomial, e.g. \"b0 t1 b1 t2\"")->required();
  d->add_option("i", index, "variable index (1-based)")->required();
  d->add_option("--format", dq_format, "text or json");

  std::string check_id, check_config, check_format_opt = "text", check_out;
  auto* c = app.add_subcommand("check", "run one theorem check");
  c->add_option("id", check_id, "check id, e.g. T-BLOCK")->required();
  c->add_option("config", check_config, "check config (JSON)");
  c->add_option("--format", check_format_opt, "text or json");
  c->add_option("--out", check_out, "write the JSON report here and the text report to <out>.txt");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  try {
    if (*s) return cmd_chi_single(single);
    if (*m) return cmd_chi_mc(mc, *m);
    if (*d) return cmd_dq(poly, index, dq_format);
    if (*c) return cmd_check(check_id, check_config, check_format_opt, check_out);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kComputeFailure;
  }
  return kUsage;
}
