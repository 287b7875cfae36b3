#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "freeent/spectra.hpp"
#include "freeent/tracial_spec.hpp"
#include "json.hpp"

namespace freeent {

enum class Relation { LessEqual, Equal, GreaterEqual };
std::string relation_symbol(Relation r);

/// Whether `lhs rel rhs` holds within `tolerance`. -inf is exact: -inf <= anything,
/// nothing finite is <= -inf, and -inf = -inf.
bool relation_holds(double lhs, double rhs, Relation r, double tolerance);

/// Deterministic checks use quadrature and closed forms only; statistical
/// ones use Monte Carlo microstate volumes.
enum class CheckTier { Deterministic, Statistical };

/// One compared pair, e.g. one k of a statistical check.
struct CheckRow {
  std::string label;
  double lhs = 0.0;
  double rhs = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

/// lhs, rhs and tolerance are those of the deciding row: the row with the
/// worst margin, so pass holds iff every row passes.
struct CheckReport {
  std::string id;
  double lhs = 0.0;
  double rhs = 0.0;
  Relation relation = Relation::Equal;
  double tolerance = 0.0;
  bool pass = false;
  CheckTier tier = CheckTier::Deterministic;
  std::vector<CheckRow> rows;
  std::vector<std::string> diagnostics;
};

/// Settings shared by the checks. Empty optionals select per-check defaults.
struct CheckConfig {
  std::vector<int> ks{2, 3, 4, 5, 6};
  int l = 3;
  double eps = 0.35;
  /// 0 selects default_radius of the model.
  double radius = 0.0;
  std::size_t samples = 100000;
  std::uint64_t seed = 1;
  int threads = 1;
  int y_pool = 16;
  /// T-COV1, T-COVGEN: the law and the map ("identity", "affine:a,b", "poly:c0,c1,..", "arctan:s").
  std::optional<SpectralMeasure> measure;
  std::optional<std::string> map;
  /// Statistical checks: the model, replacing the built-in free pair.
  std::optional<TracialSpec> spec;
  /// T-BROWN.
  std::vector<double> times{0.25, 1.0};
  /// T-BLOCK.
  std::vector<int> block_sizes{2, 3};
  std::vector<int> block_arities{1, 2};
};

/// Thrown for configurations a check cannot run with.
class CheckConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// All check ids, in a fixed order.
const std::vector<std::string>& check_ids();
CheckTier check_tier(const std::string& id);

/// Throws CheckConfigError for an unknown id or an infeasible configuration.
CheckReport run_check(const std::string& id, const CheckConfig& cfg = {});

/// Keys: ks, l, eps, radius, samples, seed, threads, y_pool, measure (a
/// measure document), map, spec (a spec document), times, block_sizes,
/// block_arities. Unknown keys are rejected.
CheckConfig check_config_from_json(const nlohmann::json& doc);

nlohmann::json report_to_json(const CheckReport& r);
std::string report_to_text(const CheckReport& r);

/// Density of (1/2 delta_-1 + 1/2 delta_1) boxplus semicircle(t) on a uniform
/// grid, from the subordination cubic w^3 - z w^2 + (t - 1) w + z = 0.
SpectralMeasure two_atom_semicircle_convolution(double t, int points = 4097);

}  // namespace freeent
