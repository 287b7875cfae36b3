#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "freeent/matcore.hpp"
#include "freeent/tracial_spec.hpp"

namespace freeent {

struct MicrostateParams {
  int k = 2;
  int l = 2;
  double eps = 0.5;
  double R = 4.0;
};

/// Throws std::invalid_argument unless k >= 1, l >= 0, eps > 0, R > 0 and the
/// spec has targets up to length l.
void validate_params(const TracialSpec& spec, const MicrostateParams& p);

/// Every ||t_i|| <= R and |tau_k(w) - target(w)| < eps for all words of length 1..l.
/// Uses the X letters of the spec.
bool is_microstate(const MatrixTuple& t, const TracialSpec& spec, const MicrostateParams& p);

/// (x, y) is a microstate for the joint spec; with m = 0 this is is_microstate.
bool is_relative_microstate(const MatrixTuple& x, const MatrixTuple& y, const TracialSpec& spec,
                            const MicrostateParams& p);

enum class Sampler { Auto, BallRejection, GaussianImportance };

/// Auto resolves to BallRejection for k < 3 and GaussianImportance otherwise.
Sampler resolve_sampler(Sampler s, int k);
std::string sampler_name(Sampler s);

/// log lambda(Gamma) with lambda Lebesgue measure on (M_k^sa)^n for the
/// Hilbert-Schmidt structure of the non-normalized trace.
///
/// BallRejection draws uniformly from a product of Hilbert-Schmidt balls that
/// contains Gamma; GaussianImportance draws each x_i from a GUE matched to
/// the target mean and variance of X_i and averages 1_Gamma / density.
/// stderr_log is the delta-method error sqrt((N s2 / s1^2 - 1) / N) of the
/// weighted mean. With no accepted sample the log volume is -inf and
/// log_upper_bound holds log(vol(region) / N).
struct VolumeEstimate {
  double log_volume = 0.0;
  double stderr_log = 0.0;
  std::size_t samples = 0;
  std::size_t accepted = 0;
  Sampler method = Sampler::BallRejection;
  double log_upper_bound = 0.0;
};

struct RunOptions {
  std::size_t samples = 100000;
  std::uint64_t seed = 1;
  int threads = 1;
  Sampler sampler = Sampler::Auto;
};

/// Samples are drawn in chunks of 4096, chunk j from Philox stream
/// (k << 40) + j, and reduced in chunk order, so results do not depend on
/// the thread count.
VolumeEstimate estimate_volume(const TracialSpec& spec, const MicrostateParams& p, Sampler sampler,
                               const std::optional<MatrixTuple>& y, std::size_t samples, std::uint64_t seed,
                               int threads = 1);

/// One (l, eps, R) cell of a sweep.
struct SweepCell {
  int l = 2;
  double eps = 0.5;
  double R = 4.0;
};

/// Volume estimates for every cell and every y-candidate from one shared set
/// of samples. estimates[c][i] is candidate c in cell i; with no candidates
/// (plain run) there is a single row. union_estimates[i] estimates the volume
/// of the set of x admitted by at least one candidate, a lower bound for the
/// projection of the joint microstate set.
struct VolumePass {
  std::vector<std::vector<VolumeEstimate>> estimates;
  std::vector<VolumeEstimate> union_estimates;
};

VolumePass estimate_volumes(const TracialSpec& spec, int k, const std::vector<SweepCell>& cells,
                            const std::vector<MatrixTuple>& candidates, const RunOptions& options);

/// y-candidates of dimension k for the Y letters of the spec, each passing
/// is_microstate for the Y-marginal at `loosest`. Half the pool comes from
/// model-aware draws: semicircular components are GUE, other components are
/// Haar-rotated diagonals of quantiles (atoms apportioned by largest
/// remainder), matrix models are Haar-rotated k/d-fold amplifications;
/// without a generator, variance-matched GUE draws. At most 4 * half + 16 of
/// these are tried. The rest are the y-parts of joint microstates found among
/// 50000 draws of the joint proposal, which favours y with large x-sections.
std::vector<MatrixTuple> y_candidates(const TracialSpec& spec, int k, int pool, const SweepCell& loosest,
                                      std::uint64_t seed);

struct ChiRow {
  int k = 0;
  int l = 0;
  double eps = 0.0;
  double R = 0.0;
  std::size_t samples = 0;
  double log_volume = 0.0;
  double stderr_log = 0.0;
  /// (1/k^2) log lambda + (n/2) log k, and its standard error.
  double normalized = 0.0;
  double normalized_stderr = 0.0;
  /// Index of the maximizing y-candidate, "-" for plain runs, "none" for an empty pool.
  std::string y_id = "-";
};

/// Row for an estimate of a set of n-tuples at dimension k. A -inf estimate
/// leaves normalized at -inf; `bound` then receives the normalized upper bound.
ChiRow make_row(const VolumeEstimate& e, int k, int n, const SweepCell& cell, std::string y_id,
                double* bound = nullptr);

struct ChiEstimate {
  SweepCell cell;
  std::vector<ChiRow> per_k;
  /// max over k of (normalized - normalized_stderr); -inf when every row is -inf.
  double extrapolated = 0.0;
  std::string y_used;
  std::vector<std::string> diagnostics;
};

struct Sweep {
  std::vector<int> ks{2, 3, 4, 5, 6, 7, 8};
  std::vector<int> ls{2, 3, 4};
  std::vector<double> epss{0.5, 0.35, 0.2};
  /// Empty means the default radius of the spec.
  std::vector<double> radii;
};

/// Kinds of volume a sweep reports for a spec with m > 0.
enum class Conditioning {
  /// sup over y-candidates of lambda(Gamma(X | y)).
  Relative,
  /// lambda of the union over y-candidates, a lower bound for lambda(pi Gamma(X, Y)).
  Presence,
};

struct SweepResult {
  std::vector<ChiEstimate> series;
  /// sup over R of inf over (l, eps) of the extrapolated values.
  double summary = 0.0;
  std::vector<std::string> diagnostics;
};

/// Runs every (k, l, eps, R) of the sweep. For m = 0 this is the plain
/// entropy of the X letters; otherwise the relative or presence variant.
SweepResult sweep_chi(const TracialSpec& spec, const Sweep& sweep, const RunOptions& options, int y_pool = 32,
                      Conditioning conditioning = Conditioning::Relative);

/// 2 + 2 max|atom| for atomic laws, 4 sqrt(variance) + |mean| for semicircular ones
/// and 2 + 2 max_p tau(x^2p)^(1/2p) otherwise, maximized over the X and Y letters.
double default_radius(const TracialSpec& spec);

ChiEstimate estimate_chi(const TracialSpec& spec, const MicrostateParams& params, const std::vector<int>& ks,
                         std::size_t samples, std::uint64_t seed, int threads = 1);

ChiEstimate estimate_chi_relative(const TracialSpec& spec, const MicrostateParams& params, const std::vector<int>& ks,
                                  int y_pool, std::size_t samples, std::uint64_t seed, int threads = 1);

/// chi(X, Y) - chi(Y : X), the second term approximated by the plain Y-marginal estimate.
struct ChiPrime {
  double value = 0.0;
  ChiEstimate joint;
  ChiEstimate y_marginal;
};

ChiPrime chi_prime(const TracialSpec& spec, const MicrostateParams& params, const std::vector<int>& ks,
                   std::size_t samples, std::uint64_t seed, int threads = 1);

/// Max over rows of (normalized - normalized_stderr), skipping -inf rows.
double extrapolate(const std::vector<ChiRow>& rows);

}  // namespace freeent
