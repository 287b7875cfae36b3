#include "freeent/microstates.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <stdexcept>
#include <thread>

namespace freeent {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kJointDraws = 50000;
constexpr std::size_t kChunk = 4096;

// Canonical words up to length l arranged in a prefix trie, so products of
// shared prefixes are formed once per tuple.
class WordEvaluator {
 public:
  WordEvaluator(const TracialSpec& spec, int letters, int l) : letters_(letters), l_(l) {
    nodes_.push_back({-1, -1, 0, false, 0.0});
    for (const Word& w : canonical_words(letters, l)) {
      int node = 0;
      for (const int letter : w) node = child(node, letter);
      nodes_[static_cast<std::size_t>(node)].terminal = true;
      nodes_[static_cast<std::size_t>(node)].target = spec.target(w);
    }
    for (std::size_t i = 1; i < nodes_.size(); ++i) by_depth_[nodes_[i].depth].push_back(static_cast<int>(i));
    for (std::size_t i = 1; i < nodes_.size(); ++i)
      if (nodes_[i].parent > 0) nodes_[static_cast<std::size_t>(nodes_[i].parent)].has_children = true;
  }

  int levels() const { return l_; }

  // dev[p] = max |tau_k(w) - target(w)| over canonical words of length <= p
  // (dev[0] = 0). Evaluation stops after level p once dev[p] >= stop[p]; the
  // remaining levels are then +inf.
  std::vector<double> deviations(const std::vector<const CMatrix*>& mats, const std::vector<double>& stop) const {
    std::vector<double> dev(static_cast<std::size_t>(l_) + 1, 0.0);
    if (l_ == 0) return dev;
    const auto k = mats.front()->rows();
    const double inv_k = 1.0 / static_cast<double>(k);
    std::vector<CMatrix> products(nodes_.size());
    double worst = 0.0;
    for (int p = 1; p <= l_; ++p) {
      const auto it = by_depth_.find(p);
      if (it != by_depth_.end()) {
        for (const int id : it->second) {
          const Node& node = nodes_[static_cast<std::size_t>(id)];
          const CMatrix& x = *mats[static_cast<std::size_t>(node.letter)];
          if (node.terminal) {
            Complex tr;
            if (p == 1) {
              tr = x.trace();
            } else {
              const CMatrix& prefix = products[static_cast<std::size_t>(node.parent)];
              tr = prefix.cwiseProduct(x.transpose()).sum();
            }
            worst = std::max(worst, std::abs(tr * inv_k - node.target));
          }
          if (node.has_children) {
            if (p == 1)
              products[static_cast<std::size_t>(id)] = x;
            else
              products[static_cast<std::size_t>(id)].noalias() = products[static_cast<std::size_t>(node.parent)] * x;
          }
        }
      }
      dev[static_cast<std::size_t>(p)] = worst;
      if (worst >= stop[static_cast<std::size_t>(p)]) {
        for (int q = p + 1; q <= l_; ++q) dev[static_cast<std::size_t>(q)] = kInf;
        break;
      }
    }
    return dev;
  }

 private:
  struct Node {
    int parent;
    int letter;
    int depth;
    bool terminal;
    double target;
    bool has_children = false;
  };

  int child(int node, int letter) {
    const auto key = std::make_pair(node, letter);
    if (const auto it = index_.find(key); it != index_.end()) return it->second;
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back({node, letter, nodes_[static_cast<std::size_t>(node)].depth + 1, false, 0.0});
    index_[key] = id;
    return id;
  }

  int letters_;
  int l_;
  std::vector<Node> nodes_;
  std::map<std::pair<int, int>, int> index_;
  std::map<int, std::vector<int>> by_depth_;
};

// ||m||_op, or an upper bound for it when that bound is <= r_min, or a lower
// bound when that bound exceeds r_max.
double norm_for(const CMatrix& m, double r_min, double r_max) {
  const double hs = std::sqrt(m.squaredNorm());
  if (hs <= r_min) return hs;
  const double rms = hs / std::sqrt(static_cast<double>(m.rows()));
  if (rms > r_max) return rms;
  const CMatrix sq = m * m;
  const double quartic = std::sqrt(std::sqrt(sq.squaredNorm()));
  if (quartic <= r_min) return quartic;
  return operator_norm(Hermitian(m));
}

std::vector<const CMatrix*> pointers(const MatrixTuple& t) {
  std::vector<const CMatrix*> out;
  for (const auto& h : t.matrices()) out.push_back(&h.matrix());
  return out;
}

bool check_membership(const MatrixTuple& t, const TracialSpec& spec, const MicrostateParams& p) {
  if (static_cast<int>(t.size()) != spec.letters()) throw std::invalid_argument("microstate test: tuple size does not match the spec");
  if (t.dim() != p.k) throw std::invalid_argument("microstate test: matrix dimension differs from k");
  validate_params(spec, p);
  for (const auto& h : t.matrices())
    if (norm_for(h.matrix(), p.R, p.R) > p.R) return false;
  const WordEvaluator ev(spec, spec.letters(), p.l);
  const std::vector<double> stop(static_cast<std::size_t>(p.l) + 1, p.eps);
  return ev.deviations(pointers(t), stop)[static_cast<std::size_t>(p.l)] < p.eps;
}

}  // namespace

void validate_params(const TracialSpec& spec, const MicrostateParams& p) {
  if (p.k < 1) throw std::invalid_argument("microstate params: k must be at least 1");
  if (p.l < 0) throw std::invalid_argument("microstate params: l must be nonnegative");
  if (!(p.eps > 0.0)) throw std::invalid_argument("microstate params: eps must be positive");
  if (!(p.R > 0.0)) throw std::invalid_argument("microstate params: R must be positive");
  if (!spec.covers(p.l))
    throw SpecError({"targets only reach length " + std::to_string(spec.l_max()) + " but l = " + std::to_string(p.l)});
}

bool is_microstate(const MatrixTuple& t, const TracialSpec& spec, const MicrostateParams& p) {
  return check_membership(t, spec.m() == 0 ? spec : spec.x_marginal(), p);
}

bool is_relative_microstate(const MatrixTuple& x, const MatrixTuple& y, const TracialSpec& spec,
                            const MicrostateParams& p) {
  if (static_cast<int>(x.size()) != spec.n() || static_cast<int>(y.size()) != spec.m())
    throw std::invalid_argument("relative microstate test: tuple sizes do not match (n, m)");
  if (y.empty()) return is_microstate(x, spec, p);
  return check_membership(x.concat(y), spec, p);
}

Sampler resolve_sampler(Sampler s, int k) {
  if (s != Sampler::Auto) return s;
  return k < 3 ? Sampler::BallRejection : Sampler::GaussianImportance;
}

std::string sampler_name(Sampler s) {
  switch (s) {
    case Sampler::Auto:
      return "auto";
    case Sampler::BallRejection:
      return "ball";
    case Sampler::GaussianImportance:
      return "gaussian";
  }
  return "auto";
}

// -- volume estimation -------------------------------------------------------

namespace {

struct Accumulator {
  std::size_t count = 0;
  double max_lw = -kInf;
  double s1 = 0.0;
  double s2 = 0.0;

  void add(double lw) {
    if (lw > max_lw) {
      const double r = std::exp(max_lw - lw);
      s1 = s1 * r + 1.0;
      s2 = s2 * r * r + 1.0;
      max_lw = lw;
    } else {
      const double e = std::exp(lw - max_lw);
      s1 += e;
      s2 += e * e;
    }
    ++count;
  }

  void merge(const Accumulator& o) {
    if (o.count == 0) return;
    if (count == 0) {
      *this = o;
      return;
    }
    const double m = std::max(max_lw, o.max_lw);
    const double ra = std::exp(max_lw - m), rb = std::exp(o.max_lw - m);
    s1 = s1 * ra + o.s1 * rb;
    s2 = s2 * ra * ra + o.s2 * rb * rb;
    max_lw = m;
    count += o.count;
  }

  VolumeEstimate finish(std::size_t n, Sampler method, double log_region) const {
    VolumeEstimate e;
    e.samples = n;
    e.accepted = count;
    e.method = method;
    e.log_upper_bound = log_region - std::log(static_cast<double>(n));
    if (count == 0) {
      e.log_volume = -kInf;
      e.stderr_log = 0.0;
      return e;
    }
    const double N = static_cast<double>(n);
    e.log_volume = std::log(s1) + max_lw - std::log(N);
    e.stderr_log = std::sqrt(std::max(0.0, N * s2 / (s1 * s1) - 1.0) / N);
    return e;
  }
};

struct Proposal {
  Sampler method;
  int k;
  std::vector<double> mean;
  std::vector<double> variance;
  std::vector<double> radius;
  double log_region = 0.0;  // log vol of the product of Hilbert-Schmidt balls

  // Draws x and returns -log density (Gaussian) or log vol (ball).
  double draw(RandomStream& rng, std::vector<Hermitian>& out) const {
    const std::size_t n = mean.size();
    const int d = k * k;
    double lw = 0.0;
    out.clear();
    for (std::size_t i = 0; i < n; ++i) {
      if (method == Sampler::BallRejection) {
        out.push_back(sample_hs_ball(k, radius[i], rng));
        continue;
      }
      const double sd = std::sqrt(variance[i] / k);
      std::vector<double> c(static_cast<std::size_t>(d));
      double q = 0.0;
      for (int j = 0; j < d; ++j) {
        const double z = rng.normal();
        q += z * z;
        c[static_cast<std::size_t>(j)] = sd * z + (j < k ? mean[i] : 0.0);
      }
      lw += 0.5 * d * std::log(2.0 * std::numbers::pi * variance[i] / k) + 0.5 * q;
      out.push_back(Hermitian::from_coordinates(k, c));
    }
    return method == Sampler::BallRejection ? log_region : lw;
  }
};

Proposal make_proposal(const TracialSpec& spec, int k, const std::vector<SweepCell>& cells, Sampler sampler) {
  Proposal p;
  p.method = resolve_sampler(sampler, k);
  p.k = k;
  double r_max = 0.0, eps_max = 0.0;
  int l_min = std::numeric_limits<int>::max();
  for (const auto& c : cells) {
    r_max = std::max(r_max, c.R);
    eps_max = std::max(eps_max, c.eps);
    l_min = std::min(l_min, c.l);
  }
  const bool have_second = spec.covers(2);
  const double sk = std::sqrt(static_cast<double>(k));
  for (int i = 0; i < spec.n(); ++i) {
    const double mu = spec.covers(1) ? spec.mean(i) : 0.0;
    const double t2 = have_second ? spec.second_moment(i) : mu * mu + 1.0;
    p.mean.push_back(mu);
    p.variance.push_back(std::max(t2 - mu * mu, 0.1));
    double r = r_max * sk;
    if (l_min >= 2 && have_second) r = std::min(r, std::sqrt(k * (t2 + eps_max)));
    p.radius.push_back(r);
    p.log_region += log_unit_ball_volume(k * k) + k * k * std::log(r);
  }
  return p;
}

}  // namespace

VolumePass estimate_volumes(const TracialSpec& spec, int k, const std::vector<SweepCell>& cells,
                            const std::vector<MatrixTuple>& candidates, const RunOptions& options) {
  if (cells.empty()) throw std::invalid_argument("estimate_volumes: no sweep cells");
  if (options.samples < 100) throw std::invalid_argument("estimate_volumes: at least 100 samples are required");
  if (spec.n() < 1) throw std::invalid_argument("estimate_volumes: the spec has no X letters");
  int l_top = 0;
  double r_min = kInf, r_max = 0.0;
  for (const auto& c : cells) {
    validate_params(spec, {k, c.l, c.eps, c.R});
    l_top = std::max(l_top, c.l);
    r_min = std::min(r_min, c.R);
    r_max = std::max(r_max, c.R);
  }
  const bool relative = spec.m() > 0;
  for (const auto& y : candidates)
    if (static_cast<int>(y.size()) != spec.m() || y.dim() != k)
      throw std::invalid_argument("estimate_volumes: y-candidate does not match (m, k)");

  const WordEvaluator ev(spec, spec.letters(), l_top);
  // stop[p]: the largest eps among cells that still look at level p.
  std::vector<double> stop(static_cast<std::size_t>(l_top) + 1, 0.0);
  for (int p = 0; p <= l_top; ++p)
    for (const auto& c : cells)
      if (c.l >= p) stop[static_cast<std::size_t>(p)] = std::max(stop[static_cast<std::size_t>(p)], c.eps);

  const Proposal proposal = make_proposal(spec, k, cells, options.sampler);
  const std::size_t rows = relative ? candidates.size() : 1;
  std::vector<double> y_norm(candidates.size(), 0.0);
  for (std::size_t c = 0; c < candidates.size(); ++c)
    for (const auto& h : candidates[c].matrices()) y_norm[c] = std::max(y_norm[c], norm_for(h.matrix(), r_min, r_max));

  const std::size_t chunks = (options.samples + kChunk - 1) / kChunk;
  const std::size_t cell_count = cells.size();
  // per chunk: rows x cells accumulators, then cells for the union
  std::vector<std::vector<Accumulator>> results(chunks);

  auto run_chunk = [&](std::size_t chunk) {
    std::vector<Accumulator> acc((rows + 1) * cell_count);
    RandomStream rng(options.seed, (static_cast<std::uint64_t>(k) << 40) + chunk);
    const std::size_t begin = chunk * kChunk, end = std::min(options.samples, begin + kChunk);
    std::vector<Hermitian> xs;
    std::vector<char> any(cell_count);
    for (std::size_t s = begin; s < end; ++s) {
      const double lw = proposal.draw(rng, xs);
      double x_norm = -1.0;  // computed on first need
      std::fill(any.begin(), any.end(), 0);
      for (std::size_t row = 0; row < rows; ++row) {
        std::vector<const CMatrix*> mats;
        for (const auto& h : xs) mats.push_back(&h.matrix());
        if (relative)
          for (const auto& h : candidates[row].matrices()) mats.push_back(&h.matrix());
        const std::vector<double> dev = ev.deviations(mats, stop);
        for (std::size_t c = 0; c < cell_count; ++c) {
          const SweepCell& cell = cells[c];
          if (!(dev[static_cast<std::size_t>(cell.l)] < cell.eps)) continue;
          if (relative && y_norm[row] > cell.R) continue;
          if (x_norm < 0.0) {
            x_norm = 0.0;
            for (const auto& h : xs) x_norm = std::max(x_norm, norm_for(h.matrix(), r_min, r_max));
          }
          if (x_norm > cell.R) continue;
          acc[row * cell_count + c].add(lw);
          any[c] = 1;
        }
      }
      for (std::size_t c = 0; c < cell_count; ++c)
        if (any[c]) acc[rows * cell_count + c].add(lw);
    }
    results[chunk] = std::move(acc);
  };

  const int threads = std::max(1, std::min<int>(options.threads, static_cast<int>(chunks)));
  if (threads == 1) {
    for (std::size_t c = 0; c < chunks; ++c) run_chunk(c);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    std::mutex failure_mutex;
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        try {
          for (std::size_t c = next++; c < chunks; c = next++) run_chunk(c);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
  }

  std::vector<Accumulator> total((rows + 1) * cell_count);
  for (const auto& chunk : results)
    for (std::size_t i = 0; i < total.size(); ++i) total[i].merge(chunk[i]);

  VolumePass pass;
  pass.estimates.assign(rows, {});
  for (std::size_t row = 0; row < rows; ++row)
    for (std::size_t c = 0; c < cell_count; ++c)
      pass.estimates[row].push_back(total[row * cell_count + c].finish(options.samples, proposal.method, proposal.log_region));
  for (std::size_t c = 0; c < cell_count; ++c)
    pass.union_estimates.push_back(total[rows * cell_count + c].finish(options.samples, proposal.method, proposal.log_region));
  if (relative && candidates.empty()) {
    pass.estimates.clear();
    for (auto& u : pass.union_estimates) {
      u.log_volume = -kInf;
      u.accepted = 0;
    }
  }
  return pass;
}

VolumeEstimate estimate_volume(const TracialSpec& spec, const MicrostateParams& p, Sampler sampler,
                               const std::optional<MatrixTuple>& y, std::size_t samples, std::uint64_t seed,
                               int threads) {
  RunOptions options{samples, seed, threads, sampler};
  const SweepCell cell{p.l, p.eps, p.R};
  if (spec.m() > 0 && !y) throw std::invalid_argument("estimate_volume: the spec has Y letters but no y was given");
  std::vector<MatrixTuple> candidates;
  if (y && spec.m() > 0) candidates.push_back(*y);
  const VolumePass pass = estimate_volumes(spec, p.k, {cell}, candidates, options);
  return pass.estimates.front().front();
}

// -- y candidates ------------------------------------------------------------

namespace {

CMatrix rotate(const std::vector<double>& diag, const CMatrix& u) {
  const auto k = static_cast<Eigen::Index>(diag.size());
  Eigen::VectorXcd d(k);
  for (Eigen::Index i = 0; i < k; ++i) d(i) = diag[static_cast<std::size_t>(i)];
  return u * d.asDiagonal() * u.adjoint();
}

// Eigenvalues approximating mu at dimension k.
std::vector<double> spectrum_for(const SpectralMeasure& mu, int k) {
  std::vector<double> out;
  if (const auto* a = std::get_if<Atomic>(&mu.kind())) {
    std::vector<int> counts;
    std::vector<std::pair<double, std::size_t>> remainders;
    int used = 0;
    for (std::size_t i = 0; i < a->atoms.size(); ++i) {
      const double exact = a->atoms[i].second * k;
      const int c = static_cast<int>(std::floor(exact));
      counts.push_back(c);
      used += c;
      remainders.emplace_back(exact - c, i);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& x, const auto& y) { return x.first > y.first; });
    for (int j = 0; used < k; ++j, ++used) ++counts[remainders[static_cast<std::size_t>(j)].second];
    for (std::size_t i = 0; i < counts.size(); ++i)
      for (int c = 0; c < counts[i]; ++c) out.push_back(a->atoms[i].first);
    return out;
  }
  const auto [lo, hi] = mu.support();
  for (int i = 0; i < k; ++i) {
    const double q = (i + 0.5) / k;
    double a = lo, b = hi;
    for (int it = 0; it < 100; ++it) {
      const double mid = 0.5 * (a + b);
      (mu.cdf(mid) < q ? a : b) = mid;
    }
    out.push_back(0.5 * (a + b));
  }
  return out;
}

CMatrix matrix_poly(const std::vector<double>& c, const CMatrix& s) {
  const auto k = s.rows();
  CMatrix r = CMatrix::Zero(k, k);
  for (auto it = c.rbegin(); it != c.rend(); ++it) {
    r = r * s;
    r.diagonal().array() += *it;
  }
  return r;
}

MatrixTuple draw_candidate(const TracialSpec& spec, int k, RandomStream& rng) {
  std::vector<Hermitian> ys;
  const int n = spec.n(), m = spec.m();
  if (spec.has_generator()) {
    if (const auto* f = std::get_if<FreeModel>(&*spec.generator())) {
      std::map<int, CMatrix> comp;
      for (int j = n; j < n + m; ++j) {
        const int c = f->variables[static_cast<std::size_t>(j)].component;
        if (comp.count(c)) continue;
        const SpectralMeasure& mu = f->components[static_cast<std::size_t>(c)];
        if (const auto* s = std::get_if<Semicircle>(&mu.kind())) {
          CMatrix g = sample_gue(k, s->variance, rng).matrix();
          g.diagonal().array() += s->mean;
          comp[c] = g;
        } else {
          comp[c] = rotate(spectrum_for(mu, k), sample_haar_unitary(k, rng));
        }
      }
      for (int j = n; j < n + m; ++j) {
        const auto& v = f->variables[static_cast<std::size_t>(j)];
        ys.emplace_back(matrix_poly(v.poly, comp.at(v.component)), 1e-8);
      }
      return MatrixTuple(std::move(ys));
    }
    const MatrixTuple& mats = std::get<MatrixModel>(*spec.generator()).matrices;
    const int d = mats.dim();
    if (k % d != 0) return {};
    const CMatrix u = sample_haar_unitary(k, rng);
    const CMatrix eye = CMatrix::Identity(k / d, k / d);
    for (int j = n; j < n + m; ++j) {
      const CMatrix& a = mats[static_cast<std::size_t>(j)].matrix();
      CMatrix amp(k, k);
      for (int r = 0; r < d; ++r)
        for (int s = 0; s < d; ++s) amp.block(r * (k / d), s * (k / d), k / d, k / d) = a(r, s) * eye;
      ys.emplace_back(CMatrix(u * amp * u.adjoint()), 1e-8);
    }
    return MatrixTuple(std::move(ys));
  }
  for (int j = n; j < n + m; ++j) {
    const double mu = spec.covers(1) ? spec.mean(j) : 0.0;
    const double var = spec.covers(2) ? std::max(spec.second_moment(j) - mu * mu, 1e-3) : 1.0;
    CMatrix g = sample_gue(k, var, rng).matrix();
    g.diagonal().array() += mu;
    ys.emplace_back(g);
  }
  return MatrixTuple(std::move(ys));
}

}  // namespace

std::vector<MatrixTuple> y_candidates(const TracialSpec& spec, int k, int pool, const SweepCell& loosest,
                                      std::uint64_t seed) {
  std::vector<MatrixTuple> out;
  if (spec.m() == 0 || pool <= 0) return out;
  const TracialSpec ym = spec.y_marginal();
  const MicrostateParams p{k, loosest.l, loosest.eps, loosest.R};
  const int model_pool = (pool + 1) / 2;
  const int attempts = 4 * model_pool + 16;
  for (int a = 0; a < attempts && static_cast<int>(out.size()) < model_pool; ++a) {
    RandomStream rng(seed, (std::uint64_t{1} << 63) | (static_cast<std::uint64_t>(k) << 32) | static_cast<std::uint64_t>(a));
    MatrixTuple y = draw_candidate(spec, k, rng);
    if (y.empty()) break;
    if (is_microstate(y, ym, p)) out.push_back(std::move(y));
  }
  // the rest: y-parts of joint microstates, which favour y with large x-sections
  const TracialSpec joint = spec.joint();
  const Proposal prop = make_proposal(joint, k, {loosest}, Sampler::Auto);
  RandomStream rng(seed, (std::uint64_t{3} << 62) | (static_cast<std::uint64_t>(k) << 32));
  const WordEvaluator ev(joint, joint.letters(), p.l);
  const std::vector<double> stop(static_cast<std::size_t>(p.l) + 1, p.eps);
  std::vector<Hermitian> draw;
  const int n = spec.n();
  for (int a = 0; a < kJointDraws && static_cast<int>(out.size()) < pool; ++a) {
    prop.draw(rng, draw);
    const bool inside = std::all_of(draw.begin(), draw.end(),
                                    [&](const Hermitian& h) { return norm_for(h.matrix(), p.R, p.R) <= p.R; });
    if (!inside || !(ev.deviations(pointers(MatrixTuple(draw)), stop)[static_cast<std::size_t>(p.l)] < p.eps)) continue;
    out.emplace_back(std::vector<Hermitian>(draw.begin() + n, draw.end()));
  }
  return out;
}

// -- chi ---------------------------------------------------------------------

double extrapolate(const std::vector<ChiRow>& rows) {
  double best = -kInf;
  for (const auto& r : rows)
    if (std::isfinite(r.normalized)) best = std::max(best, r.normalized - r.normalized_stderr);
  return best;
}

double default_radius(const TracialSpec& spec) {
  double radius = 0.0;
  for (int j = 0; j < spec.letters(); ++j) {
    double r = -1.0;
    if (spec.has_generator()) {
      if (const auto* f = std::get_if<FreeModel>(&*spec.generator())) {
        const auto& v = f->variables[static_cast<std::size_t>(j)];
        if (v.poly == std::vector<double>{0.0, 1.0}) {
          const SpectralMeasure& mu = f->components[static_cast<std::size_t>(v.component)];
          if (const auto* s = std::get_if<Semicircle>(&mu.kind())) r = 4.0 * std::sqrt(s->variance) + std::abs(s->mean);
          if (const auto* a = std::get_if<Atomic>(&mu.kind())) {
            double top = 0.0;
            for (const auto& [x, w] : a->atoms) top = std::max(top, std::abs(x));
            r = 2.0 + 2.0 * top;
          }
        }
      }
    }
    if (r < 0.0) {
      const int deepest = spec.has_generator() ? 8 : spec.l_max();
      double top = 0.0;
      for (int p = 1; 2 * p <= deepest; ++p)
        top = std::max(top, std::pow(std::max(0.0, spec.target(Word(static_cast<std::size_t>(2 * p), j))), 0.5 / p));
      r = 2.0 + 2.0 * top;
    }
    radius = std::max(radius, r);
  }
  return radius;
}

ChiRow make_row(const VolumeEstimate& e, int k, int n, const SweepCell& cell, std::string y_id, double* bound) {
  ChiRow row{k, cell.l, cell.eps, cell.R, e.samples, e.log_volume, e.stderr_log, -kInf, 0.0, std::move(y_id)};
  const double k2 = static_cast<double>(k) * k;
  const double shift = 0.5 * n * std::log(static_cast<double>(k));
  if (std::isfinite(e.log_volume)) {
    row.normalized = e.log_volume / k2 + shift;
    row.normalized_stderr = e.stderr_log / k2;
  } else if (bound) {
    *bound = e.log_upper_bound / k2 + shift;
  }
  return row;
}

SweepResult sweep_chi(const TracialSpec& spec, const Sweep& sweep, const RunOptions& options, int y_pool,
                      Conditioning conditioning) {
  if (sweep.ks.empty() || sweep.ls.empty() || sweep.epss.empty())
    throw std::invalid_argument("sweep: k, l and eps lists must be nonempty");
  if (!std::is_sorted(sweep.ks.begin(), sweep.ks.end())) throw std::invalid_argument("sweep: k list must be ascending");
  const std::vector<double> radii = sweep.radii.empty() ? std::vector<double>{default_radius(spec)} : sweep.radii;
  std::vector<SweepCell> cells;
  for (const double R : radii)
    for (const int l : sweep.ls)
      for (const double eps : sweep.epss) cells.push_back({l, eps, R});
  SweepCell loosest{*std::min_element(sweep.ls.begin(), sweep.ls.end()),
                    *std::max_element(sweep.epss.begin(), sweep.epss.end()),
                    *std::max_element(radii.begin(), radii.end())};

  SweepResult result;
  for (const auto& c : cells) result.series.push_back({c, {}, 0.0, "", {}});
  for (const int k : sweep.ks) {
    std::vector<MatrixTuple> candidates;
    if (spec.m() > 0) {
      candidates = y_candidates(spec, k, y_pool, loosest, options.seed);
      if (candidates.empty())
        result.diagnostics.push_back("k=" + std::to_string(k) +
                                     ": no y-candidate lies in the Y-marginal microstate set; the relative microstate "
                                     "set is empty and the estimate is -inf");
    }
    const VolumePass pass = estimate_volumes(spec, k, cells, candidates, options);
    for (std::size_t c = 0; c < cells.size(); ++c) {
      ChiRow row{k, cells[c].l, cells[c].eps, cells[c].R, options.samples, -kInf, 0.0, -kInf, 0.0, "-"};
      const VolumeEstimate* best = nullptr;
      if (spec.m() == 0) {
        best = &pass.estimates[0][c];
      } else if (conditioning == Conditioning::Presence) {
        best = &pass.union_estimates[c];
        row.y_id = candidates.empty() ? "none" : "union";
      } else {
        row.y_id = "none";
        for (std::size_t y = 0; y < pass.estimates.size(); ++y) {
          const VolumeEstimate& e = pass.estimates[y][c];
          if (!best || e.log_volume > best->log_volume) {
            best = &e;
            row.y_id = "y" + std::to_string(y);
          }
        }
      }
      if (best) {
        double bound = 0.0;
        row = make_row(*best, k, spec.n(), cells[c], row.y_id, &bound);
        if (!std::isfinite(best->log_volume))
          result.series[c].diagnostics.push_back("k=" + std::to_string(k) + ": no accepted sample, normalized value below " +
                                                 std::to_string(bound));
      }
      result.series[c].per_k.push_back(row);
    }
  }
  for (auto& s : result.series) {
    s.extrapolated = extrapolate(s.per_k);
    for (const auto& r : s.per_k)
      if (r.normalized - r.normalized_stderr == s.extrapolated) s.y_used = "k=" + std::to_string(r.k) + " " + r.y_id;
  }
  double sup_r = -kInf;
  for (const double R : radii) {
    double inf_le = kInf;
    for (const auto& s : result.series)
      if (s.cell.R == R) inf_le = std::min(inf_le, s.extrapolated);
    sup_r = std::max(sup_r, inf_le);
  }
  result.summary = sup_r;
  return result;
}

namespace {

ChiEstimate single_cell(const TracialSpec& spec, const MicrostateParams& params, const std::vector<int>& ks, int y_pool,
                        std::size_t samples, std::uint64_t seed, int threads) {
  Sweep sweep{ks, {params.l}, {params.eps}, {params.R}};
  const SweepResult r = sweep_chi(spec, sweep, RunOptions{samples, seed, threads, Sampler::Auto}, y_pool);
  ChiEstimate e = r.series.front();
  e.diagnostics.insert(e.diagnostics.begin(), r.diagnostics.begin(), r.diagnostics.end());
  return e;
}

}  // namespace

ChiEstimate estimate_chi(const TracialSpec& spec, const MicrostateParams& params, const std::vector<int>& ks,
                         std::size_t samples, std::uint64_t seed, int threads) {
  return single_cell(spec.m() == 0 ? spec : spec.x_marginal(), params, ks, 0, samples, seed, threads);
}

ChiEstimate estimate_chi_relative(const TracialSpec& spec, const MicrostateParams& params, const std::vector<int>& ks,
                                  int y_pool, std::size_t samples, std::uint64_t seed, int threads) {
  return single_cell(spec, params, ks, y_pool, samples, seed, threads);
}

ChiPrime chi_prime(const TracialSpec& spec, const MicrostateParams& params, const std::vector<int>& ks,
                   std::size_t samples, std::uint64_t seed, int threads) {
  ChiPrime out;
  out.joint = estimate_chi(spec.joint(), params, ks, samples, seed, threads);
  if (spec.m() == 0) {
    out.value = out.joint.extrapolated;
    return out;
  }
  out.y_marginal = estimate_chi(spec.y_marginal(), params, ks, samples, seed, threads);
  const double a = out.joint.extrapolated, b = out.y_marginal.extrapolated;
  out.value = std::isinf(a) && a < 0 ? -kInf : a - b;
  return out;
}

}  // namespace freeent
