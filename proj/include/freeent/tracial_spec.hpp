#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "freeent/matcore.hpp"
#include "freeent/spectra.hpp"
#include "json.hpp"

namespace freeent {

/// A word over the letters 0..n+m-1 (X letters first, then Y letters).
using Word = std::vector<int>;

/// Smallest word among the rotations of w and the rotations of its reversal.
/// For self-adjoint variables tau(w) and tau(reverse w) are complex conjugates,
/// so real targets only depend on this class.
Word canonical_word(const Word& w);

/// Every canonical word of length 1..l over `letters` letters, shortest first.
std::vector<Word> canonical_words(int letters, int l);

std::string word_to_string(const Word& w);

/// Validation failure listing every problem found.
class SpecError : public std::invalid_argument {
 public:
  explicit SpecError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

/// Variables given as polynomials p_j(s_c) in mutually free self-adjoint
/// generators s_1, ..., s_C with prescribed laws. Two variables sharing a
/// component commute; X = Y is variables {0: s, 1: s}.
struct FreeModel {
  struct Variable {
    int component = 0;
    std::vector<double> poly{0.0, 1.0};  // c0 + c1 s + c2 s^2 + ...
  };
  std::vector<SpectralMeasure> components;
  std::vector<Variable> variables;

  /// tau of a word in the variables, through free cumulants.
  double moment(const Word& w) const;
};

/// Variables realized by explicit d x d Hermitian matrices, tau = normalized trace.
struct MatrixModel {
  MatrixTuple matrices;
};

using Generator = std::variant<FreeModel, MatrixModel>;

/// Joint distribution of (X_1..X_n, Y_1..Y_m) through its mixed moments.
///
/// Targets are stored by canonical word. A generator, when present, supplies
/// targets for words beyond the explicit table, so l_max does not limit it.
class TracialSpec {
 public:
  TracialSpec(int n, int m, int l_max, const std::map<Word, double>& targets,
              std::optional<Generator> generator = std::nullopt);

  /// Spec driven entirely by a generator; l_max only bounds the explicit table (empty).
  static TracialSpec from_generator(int n, int m, Generator generator);

  int n() const { return n_; }
  int m() const { return m_; }
  int letters() const { return n_ + m_; }
  int l_max() const { return l_max_; }
  bool has_generator() const { return generator_.has_value(); }
  const std::optional<Generator>& generator() const { return generator_; }
  const std::map<Word, double>& targets() const { return targets_; }

  /// True when every word of length <= l has a target.
  bool covers(int l) const { return has_generator() || l <= l_max_; }
  /// Target of a word; throws SpecError when the spec is too shallow.
  double target(const Word& w) const;

  /// Spec of the chosen letters, x_letters becoming X and y_letters Y.
  TracialSpec restrict(const std::vector<int>& x_letters, const std::vector<int>& y_letters) const;
  TracialSpec x_marginal() const;
  /// The Y letters as a plain spec (n = m, m = 0).
  TracialSpec y_marginal() const;
  /// All letters as X (n + m, 0).
  TracialSpec joint() const;
  /// Y letters as X and X letters as Y.
  TracialSpec swapped() const;

  double mean(int letter) const { return target({letter}); }
  double second_moment(int letter) const { return target({letter, letter}); }

 private:
  int n_ = 0;
  int m_ = 0;
  int l_max_ = 0;
  std::map<Word, double> targets_;
  std::optional<Generator> generator_;
  std::shared_ptr<std::mutex> cache_mutex_ = std::make_shared<std::mutex>();
  std::shared_ptr<std::map<Word, double>> cache_ = std::make_shared<std::map<Word, double>>();
};

/// Spec documents:
///   {"n": 1, "m": 0, "l_max": 4,
///    "targets": [{"word": [0, 0], "value": 1.0}, ...],
///    "generator": {"type": "free",
///                  "components": [<measure document>, ...],
///                  "variables": [{"component": 0, "poly": [0, 1]}, ...]}
///              | {"type": "matrix", "matrices": [{"re": [[...], ...], "im": [[...], ...]}, ...]}}
/// Word letters are 0-based: X_1..X_n are 0..n-1 and Y_j is n+j-1. Both
/// "targets" and "generator" are optional but one of them must be present.
/// Every problem is collected into one SpecError.
TracialSpec spec_from_json(const nlohmann::json& doc);
nlohmann::json spec_to_json(const TracialSpec& spec);

}  // namespace freeent
