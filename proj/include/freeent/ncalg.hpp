#pragma once

#include <compare>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "freeent/matcore.hpp"

namespace freeent {

/// The algebra B the coefficients live in.
///
/// Either plain scalars, a set of named symbols (enough for algebraic
/// manipulation and printing), or named d x d generator matrices.
class CoefficientAlgebra {
 public:
  static std::shared_ptr<const CoefficientAlgebra> scalars();
  /// Symbols listed in `selfadjoint` satisfy b* = b; the rest are free.
  static std::shared_ptr<const CoefficientAlgebra> symbolic(std::vector<std::string> names,
                                                            std::vector<std::string> selfadjoint = {});
  static std::shared_ptr<const CoefficientAlgebra> matrices(std::vector<std::string> names,
                                                            std::vector<CMatrix> mats);

  bool is_scalars() const { return names_.empty(); }
  bool has_matrices() const { return !mats_.empty(); }
  /// Matrix dimension d; 1 for scalars, 0 for purely symbolic algebras.
  int dim() const { return dim_; }
  const std::vector<std::string>& names() const { return names_; }
  bool contains(const std::string& name) const;
  bool is_selfadjoint(const std::string& name) const;
  const CMatrix& matrix(const std::string& name) const;
  double norm(const std::string& name) const;

  bool operator==(const CoefficientAlgebra& other) const;

 private:
  CoefficientAlgebra() = default;
  int index_of(const std::string& name) const;

  std::vector<std::string> names_;
  std::vector<bool> selfadjoint_;
  std::vector<CMatrix> mats_;
  int dim_ = 1;
};

using AlgebraPtr = std::shared_ptr<const CoefficientAlgebra>;

struct CoefLetter {
  std::string name;
  bool star = false;
  auto operator<=>(const CoefLetter&) const = default;
};

/// A product of generators; the empty word is the unit of B.
using CoefWord = std::vector<CoefLetter>;

/// b0 t_{i1} b1 ... t_{ip} bp, with 0-based indeterminate indices.
/// Invariant: slots.size() == letters.size() + 1.
struct Monomial {
  std::vector<CoefWord> slots{CoefWord{}};
  std::vector<int> letters;

  int degree() const { return static_cast<int>(letters.size()); }
  bool operator==(const Monomial&) const = default;
  std::strong_ordering operator<=>(const Monomial& other) const;
};

Monomial concat(const Monomial& a, const Monomial& b);

/// Element of B<t_1, ..., t_n> in normal form: a map from monomials to
/// nonzero complex scalars.
class NcPoly {
 public:
  using Terms = std::map<Monomial, Complex>;

  explicit NcPoly(int n, AlgebraPtr algebra = CoefficientAlgebra::scalars());

  static NcPoly constant(int n, Complex c, AlgebraPtr algebra = CoefficientAlgebra::scalars());
  /// t_i, 0-based.
  static NcPoly variable(int n, int i, AlgebraPtr algebra = CoefficientAlgebra::scalars());
  static NcPoly generator(int n, const std::string& name, AlgebraPtr algebra, bool star = false);
  static NcPoly monomial(int n, Complex c, Monomial m, AlgebraPtr algebra = CoefficientAlgebra::scalars());

  int arity() const { return n_; }
  int degree() const;
  bool is_zero() const { return terms_.empty(); }
  const Terms& terms() const { return terms_; }
  const AlgebraPtr& algebra() const { return algebra_; }
  bool contains_variable(int i) const;

  void add_term(Complex c, Monomial m);
  NcPoly& operator+=(const NcPoly& other);
  NcPoly& operator-=(const NcPoly& other);
  NcPoly& operator*=(Complex c);
  friend NcPoly operator+(NcPoly a, const NcPoly& b) { return a += b; }
  friend NcPoly operator-(NcPoly a, const NcPoly& b) { return a -= b; }
  friend NcPoly operator*(Complex c, NcPoly a) { return a *= c; }
  friend NcPoly operator*(const NcPoly& a, const NcPoly& b);
  bool operator==(const NcPoly& other) const;

  /// Exact equality up to |difference| <= tol on every coefficient.
  bool approx_equal(const NcPoly& other, double tol) const;

 private:
  int n_;
  AlgebraPtr algebra_;
  Terms terms_;
};

/// Element of B<t> (x) B<t>.
class NcBiPoly {
 public:
  using Terms = std::map<std::pair<Monomial, Monomial>, Complex>;

  explicit NcBiPoly(int n, AlgebraPtr algebra = CoefficientAlgebra::scalars());

  int arity() const { return n_; }
  bool is_zero() const { return terms_.empty(); }
  const Terms& terms() const { return terms_; }
  const AlgebraPtr& algebra() const { return algebra_; }

  void add_term(Complex c, Monomial left, Monomial right);
  NcBiPoly& operator+=(const NcBiPoly& other);
  friend NcBiPoly operator+(NcBiPoly a, const NcBiPoly& b) { return a += b; }
  bool operator==(const NcBiPoly& other) const;

  /// (a (x) b) G = a (x) bG
  friend NcBiPoly operator*(const NcBiPoly& d, const NcPoly& g);
  /// F (a (x) b) = Fa (x) b
  friend NcBiPoly operator*(const NcPoly& f, const NcBiPoly& d);

 private:
  int n_;
  AlgebraPtr algebra_;
  Terms terms_;
};

NcPoly multiply(const NcPoly& f, const NcPoly& g);
NcPoly adjoint(const NcPoly& f);
bool is_selfadjoint(const NcPoly& f);

/// Substitutes g[i] for t_i in f.
NcPoly compose(const NcPoly& f, const std::vector<NcPoly>& g);

/// Free difference quotient with respect to t_i (0-based).
NcBiPoly dquotient(const NcPoly& f, int i);

/// Images of the generators of B in M_k.
using Embedding = std::map<std::string, CMatrix>;

/// b -> b (x) 1_{k/d}, the unital block embedding of M_d into M_k.
Embedding block_embedding(const CoefficientAlgebra& algebra, int k);

CMatrix evaluate(const NcPoly& f, const MatrixTuple& x, const Embedding& embed);
/// Uses block_embedding for algebras with matrices.
CMatrix evaluate(const NcPoly& f, const MatrixTuple& x);
/// Asserts self-adjointness of the result (relative 1e-12).
Hermitian evaluate_hermitian(const NcPoly& f, const MatrixTuple& x, const Embedding& embed);
Hermitian evaluate_hermitian(const NcPoly& f, const MatrixTuple& x);

/// a (x) b evaluated as the map z -> sum a z b.
struct BiOperator {
  std::vector<std::pair<CMatrix, CMatrix>> legs;
  int dim = 0;

  CMatrix apply(const CMatrix& z) const;
};

BiOperator evaluate(const NcBiPoly& d, const MatrixTuple& x, const Embedding& embed);
BiOperator evaluate(const NcBiPoly& d, const MatrixTuple& x);

/// D_B F evaluated at a tuple: entry (i, j) is D_i F_j(x).
/// As a map it sends h = (h_1..h_n) to (sum_i D_i F_j(x) # h_i)_j.
class EvaluatedJacobian {
 public:
  EvaluatedJacobian(int n, int k, std::vector<std::vector<BiOperator>> entries);

  int arity() const { return n_; }
  int dim() const { return k_; }
  const BiOperator& entry(int i, int j) const;

  std::vector<CMatrix> apply(const std::vector<CMatrix>& h) const;
  /// Real (n k^2) x (n k^2) matrix in the orthonormal Hermitian coordinates
  /// of matcore. Throws if some output leaves the self-adjoint part.
  Eigen::MatrixXd real_matrix() const;

 private:
  int n_;
  int k_;
  std::vector<std::vector<BiOperator>> entries_;
};

EvaluatedJacobian jacobian(const std::vector<NcPoly>& f, const MatrixTuple& x, const Embedding& embed);
EvaluatedJacobian jacobian(const std::vector<NcPoly>& f, const MatrixTuple& x);

/// (1/k^2) log |det| of the real Jacobian, from its singular values.
/// Returns -infinity if any singular value is below 1e-12.
double logabs_functional(const EvaluatedJacobian& j);

/// F-hat at the given radii: every coefficient replaced by |c| times the
/// product of the operator norms of its generators.
double majorant_value(const NcPoly& f, const std::vector<double>& radii);

/// Whether the majorant certifies convergence at `radii`. Polynomials always
/// converge; for a truncated series the top-degree majorant mass m_D must
/// satisfy m_D^(1/D) < 1 (root test on the last retained order).
bool majorant_radius(const NcPoly& f, const std::vector<double>& radii, bool truncated_series = false);

class MajorantDivergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Formal inverse G of F_i = t_i + eps P_i, truncated at eps^order.
/// Throws MajorantDivergence when g = r + |eps| max_i P-hat_i(g, ..., g)
/// has no fixed point starting from r = radius.
std::vector<NcPoly> perturbation_inverse(const std::vector<NcPoly>& p, double eps, int order,
                                         double radius = 2.0);

/// Text form. Grammar:
///   poly   := ['+'|'-'] term (('+'|'-') term)*
///   term   := factor factor*                (juxtaposition multiplies)
///   factor := atom ['^' INT]
///   atom   := NUMBER ['i'] | 't' DIGITS | IDENT ['*'] | '(' poly ')'
/// t1, t2, ... are the indeterminates (1-based in text); any other
/// identifier is a generator of B, with a trailing '*' for its adjoint.
class ParseError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Generators not known to `algebra` are rejected unless `algebra` is null,
/// in which case a symbolic algebra of all identifiers seen is created.
/// n = 0 means the largest index seen.
NcPoly parse_poly(const std::string& text, int n = 0, AlgebraPtr algebra = nullptr);

std::string to_string(const Monomial& m);
std::string to_string(const NcPoly& f);
/// Terms printed as "left (x) right".
std::string to_string(const NcBiPoly& d);

}  // namespace freeent
