#include "freeent/ncalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/SVD>

namespace freeent {

// -- CoefficientAlgebra --------------------------------------------------------

AlgebraPtr CoefficientAlgebra::scalars() {
  static const AlgebraPtr instance(new CoefficientAlgebra());
  return instance;
}

AlgebraPtr CoefficientAlgebra::symbolic(std::vector<std::string> names, std::vector<std::string> selfadjoint) {
  auto* a = new CoefficientAlgebra();
  a->dim_ = 0;
  for (auto& name : names) {
    if (a->index_of(name) >= 0) throw std::invalid_argument("duplicate generator name: " + name);
    a->selfadjoint_.push_back(std::find(selfadjoint.begin(), selfadjoint.end(), name) != selfadjoint.end());
    a->names_.push_back(std::move(name));
  }
  if (a->names_.empty()) a->dim_ = 1;
  return AlgebraPtr(a);
}

AlgebraPtr CoefficientAlgebra::matrices(std::vector<std::string> names, std::vector<CMatrix> mats) {
  if (names.size() != mats.size()) throw std::invalid_argument("generator names and matrices differ in count");
  auto* a = new CoefficientAlgebra();
  std::unique_ptr<CoefficientAlgebra> guard(a);
  for (std::size_t g = 0; g < names.size(); ++g) {
    const CMatrix& m = mats[g];
    if (m.rows() != m.cols() || m.rows() == 0) throw std::invalid_argument("generator " + names[g] + " is not square");
    if (g > 0 && m.rows() != mats[0].rows())
      throw std::invalid_argument("generator matrices must share one dimension");
    if (a->index_of(names[g]) >= 0) throw std::invalid_argument("duplicate generator name: " + names[g]);
    const double scale = 1.0 + m.cwiseAbs().maxCoeff();
    a->selfadjoint_.push_back((m - m.adjoint()).cwiseAbs().maxCoeff() <= 1e-12 * scale);
    a->names_.push_back(names[g]);
  }
  a->dim_ = mats.empty() ? 1 : static_cast<int>(mats[0].rows());
  a->mats_ = std::move(mats);
  return AlgebraPtr(guard.release());
}

int CoefficientAlgebra::index_of(const std::string& name) const {
  const auto it = std::find(names_.begin(), names_.end(), name);
  return it == names_.end() ? -1 : static_cast<int>(it - names_.begin());
}

bool CoefficientAlgebra::contains(const std::string& name) const { return index_of(name) >= 0; }

bool CoefficientAlgebra::is_selfadjoint(const std::string& name) const {
  const int g = index_of(name);
  if (g < 0) throw std::invalid_argument("unknown generator: " + name);
  return selfadjoint_[static_cast<std::size_t>(g)];
}

const CMatrix& CoefficientAlgebra::matrix(const std::string& name) const {
  const int g = index_of(name);
  if (g < 0) throw std::invalid_argument("unknown generator: " + name);
  if (mats_.empty()) throw std::invalid_argument("generator " + name + " has no matrix");
  return mats_[static_cast<std::size_t>(g)];
}

double CoefficientAlgebra::norm(const std::string& name) const {
  const CMatrix& m = matrix(name);
  Eigen::JacobiSVD<CMatrix> svd(m);
  return svd.singularValues()(0);
}

bool CoefficientAlgebra::operator==(const CoefficientAlgebra& other) const {
  if (this == &other) return true;
  if (names_ != other.names_ || selfadjoint_ != other.selfadjoint_ || dim_ != other.dim_) return false;
  if (mats_.size() != other.mats_.size()) return false;
  for (std::size_t g = 0; g < mats_.size(); ++g)
    if (mats_[g] != other.mats_[g]) return false;
  return true;
}

// -- Monomial ------------------------------------------------------------------

std::strong_ordering Monomial::operator<=>(const Monomial& other) const {
  if (auto c = degree() <=> other.degree(); c != 0) return c;
  if (auto c = letters <=> other.letters; c != 0) return c;
  return slots <=> other.slots;
}

Monomial concat(const Monomial& a, const Monomial& b) {
  Monomial m;
  m.slots = a.slots;
  m.slots.back().insert(m.slots.back().end(), b.slots.front().begin(), b.slots.front().end());
  m.slots.insert(m.slots.end(), b.slots.begin() + 1, b.slots.end());
  m.letters = a.letters;
  m.letters.insert(m.letters.end(), b.letters.begin(), b.letters.end());
  return m;
}

namespace {

constexpr double kCoefficientZero = 1e-300;

void normalize(Monomial& m, int n, const CoefficientAlgebra& algebra) {
  if (m.slots.size() != m.letters.size() + 1)
    throw std::invalid_argument("monomial needs one coefficient slot more than letters");
  for (const int letter : m.letters)
    if (letter < 0 || letter >= n) throw std::out_of_range("indeterminate index out of range");
  for (auto& slot : m.slots) {
    for (auto& g : slot) {
      if (!algebra.contains(g.name)) throw std::invalid_argument("generator not in coefficient algebra: " + g.name);
      if (algebra.is_selfadjoint(g.name)) g.star = false;
    }
  }
}

AlgebraPtr common_algebra(const AlgebraPtr& a, const AlgebraPtr& b) {
  if (a == b || *a == *b) return a;
  if (a->is_scalars()) return b;
  if (b->is_scalars()) return a;
  throw std::invalid_argument("mismatched coefficient algebras");
}

void check_arity(int a, int b) {
  if (a != b) throw std::invalid_argument("polynomials have different numbers of indeterminates");
}

template <typename Map, typename Key>
void accumulate(Map& terms, Key&& key, Complex c) {
  auto [it, inserted] = terms.try_emplace(std::forward<Key>(key), c);
  if (!inserted) {
    it->second += c;
    if (std::abs(it->second) <= kCoefficientZero) terms.erase(it);
  } else if (std::abs(c) <= kCoefficientZero) {
    terms.erase(it);
  }
}

Monomial reversed_adjoint(const Monomial& m) {
  Monomial r;
  r.letters.assign(m.letters.rbegin(), m.letters.rend());
  r.slots.clear();
  for (auto slot = m.slots.rbegin(); slot != m.slots.rend(); ++slot) {
    CoefWord w(slot->rbegin(), slot->rend());
    for (auto& g : w) g.star = !g.star;
    r.slots.push_back(std::move(w));
  }
  return r;
}

}  // namespace

// -- NcPoly --------------------------------------------------------------------

NcPoly::NcPoly(int n, AlgebraPtr algebra) : n_(n), algebra_(std::move(algebra)) {
  if (n < 0) throw std::invalid_argument("negative number of indeterminates");
  if (!algebra_) algebra_ = CoefficientAlgebra::scalars();
}

NcPoly NcPoly::constant(int n, Complex c, AlgebraPtr algebra) {
  NcPoly p(n, std::move(algebra));
  p.add_term(c, Monomial{});
  return p;
}

NcPoly NcPoly::variable(int n, int i, AlgebraPtr algebra) {
  NcPoly p(n, std::move(algebra));
  p.add_term(1.0, Monomial{{CoefWord{}, CoefWord{}}, {i}});
  return p;
}

NcPoly NcPoly::generator(int n, const std::string& name, AlgebraPtr algebra, bool star) {
  NcPoly p(n, std::move(algebra));
  p.add_term(1.0, Monomial{{CoefWord{CoefLetter{name, star}}}, {}});
  return p;
}

NcPoly NcPoly::monomial(int n, Complex c, Monomial m, AlgebraPtr algebra) {
  NcPoly p(n, std::move(algebra));
  p.add_term(c, std::move(m));
  return p;
}

int NcPoly::degree() const {
  int d = 0;
  for (const auto& [m, c] : terms_) d = std::max(d, m.degree());
  return d;
}

bool NcPoly::contains_variable(int i) const {
  for (const auto& [m, c] : terms_)
    if (std::find(m.letters.begin(), m.letters.end(), i) != m.letters.end()) return true;
  return false;
}

void NcPoly::add_term(Complex c, Monomial m) {
  normalize(m, n_, *algebra_);
  accumulate(terms_, std::move(m), c);
}

NcPoly& NcPoly::operator+=(const NcPoly& other) {
  check_arity(n_, other.n_);
  algebra_ = common_algebra(algebra_, other.algebra_);
  for (const auto& [m, c] : other.terms_) accumulate(terms_, m, c);
  return *this;
}

NcPoly& NcPoly::operator-=(const NcPoly& other) {
  check_arity(n_, other.n_);
  algebra_ = common_algebra(algebra_, other.algebra_);
  for (const auto& [m, c] : other.terms_) accumulate(terms_, m, -c);
  return *this;
}

NcPoly& NcPoly::operator*=(Complex c) {
  if (c == Complex(0.0)) {
    terms_.clear();
    return *this;
  }
  for (auto& [m, v] : terms_) v *= c;
  return *this;
}

NcPoly operator*(const NcPoly& a, const NcPoly& b) { return multiply(a, b); }

bool NcPoly::operator==(const NcPoly& other) const { return n_ == other.n_ && terms_ == other.terms_; }

bool NcPoly::approx_equal(const NcPoly& other, double tol) const {
  if (n_ != other.n_) return false;
  NcPoly diff = *this;
  diff -= other;
  for (const auto& [m, c] : diff.terms_)
    if (std::abs(c) > tol) return false;
  return true;
}

NcPoly multiply(const NcPoly& f, const NcPoly& g) {
  check_arity(f.arity(), g.arity());
  NcPoly out(f.arity(), common_algebra(f.algebra(), g.algebra()));
  for (const auto& [mf, cf] : f.terms())
    for (const auto& [mg, cg] : g.terms()) out.add_term(cf * cg, concat(mf, mg));
  return out;
}

NcPoly adjoint(const NcPoly& f) {
  NcPoly out(f.arity(), f.algebra());
  for (const auto& [m, c] : f.terms()) out.add_term(std::conj(c), reversed_adjoint(m));
  return out;
}

bool is_selfadjoint(const NcPoly& f) { return adjoint(f) == f; }

NcPoly compose(const NcPoly& f, const std::vector<NcPoly>& g) {
  if (g.size() != static_cast<std::size_t>(f.arity()))
    throw std::invalid_argument("compose: need one polynomial per indeterminate");
  const int n = g.empty() ? 0 : g.front().arity();
  AlgebraPtr algebra = f.algebra();
  for (const auto& gi : g) {
    check_arity(gi.arity(), n);
    algebra = common_algebra(algebra, gi.algebra());
  }
  auto slot_poly = [&](const CoefWord& w) { return NcPoly::monomial(n, 1.0, Monomial{{w}, {}}, algebra); };
  NcPoly out(n, algebra);
  for (const auto& [m, c] : f.terms()) {
    NcPoly term = c * slot_poly(m.slots[0]);
    for (std::size_t p = 0; p < m.letters.size(); ++p) {
      term = term * g[static_cast<std::size_t>(m.letters[p])];
      if (!m.slots[p + 1].empty()) term = term * slot_poly(m.slots[p + 1]);
    }
    out += term;
  }
  return out;
}

// -- NcBiPoly ------------------------------------------------------------------

NcBiPoly::NcBiPoly(int n, AlgebraPtr algebra) : n_(n), algebra_(std::move(algebra)) {
  if (!algebra_) algebra_ = CoefficientAlgebra::scalars();
}

void NcBiPoly::add_term(Complex c, Monomial left, Monomial right) {
  normalize(left, n_, *algebra_);
  normalize(right, n_, *algebra_);
  accumulate(terms_, std::make_pair(std::move(left), std::move(right)), c);
}

NcBiPoly& NcBiPoly::operator+=(const NcBiPoly& other) {
  check_arity(n_, other.n_);
  algebra_ = common_algebra(algebra_, other.algebra_);
  for (const auto& [key, c] : other.terms_) accumulate(terms_, key, c);
  return *this;
}

bool NcBiPoly::operator==(const NcBiPoly& other) const { return n_ == other.n_ && terms_ == other.terms_; }

NcBiPoly operator*(const NcBiPoly& d, const NcPoly& g) {
  check_arity(d.arity(), g.arity());
  NcBiPoly out(d.arity(), common_algebra(d.algebra(), g.algebra()));
  for (const auto& [key, c] : d.terms())
    for (const auto& [m, cg] : g.terms()) out.add_term(c * cg, key.first, concat(key.second, m));
  return out;
}

NcBiPoly operator*(const NcPoly& f, const NcBiPoly& d) {
  check_arity(d.arity(), f.arity());
  NcBiPoly out(d.arity(), common_algebra(d.algebra(), f.algebra()));
  for (const auto& [m, cf] : f.terms())
    for (const auto& [key, c] : d.terms()) out.add_term(cf * c, concat(m, key.first), key.second);
  return out;
}

NcBiPoly dquotient(const NcPoly& f, int i) {
  if (i < 0 || i >= f.arity()) throw std::out_of_range("dquotient: index out of range");
  NcBiPoly out(f.arity(), f.algebra());
  for (const auto& [m, c] : f.terms()) {
    for (std::size_t p = 0; p < m.letters.size(); ++p) {
      if (m.letters[p] != i) continue;
      Monomial left, right;
      left.slots.assign(m.slots.begin(), m.slots.begin() + static_cast<std::ptrdiff_t>(p) + 1);
      left.letters.assign(m.letters.begin(), m.letters.begin() + static_cast<std::ptrdiff_t>(p));
      right.slots.assign(m.slots.begin() + static_cast<std::ptrdiff_t>(p) + 1, m.slots.end());
      right.letters.assign(m.letters.begin() + static_cast<std::ptrdiff_t>(p) + 1, m.letters.end());
      out.add_term(c, std::move(left), std::move(right));
    }
  }
  return out;
}

// -- evaluation ----------------------------------------------------------------

Embedding block_embedding(const CoefficientAlgebra& algebra, int k) {
  Embedding e;
  if (algebra.is_scalars()) return e;
  if (!algebra.has_matrices()) throw std::invalid_argument("symbolic coefficients need an explicit embedding");
  const int d = algebra.dim();
  if (k % d != 0) throw std::invalid_argument("matrix dimension is not a multiple of the coefficient dimension");
  const int r = k / d;
  for (const auto& name : algebra.names()) {
    const CMatrix& b = algebra.matrix(name);
    CMatrix m = CMatrix::Zero(k, k);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        if (b(i, j) != Complex(0.0)) m.block(i * r, j * r, r, r) = b(i, j) * CMatrix::Identity(r, r);
    e.emplace(name, std::move(m));
  }
  return e;
}

namespace {

void check_tuple(int n, const MatrixTuple& x) {
  if (x.size() != static_cast<std::size_t>(n))
    throw std::invalid_argument("tuple arity does not match the number of indeterminates");
}

CMatrix coefficient_matrix(const CoefWord& w, const Embedding& embed, int k) {
  CMatrix m = CMatrix::Identity(k, k);
  for (const auto& g : w) {
    const auto it = embed.find(g.name);
    if (it == embed.end()) throw std::invalid_argument("no embedding for generator " + g.name);
    if (it->second.rows() != k || it->second.cols() != k)
      throw std::invalid_argument("embedded generator " + g.name + " has the wrong dimension");
    if (g.star)
      m = m * it->second.adjoint();
    else
      m = m * it->second;
  }
  return m;
}

CMatrix evaluate_monomial(const Monomial& m, const MatrixTuple& x, const Embedding& embed, int k) {
  CMatrix out = coefficient_matrix(m.slots[0], embed, k);
  for (std::size_t p = 0; p < m.letters.size(); ++p) {
    out = out * x[static_cast<std::size_t>(m.letters[p])].matrix();
    if (!m.slots[p + 1].empty()) out = out * coefficient_matrix(m.slots[p + 1], embed, k);
  }
  return out;
}

}  // namespace

CMatrix evaluate(const NcPoly& f, const MatrixTuple& x, const Embedding& embed) {
  check_tuple(f.arity(), x);
  const int k = x.dim();
  CMatrix out = CMatrix::Zero(k, k);
  for (const auto& [m, c] : f.terms()) out += c * evaluate_monomial(m, x, embed, k);
  return out;
}

CMatrix evaluate(const NcPoly& f, const MatrixTuple& x) {
  return evaluate(f, x, block_embedding(*f.algebra(), x.dim()));
}

Hermitian evaluate_hermitian(const NcPoly& f, const MatrixTuple& x, const Embedding& embed) {
  const CMatrix m = evaluate(f, x, embed);
  const double scale = m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
  if (m.size() > 0 && (m - m.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, scale))
    throw std::invalid_argument("evaluate_hermitian: value is not self-adjoint");
  return Hermitian(m, 1.0);
}

Hermitian evaluate_hermitian(const NcPoly& f, const MatrixTuple& x) {
  return evaluate_hermitian(f, x, block_embedding(*f.algebra(), x.dim()));
}

CMatrix BiOperator::apply(const CMatrix& z) const {
  CMatrix out = CMatrix::Zero(dim, dim);
  for (const auto& [a, b] : legs) out.noalias() += a * z * b;
  return out;
}

BiOperator evaluate(const NcBiPoly& d, const MatrixTuple& x, const Embedding& embed) {
  check_tuple(d.arity(), x);
  BiOperator op;
  op.dim = x.dim();
  for (const auto& [key, c] : d.terms())
    op.legs.emplace_back(c * evaluate_monomial(key.first, x, embed, op.dim),
                         evaluate_monomial(key.second, x, embed, op.dim));
  return op;
}

BiOperator evaluate(const NcBiPoly& d, const MatrixTuple& x) {
  return evaluate(d, x, block_embedding(*d.algebra(), x.dim()));
}

// -- Jacobians -----------------------------------------------------------------

EvaluatedJacobian::EvaluatedJacobian(int n, int k, std::vector<std::vector<BiOperator>> entries)
    : n_(n), k_(k), entries_(std::move(entries)) {
  if (entries_.size() != static_cast<std::size_t>(n)) throw std::invalid_argument("Jacobian grid is incomplete");
  for (const auto& row : entries_)
    if (row.size() != static_cast<std::size_t>(n)) throw std::invalid_argument("Jacobian grid is incomplete");
}

const BiOperator& EvaluatedJacobian::entry(int i, int j) const {
  return entries_.at(static_cast<std::size_t>(i)).at(static_cast<std::size_t>(j));
}

std::vector<CMatrix> EvaluatedJacobian::apply(const std::vector<CMatrix>& h) const {
  if (h.size() != static_cast<std::size_t>(n_)) throw std::invalid_argument("direction has the wrong arity");
  std::vector<CMatrix> out(static_cast<std::size_t>(n_), CMatrix::Zero(k_, k_));
  for (int j = 0; j < n_; ++j)
    for (int i = 0; i < n_; ++i) out[static_cast<std::size_t>(j)] += entry(i, j).apply(h[static_cast<std::size_t>(i)]);
  return out;
}

Eigen::MatrixXd EvaluatedJacobian::real_matrix() const {
  const int block = k_ * k_;
  const int size = n_ * block;
  Eigen::MatrixXd r(size, size);
  std::vector<double> unit(static_cast<std::size_t>(block), 0.0);
  for (int i = 0; i < n_; ++i) {
    for (int c = 0; c < block; ++c) {
      unit[static_cast<std::size_t>(c)] = 1.0;
      const CMatrix h = Hermitian::from_coordinates(k_, unit).matrix();
      unit[static_cast<std::size_t>(c)] = 0.0;
      for (int j = 0; j < n_; ++j) {
        const CMatrix out = entry(i, j).apply(h);
        r.block(j * block, i * block + c, block, 1) = Hermitian(out, 1e-9).coordinates();
      }
    }
  }
  return r;
}

EvaluatedJacobian jacobian(const std::vector<NcPoly>& f, const MatrixTuple& x, const Embedding& embed) {
  const int n = static_cast<int>(f.size());
  for (const auto& fj : f) check_arity(fj.arity(), n);
  check_tuple(n, x);
  std::vector<std::vector<BiOperator>> entries(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      entries[static_cast<std::size_t>(i)].push_back(evaluate(dquotient(f[static_cast<std::size_t>(j)], i), x, embed));
  return EvaluatedJacobian(n, x.dim(), std::move(entries));
}

EvaluatedJacobian jacobian(const std::vector<NcPoly>& f, const MatrixTuple& x) {
  AlgebraPtr algebra = CoefficientAlgebra::scalars();
  for (const auto& fj : f) algebra = common_algebra(algebra, fj.algebra());
  return jacobian(f, x, block_embedding(*algebra, x.dim()));
}

double logabs_functional(const EvaluatedJacobian& j) {
  const Eigen::MatrixXd r = j.real_matrix();
  if (r.size() == 0) return 0.0;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(r);
  double sum = 0.0;
  for (const double s : svd.singularValues()) {
    if (s < 1e-12) return -std::numeric_limits<double>::infinity();
    sum += std::log(s);
  }
  const double k = j.dim();
  return sum / (k * k);
}

// -- majorants and formal inverses --------------------------------------------

namespace {

double majorant_term(const Monomial& m, Complex c, const CoefficientAlgebra& algebra, const std::vector<double>& radii) {
  double v = std::abs(c);
  for (const auto& slot : m.slots)
    for (const auto& g : slot) v *= algebra.norm(g.name);
  for (const int letter : m.letters) v *= radii[static_cast<std::size_t>(letter)];
  return v;
}

using Graded = std::vector<std::vector<NcPoly>>;  // [eps power][index]

std::vector<NcPoly> graded_product(const std::vector<NcPoly>& a, const std::vector<NcPoly>& b, int max_grade) {
  std::vector<NcPoly> out(static_cast<std::size_t>(max_grade) + 1, NcPoly(a.front().arity(), a.front().algebra()));
  for (int p = 0; p <= max_grade; ++p) {
    if (a[static_cast<std::size_t>(p)].is_zero()) continue;
    for (int q = 0; p + q <= max_grade; ++q) {
      if (b[static_cast<std::size_t>(q)].is_zero()) continue;
      out[static_cast<std::size_t>(p + q)] += a[static_cast<std::size_t>(p)] * b[static_cast<std::size_t>(q)];
    }
  }
  return out;
}

std::vector<NcPoly> graded_compose(const NcPoly& f, const Graded& g, int index_count, int max_grade) {
  const int n = index_count;
  const AlgebraPtr& algebra = f.algebra();
  const NcPoly zero(n, algebra);
  std::vector<NcPoly> out(static_cast<std::size_t>(max_grade) + 1, zero);
  for (const auto& [m, c] : f.terms()) {
    std::vector<NcPoly> acc(static_cast<std::size_t>(max_grade) + 1, zero);
    acc[0] = NcPoly::monomial(n, c, Monomial{{m.slots[0]}, {}}, algebra);
    for (std::size_t p = 0; p < m.letters.size(); ++p) {
      std::vector<NcPoly> factor(static_cast<std::size_t>(max_grade) + 1, zero);
      for (int q = 0; q <= max_grade; ++q)
        factor[static_cast<std::size_t>(q)] = g[static_cast<std::size_t>(q)][static_cast<std::size_t>(m.letters[p])];
      acc = graded_product(acc, factor, max_grade);
      if (!m.slots[p + 1].empty()) {
        const NcPoly s = NcPoly::monomial(n, 1.0, Monomial{{m.slots[p + 1]}, {}}, algebra);
        for (auto& a : acc) a = a * s;
      }
    }
    for (int q = 0; q <= max_grade; ++q) out[static_cast<std::size_t>(q)] += acc[static_cast<std::size_t>(q)];
  }
  return out;
}

}  // namespace

double majorant_value(const NcPoly& f, const std::vector<double>& radii) {
  if (radii.size() != static_cast<std::size_t>(f.arity())) throw std::invalid_argument("need one radius per indeterminate");
  for (const double r : radii)
    if (!(r > 0.0)) throw std::invalid_argument("radii must be positive");
  double v = 0.0;
  for (const auto& [m, c] : f.terms()) v += majorant_term(m, c, *f.algebra(), radii);
  return v;
}

bool majorant_radius(const NcPoly& f, const std::vector<double>& radii, bool truncated_series) {
  majorant_value(f, radii);
  if (!truncated_series) return true;
  const int top = f.degree();
  if (top == 0) return true;
  double mass = 0.0;
  for (const auto& [m, c] : f.terms())
    if (m.degree() == top) mass += majorant_term(m, c, *f.algebra(), radii);
  return std::pow(mass, 1.0 / top) < 1.0;
}

std::vector<NcPoly> perturbation_inverse(const std::vector<NcPoly>& p, double eps, int order, double radius) {
  const int n = static_cast<int>(p.size());
  if (order < 0) throw std::invalid_argument("order must be non-negative");
  AlgebraPtr algebra = CoefficientAlgebra::scalars();
  for (const auto& pi : p) {
    check_arity(pi.arity(), n);
    algebra = common_algebra(algebra, pi.algebra());
  }

  double g = radius;
  bool converged = false;
  for (int iter = 0; iter < 100000; ++iter) {
    double top = 0.0;
    for (const auto& pi : p) top = std::max(top, majorant_value(pi, std::vector<double>(static_cast<std::size_t>(n), g)));
    const double next = radius + std::abs(eps) * top;
    if (!std::isfinite(next) || next > 1e12) break;
    if (std::abs(next - g) <= 1e-13 * (1.0 + next)) {
      converged = true;
      break;
    }
    g = next;
  }
  if (!converged) throw MajorantDivergence("perturbation_inverse: majorant of the inverse diverges at this eps");

  const NcPoly zero(n, algebra);
  Graded grades(static_cast<std::size_t>(order) + 1, std::vector<NcPoly>(static_cast<std::size_t>(n), zero));
  for (int i = 0; i < n; ++i) grades[0][static_cast<std::size_t>(i)] = NcPoly::variable(n, i, algebra);
  for (int round = 0; round < order; ++round) {
    Graded next(static_cast<std::size_t>(order) + 1, std::vector<NcPoly>(static_cast<std::size_t>(n), zero));
    next[0] = grades[0];
    for (int i = 0; i < n; ++i) {
      const auto q = graded_compose(p[static_cast<std::size_t>(i)], grades, n, order - 1);
      for (int j = 0; j < order; ++j)
        next[static_cast<std::size_t>(j) + 1][static_cast<std::size_t>(i)] = Complex(-1.0) * q[static_cast<std::size_t>(j)];
    }
    grades = std::move(next);
  }
  std::vector<NcPoly> out(static_cast<std::size_t>(n), zero);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= order; ++j)
      out[static_cast<std::size_t>(i)] += Complex(std::pow(eps, j)) * grades[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
  return out;
}

}  // namespace freeent
