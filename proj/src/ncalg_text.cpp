#include <algorithm>
#include <cctype>
#include <charconv>

#include "freeent/ncalg.hpp"

namespace freeent {

namespace {

enum class Tok { Number, Imag, Variable, Generator, Plus, Minus, LParen, RParen, Caret, End };

struct Token {
  Token(Tok k, std::size_t p, double v = 0.0, int i = 0) : kind(k), pos(p), value(v), index(i) {}

  Tok kind;
  std::size_t pos;
  double value;
  int index;
  std::string name;
  bool star = false;
};

std::vector<Token> tokenize(const std::string& s) {
  std::vector<Token> out;
  std::size_t i = 0;
  auto fail = [&](std::size_t at, const std::string& what) {
    throw ParseError("parse error at column " + std::to_string(at + 1) + ": " + what);
  };
  while (i < s.size()) {
    const char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(s.data() + i, s.data() + s.size(), v);
      if (ec != std::errc()) fail(i, "bad number");
      i = static_cast<std::size_t>(ptr - s.data());
      if (i < s.size() && s[i] == 'i' && (i + 1 >= s.size() || !std::isalnum(static_cast<unsigned char>(s[i + 1])))) {
        ++i;
        out.push_back({Tok::Imag, start, v});
      } else {
        out.push_back({Tok::Number, start, v});
      }
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      while (i < s.size() && (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '_')) ++i;
      std::string word = s.substr(start, i - start);
      const bool is_var = word.size() > 1 && word[0] == 't' &&
                          word.find_first_not_of("0123456789", 1) == std::string::npos;
      if (is_var) {
        const int index = std::stoi(word.substr(1));
        if (index < 1) fail(start, "indeterminates are numbered from t1");
        out.push_back({Tok::Variable, start, 0.0, index - 1});
      } else if (word == "i") {
        out.push_back({Tok::Imag, start, 1.0});
      } else {
        Token t{Tok::Generator, start};
        t.name = std::move(word);
        if (i < s.size() && s[i] == '*') {
          t.star = true;
          ++i;
        }
        out.push_back(std::move(t));
      }
      continue;
    }
    switch (c) {
      case '+': out.push_back({Tok::Plus, start}); break;
      case '-': out.push_back({Tok::Minus, start}); break;
      case '(': out.push_back({Tok::LParen, start}); break;
      case ')': out.push_back({Tok::RParen, start}); break;
      case '^': out.push_back({Tok::Caret, start}); break;
      default: fail(start, std::string("unexpected character '") + c + "'");
    }
    ++i;
  }
  out.push_back({Tok::End, s.size()});
  return out;
}

class Parser {
 public:
  Parser(std::vector<Token> tokens, int n, AlgebraPtr algebra)
      : tokens_(std::move(tokens)), n_(n), algebra_(std::move(algebra)) {}

  NcPoly parse() {
    NcPoly p = poly();
    if (peek().kind != Tok::End) fail("unexpected trailing input");
    return p;
  }

 private:
  const Token& peek() const { return tokens_[pos_]; }
  const Token& next() { return tokens_[pos_++]; }
  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError("parse error at column " + std::to_string(peek().pos + 1) + ": " + what);
  }

  bool starts_atom() const {
    const Tok k = peek().kind;
    return k == Tok::Number || k == Tok::Imag || k == Tok::Variable || k == Tok::Generator || k == Tok::LParen;
  }

  NcPoly poly() {
    NcPoly out(n_, algebra_);
    bool negate = false;
    if (peek().kind == Tok::Plus || peek().kind == Tok::Minus) negate = next().kind == Tok::Minus;
    for (;;) {
      NcPoly t = term();
      if (negate)
        out -= t;
      else
        out += t;
      if (peek().kind != Tok::Plus && peek().kind != Tok::Minus) break;
      negate = next().kind == Tok::Minus;
    }
    return out;
  }

  NcPoly term() {
    if (!starts_atom()) fail("expected a term");
    NcPoly out = factor();
    while (starts_atom()) out = out * factor();
    return out;
  }

  NcPoly factor() {
    NcPoly base = atom();
    if (peek().kind != Tok::Caret) return base;
    next();
    const Token& e = next();
    if (e.kind != Tok::Number || e.value != static_cast<int>(e.value) || e.value < 0) fail("exponent must be a non-negative integer");
    NcPoly out = NcPoly::constant(n_, 1.0, algebra_);
    for (int r = 0; r < static_cast<int>(e.value); ++r) out = out * base;
    return out;
  }

  NcPoly atom() {
    const Token& t = next();
    switch (t.kind) {
      case Tok::Number: return NcPoly::constant(n_, t.value, algebra_);
      case Tok::Imag: return NcPoly::constant(n_, Complex(0.0, t.value), algebra_);
      case Tok::Variable: return NcPoly::variable(n_, t.index, algebra_);
      case Tok::Generator:
        if (!algebra_->contains(t.name)) {
          --pos_;
          fail("unknown generator " + t.name);
        }
        return NcPoly::generator(n_, t.name, algebra_, t.star);
      case Tok::LParen: {
        NcPoly inner = poly();
        if (next().kind != Tok::RParen) {
          --pos_;
          fail("expected ')'");
        }
        return inner;
      }
      default: --pos_; fail("expected a term");
    }
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  int n_;
  AlgebraPtr algebra_;
};

std::string format_number(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string coef_word(const CoefWord& w) {
  std::string s;
  for (const auto& g : w) {
    if (!s.empty()) s += ' ';
    s += g.name;
    if (g.star) s += '*';
  }
  return s;
}

// Appends one term to `out`; `body` is the printed monomial part, "1" for the unit.
void append_term(std::string& out, Complex c, const std::string& body) {
  const bool first = out.empty();
  std::string coef;
  bool negative = false;
  if (c.imag() == 0.0) {
    negative = c.real() < 0.0;
    const double mag = std::abs(c.real());
    if (mag != 1.0) coef = format_number(mag);
  } else if (c.real() == 0.0) {
    negative = c.imag() < 0.0;
    const double mag = std::abs(c.imag());
    coef = (mag == 1.0 ? std::string() : format_number(mag)) + "i";
  } else {
    coef = "(" + format_number(c.real()) + (c.imag() < 0 ? "-" : "+") + format_number(std::abs(c.imag())) + "i)";
  }
  if (first)
    out += negative ? "-" : "";
  else
    out += negative ? " - " : " + ";
  if (coef.empty()) {
    out += body;
  } else if (body == "1") {
    out += coef;
  } else {
    out += coef + " " + body;
  }
}

}  // namespace

NcPoly parse_poly(const std::string& text, int n, AlgebraPtr algebra) {
  std::vector<Token> tokens = tokenize(text);
  int max_index = 0;
  std::vector<std::string> names;
  for (const auto& t : tokens) {
    if (t.kind == Tok::Variable) max_index = std::max(max_index, t.index + 1);
    if (t.kind == Tok::Generator && std::find(names.begin(), names.end(), t.name) == names.end()) names.push_back(t.name);
  }
  if (n == 0) n = max_index;
  if (max_index > n) throw ParseError("indeterminate t" + std::to_string(max_index) + " exceeds n=" + std::to_string(n));
  if (!algebra) algebra = names.empty() ? CoefficientAlgebra::scalars() : CoefficientAlgebra::symbolic(names);
  return Parser(std::move(tokens), n, std::move(algebra)).parse();
}

std::string to_string(const Monomial& m) {
  std::string s;
  auto put = [&](const std::string& piece) {
    if (piece.empty()) return;
    if (!s.empty()) s += ' ';
    s += piece;
  };
  put(coef_word(m.slots[0]));
  for (std::size_t p = 0; p < m.letters.size(); ++p) {
    put("t" + std::to_string(m.letters[p] + 1));
    put(coef_word(m.slots[p + 1]));
  }
  return s.empty() ? "1" : s;
}

std::string to_string(const NcPoly& f) {
  std::string out;
  for (const auto& [m, c] : f.terms()) append_term(out, c, to_string(m));
  return out.empty() ? "0" : out;
}

std::string to_string(const NcBiPoly& d) {
  std::string out;
  for (const auto& [key, c] : d.terms()) append_term(out, c, to_string(key.first) + " (x) " + to_string(key.second));
  return out.empty() ? "0" : out;
}

}  // namespace freeent
