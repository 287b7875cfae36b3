#include "freeent/spectra_io.hpp"

#include <charconv>
#include <stdexcept>
#include <vector>

namespace freeent {

namespace {

double number(const nlohmann::json& doc, const char* key) {
  if (!doc.contains(key) || !doc.at(key).is_number())
    throw std::invalid_argument(std::string("measure document needs a numeric \"") + key + "\"");
  return doc.at(key).get<double>();
}

std::vector<double> parse_numbers(const std::string& text) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = std::min(text.find(',', start), text.size());
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data() + start, text.data() + end, v);
    if (ec != std::errc() || ptr != text.data() + end) throw std::invalid_argument("bad number in map specification: " + text);
    out.push_back(v);
    start = end + 1;
  }
  return out;
}

}  // namespace

SpectralMeasure measure_from_json(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("kind") || !doc.at("kind").is_string())
    throw std::invalid_argument("measure document needs a string \"kind\"");
  const std::string kind = doc.at("kind").get<std::string>();
  if (kind == "semicircle") return Semicircle{number(doc, "variance"), doc.contains("mean") ? number(doc, "mean") : 0.0};
  if (kind == "uniform") return Uniform{number(doc, "lo"), number(doc, "hi")};
  if (kind == "arcsine") return Arcsine{number(doc, "lo"), number(doc, "hi")};
  if (kind == "atomic") {
    if (!doc.contains("atoms") || !doc.at("atoms").is_array()) throw std::invalid_argument("atomic measure needs \"atoms\"");
    Atomic a;
    for (const auto& atom : doc.at("atoms")) {
      if (!atom.is_array() || atom.size() != 2 || !atom[0].is_number() || !atom[1].is_number())
        throw std::invalid_argument("each atom is [location, weight]");
      a.atoms.emplace_back(atom[0].get<double>(), atom[1].get<double>());
    }
    return a;
  }
  if (kind == "gridded") {
    if (!doc.contains("values") || !doc.at("values").is_array()) throw std::invalid_argument("gridded measure needs \"values\"");
    GriddedDensity g{number(doc, "lo"), number(doc, "hi"), {}};
    for (const auto& v : doc.at("values")) {
      if (!v.is_number()) throw std::invalid_argument("density values must be numbers");
      g.values.push_back(v.get<double>());
    }
    return g;
  }
  throw std::invalid_argument("unknown measure kind: " + kind);
}

nlohmann::json measure_to_json(const SpectralMeasure& mu) {
  nlohmann::json doc;
  doc["kind"] = mu.kind_name();
  std::visit(
      [&doc](const auto& k) {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, Atomic>) {
          doc["atoms"] = nlohmann::json::array();
          for (const auto& [x, w] : k.atoms) doc["atoms"].push_back({x, w});
        } else if constexpr (std::is_same_v<T, GriddedDensity>) {
          doc["lo"] = k.lo;
          doc["hi"] = k.hi;
          doc["values"] = k.values;
        } else if constexpr (std::is_same_v<T, Semicircle>) {
          doc["variance"] = k.variance;
          doc["mean"] = k.mean;
        } else {
          doc["lo"] = k.lo;
          doc["hi"] = k.hi;
        }
      },
      mu.kind());
  return doc;
}

ScalarField map_from_string(const std::string& spec, double lo, double hi) {
  const std::size_t colon = spec.find(':');
  const std::string name = spec.substr(0, colon);
  const std::vector<double> args = colon == std::string::npos ? std::vector<double>{} : parse_numbers(spec.substr(colon + 1));
  if (name == "identity" && args.empty()) return ScalarField::identity(lo, hi);
  if (name == "affine" && args.size() == 2) return ScalarField::affine(args[0], args[1], lo, hi);
  if (name == "poly" && !args.empty()) return ScalarField::polynomial(args, lo, hi);
  if (name == "arctan" && args.size() == 1) return ScalarField::arctan(args[0], lo, hi);
  throw std::invalid_argument("unknown map specification: " + spec);
}

}  // namespace freeent
