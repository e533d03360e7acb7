#include "balmet/io.hpp"

#include <charconv>
#include <ostream>

namespace balmet {

namespace {

using nlohmann::json;

json complex_array(const Matrix& m, bool column_major) {
  json arr = json::array();
  const int rows = static_cast<int>(m.rows());
  const int cols = static_cast<int>(m.cols());
  if (column_major) {
    for (int a = 0; a < cols; ++a) {
      for (int i = 0; i < rows; ++i) {
        arr.push_back(json::array({m(i, a).real(), m(i, a).imag()}));
      }
    }
  } else {
    for (int i = 0; i < rows; ++i) {
      for (int a = 0; a < cols; ++a) {
        arr.push_back(json::array({m(i, a).real(), m(i, a).imag()}));
      }
    }
  }
  return arr;
}

Matrix complex_array_to_matrix(const json& arr, int rows, int cols, bool column_major,
                               const char* who) {
  if (!arr.is_array() || arr.size() != static_cast<size_t>(rows) * cols) {
    throw validation_error(std::string(who) + ": evals length does not match N*M");
  }
  Matrix m(rows, cols);
  size_t idx = 0;
  const auto read_entry = [&](size_t at) {
    const json& e = arr[at];
    if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number()) {
      throw validation_error(std::string(who) + ": entries must be [re, im] pairs");
    }
    return Complex(e[0].get<double>(), e[1].get<double>());
  };
  if (column_major) {
    for (int a = 0; a < cols; ++a) {
      for (int i = 0; i < rows; ++i) {
        m(i, a) = read_entry(idx++);
      }
    }
  } else {
    for (int i = 0; i < rows; ++i) {
      for (int a = 0; a < cols; ++a) {
        m(i, a) = read_entry(idx++);
      }
    }
  }
  return m;
}

RealVector real_vector_from_json(const json& arr, const char* who) {
  if (!arr.is_array()) {
    throw validation_error(std::string(who) + ": expected an array of numbers");
  }
  RealVector v(arr.size());
  for (size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number()) {
      throw validation_error(std::string(who) + ": expected an array of numbers");
    }
    v[static_cast<int>(i)] = arr[i].get<double>();
  }
  return v;
}

json real_vector_to_json(const RealVector& v) {
  json arr = json::array();
  for (int i = 0; i < v.size(); ++i) {
    arr.push_back(v[i]);
  }
  return arr;
}

const json& require_field(const json& doc, const char* field, const char* who) {
  const auto it = doc.find(field);
  if (it == doc.end()) {
    throw validation_error(std::string(who) + ": missing field '" + field + "'");
  }
  return *it;
}

json sample_body(const PolarizedSample& s) {
  json doc;
  doc["label"] = s.label;
  doc["N"] = s.sections();
  doc["M"] = s.points();
  doc["k"] = s.level;
  doc["n"] = s.dim;
  doc["weights"] = real_vector_to_json(s.weights);
  doc["evals"] = complex_array(s.evals, /*column_major=*/true);
  if (s.allow_degenerate) {
    doc["degenerate"] = true;
  }
  return doc;
}

Rational rational_from_json(const json& v, const char* who) {
  if (v.is_number_integer()) {
    return Rational(v.get<long long>());
  }
  if (v.is_string()) {
    return Rational::parse(v.get<std::string>());
  }
  throw validation_error(std::string(who) + ": rational entries must be integers or 'p/q' strings");
}

}  // namespace

const PolarizedSample& plain_part(const AnySample& s) {
  if (const auto* p = std::get_if<PolarizedSample>(&s)) {
    return *p;
  }
  return std::get<AnticanonicalSample>(s).sample;
}

json sample_to_json(const PolarizedSample& s) { return sample_body(s); }

json sample_to_json(const AnticanonicalSample& s) {
  json doc = sample_body(s.sample);
  doc["base"] = real_vector_to_json(s.base);
  return doc;
}

AnySample sample_from_json(const json& doc) {
  const char* who = "sample_from_json";
  const int n = require_field(doc, "N", who).get<int>();
  const int m = require_field(doc, "M", who).get<int>();
  const int k = require_field(doc, "k", who).get<int>();
  const int dim = require_field(doc, "n", who).get<int>();
  const std::string label = doc.value("label", std::string{});
  RealVector weights = real_vector_from_json(require_field(doc, "weights", who), who);
  if (weights.size() != m) {
    throw validation_error("sample_from_json: weights length does not match M");
  }
  Matrix evals = complex_array_to_matrix(require_field(doc, "evals", who), n, m,
                                         /*column_major=*/true, who);
  const bool degenerate = doc.value("degenerate", false);
  PolarizedSample plain(std::move(evals), std::move(weights), k, dim, label, degenerate);
  if (!doc.contains("base")) {
    return plain;
  }
  RealVector base = real_vector_from_json(doc["base"], who);
  return AnticanonicalSample(std::move(plain), std::move(base));
}

json direction_to_json(const TangentDirection& a) {
  json doc;
  doc["N"] = a.dim();
  doc["entries"] = complex_array(a.entries, /*column_major=*/false);
  return doc;
}

TangentDirection direction_from_json(const json& doc) {
  const char* who = "direction_from_json";
  const int n = require_field(doc, "N", who).get<int>();
  Matrix m = complex_array_to_matrix(require_field(doc, "entries", who), n, n,
                                     /*column_major=*/false, who);
  return TangentDirection(std::move(m));
}

json form_to_json(const HermitianForm& h) {
  json doc;
  doc["N"] = h.dim();
  doc["entries"] = complex_array(h.entries, /*column_major=*/false);
  return doc;
}

HermitianForm form_from_json(const json& doc) {
  const char* who = "form_from_json";
  const int n = require_field(doc, "N", who).get<int>();
  Matrix m = complex_array_to_matrix(require_field(doc, "entries", who), n, n,
                                     /*column_major=*/false, who);
  return HermitianForm(std::move(m));
}

json profile_to_json(const MetricProfile& p) {
  json doc;
  doc["perturbation"] = p.perturbation;
  return doc;
}

MetricProfile profile_from_json(const json& doc) {
  const json& arr = require_field(doc, "perturbation", "profile_from_json");
  if (!arr.is_array()) {
    throw validation_error("profile_from_json: perturbation must be an array of coefficients");
  }
  std::vector<double> coeffs;
  for (const auto& v : arr) {
    if (!v.is_number()) {
      throw validation_error("profile_from_json: perturbation coefficients must be numbers");
    }
    coeffs.push_back(v.get<double>());
  }
  return MetricProfile(std::move(coeffs));
}

json toric_to_json(const ToricConfigData& cfg) {
  json doc;
  json lengths = json::array();
  for (const Rational& l : cfg.lengths) {
    lengths.push_back(l.str());
  }
  doc["lengths"] = lengths;
  json pieces = json::array();
  for (const AffinePiece& p : cfg.pieces) {
    json row = json::array();
    for (const Rational& s : p.slope) {
      row.push_back(s.str());
    }
    row.push_back(p.intercept.str());
    pieces.push_back(row);
  }
  doc["pieces"] = pieces;
  doc["sign"] = cfg.weight_sign;
  return doc;
}

ToricConfigData toric_from_json(const json& doc) {
  const char* who = "toric_from_json";
  const json& lengths_json = require_field(doc, "lengths", who);
  if (!lengths_json.is_array() || lengths_json.empty()) {
    throw validation_error("toric_from_json: lengths must be a nonempty array");
  }
  std::vector<Rational> lengths;
  for (const auto& v : lengths_json) {
    lengths.push_back(rational_from_json(v, who));
  }
  const json& pieces_json = require_field(doc, "pieces", who);
  if (!pieces_json.is_array() || pieces_json.empty()) {
    throw validation_error("toric_from_json: pieces must be a nonempty array");
  }
  std::vector<AffinePiece> pieces;
  for (const auto& row : pieces_json) {
    if (!row.is_array() || row.size() != lengths.size() + 1) {
      throw validation_error("toric_from_json: each piece must list the slopes then the intercept");
    }
    AffinePiece piece;
    for (size_t j = 0; j + 1 < row.size(); ++j) {
      piece.slope.push_back(rational_from_json(row[j], who));
    }
    piece.intercept = rational_from_json(row.back(), who);
    pieces.push_back(std::move(piece));
  }
  const int sign = require_field(doc, "sign", who).get<int>();
  return ToricConfigData(std::move(lengths), std::move(pieces), sign);
}

void write_weight_csv(std::ostream& out, const WeightTable& table,
                      const std::vector<Rational>& chow) {
  out << "m,N_m,w_m,Chow_m\n";
  for (int m = 1; m <= table.m_max(); ++m) {
    out << m << "," << table.dim_at(m) << "," << table.weight_at(m).str() << ","
        << chow[static_cast<size_t>(m) - 1].str() << "\n";
  }
}

void write_curvature_csv(std::ostream& out, const CurvatureGrid& grid) {
  out << "tau,S\n";
  for (size_t i = 0; i < grid.nodes.size(); ++i) {
    out << format_double(grid.nodes[i]) << "," << format_double(grid.values[i]) << "\n";
  }
}

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t hash = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
  return std::string(buf);
}

}  // namespace balmet
