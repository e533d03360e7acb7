#pragma once

// JSON schemas for samples, directions, metric profiles and toric
// configurations, plus the CSV side-table writers. Double fields round-trip
// bit-exactly through the JSON layer.

#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "balmet/quantization.hpp"
#include "balmet/samples.hpp"
#include "balmet/weights.hpp"

namespace balmet {

using AnySample = std::variant<PolarizedSample, AnticanonicalSample>;

const PolarizedSample& plain_part(const AnySample& s);

/// {label, N, M, k, n, weights[], base[]?, evals: [[re, im]...] column-major}
nlohmann::json sample_to_json(const PolarizedSample& s);
nlohmann::json sample_to_json(const AnticanonicalSample& s);

/// Accepts both plain and anticanonical documents; the optional "base" field
/// decides which.
AnySample sample_from_json(const nlohmann::json& doc);

/// {"N": n, "entries": [[re, im]...] row-major}
nlohmann::json direction_to_json(const TangentDirection& a);
TangentDirection direction_from_json(const nlohmann::json& doc);

nlohmann::json form_to_json(const HermitianForm& h);
HermitianForm form_from_json(const nlohmann::json& doc);

/// {"perturbation": [coefficients...]}
nlohmann::json profile_to_json(const MetricProfile& p);
MetricProfile profile_from_json(const nlohmann::json& doc);

/// {lengths[], pieces: [[slope..., intercept]...], sign}; rational entries as
/// "p/q" strings or integers.
nlohmann::json toric_to_json(const ToricConfigData& cfg);
ToricConfigData toric_from_json(const nlohmann::json& doc);

/// CSV (m, N_m, w_m, Chow_m) with exact rational strings.
void write_weight_csv(std::ostream& out, const WeightTable& table,
                      const std::vector<Rational>& chow);

/// CSV (tau, S).
void write_curvature_csv(std::ostream& out, const CurvatureGrid& grid);

/// Shortest representation that parses back to the same double.
std::string format_double(double x);

/// FNV-1a 64-bit digest of a byte string, as fixed-width hex.
std::string fnv1a_hex(const std::string& bytes);

}  // namespace balmet
