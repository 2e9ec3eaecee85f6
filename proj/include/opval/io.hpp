#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>

#include <json.hpp>

#include "opval/eta_map.hpp"
#include "opval/rmt.hpp"
#include "opval/solver.hpp"
#include "opval/sweep.hpp"

namespace opval {

// Malformed user configuration (CLI exit code 64).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed input data files (CLI exit code 65).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Accepts "a+bi", "a-bi", "bi", "a", "i", "-i" with optional signs and
// scientific notation; "j" is accepted in place of "i".
Complex parse_complex(std::string_view text);

// Complex matrices are encoded row-major as [[ [re, im], ... ], ... ].
nlohmann::json matrix_to_json(const CMat& m);
CMat matrix_from_json(const nlohmann::json& j, std::size_t expected_dim = 0);

// {"kind": "kraus" | "linear_tensor" | "toeplitz3", "dim": d, "data": [...]}
// Linear tensors are screened for positivity preservation and rejected with
// ConfigError when they fail.
EtaMap eta_from_json(const nlohmann::json& j);
nlohmann::json eta_to_json(const EtaMap& eta);

nlohmann::json certificate_to_json(const PositivityCertificate& c);
nlohmann::json solve_result_to_json(const SolveResult& r, Complex z, const CMat& g);

inline constexpr std::string_view kCurveHeader = "t,density,re_H,im_H,iterations,residual,positivity_ok";
inline constexpr std::string_view kHistogramHeader = "bin_left,bin_right,height";

void write_curve_csv(const DensityCurve& curve, std::ostream& out);
DensityCurve read_curve_csv(std::istream& in);

void write_histogram_csv(const Histogram& h, std::ostream& out);
Histogram read_histogram_csv(std::istream& in);

}  // namespace opval
