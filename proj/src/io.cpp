#include "opval/io.hpp"

#include <cmath>
#include <cstdlib>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

namespace opval {

using nlohmann::json;

namespace {

double parse_double(std::string_view text, std::string_view what) {
  const std::string s(text);
  if (s.empty()) throw ConfigError(std::string(what) + ": empty number");
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) {
    throw ConfigError(std::string(what) + ": cannot parse '" + s + "' as a number");
  }
  return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string chomp(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == '\n' || s.back() == ' ')) s.pop_back();
  return s;
}

double csv_double(const std::string& cell, std::size_t line_no) {
  char* end = nullptr;
  const double v = std::strtod(cell.c_str(), &end);
  if (cell.empty() || end != cell.c_str() + cell.size()) {
    throw DataError("line " + std::to_string(line_no) + ": bad number '" + cell + "'");
  }
  return v;
}

Complex entry_from_json(const json& e) {
  if (e.is_number()) return {e.get<double>(), 0.0};
  if (e.is_array() && e.size() == 2 && e[0].is_number() && e[1].is_number()) {
    return {e[0].get<double>(), e[1].get<double>()};
  }
  throw ConfigError("matrix entry must be [re, im], got " + e.dump());
}

}  // namespace

Complex parse_complex(std::string_view text) {
  std::string s;
  for (char c : text)
    if (c != ' ') s.push_back(c);
  if (s.empty()) throw ConfigError("complex number: empty input");
  const char last = s.back();
  if (last != 'i' && last != 'j') return {parse_double(s, "complex number"), 0.0};

  s.pop_back();
  std::size_t split = std::string::npos;
  for (std::size_t k = s.size(); k-- > 1;) {
    if ((s[k] == '+' || s[k] == '-') && s[k - 1] != 'e' && s[k - 1] != 'E') {
      split = k;
      break;
    }
  }
  const std::string re_text = split == std::string::npos ? "" : s.substr(0, split);
  std::string im_text = split == std::string::npos ? s : s.substr(split);
  if (im_text.empty() || im_text == "+") im_text = "1";
  if (im_text == "-") im_text = "-1";
  const double re = re_text.empty() ? 0.0 : parse_double(re_text, "complex number");
  return {re, parse_double(im_text, "complex number")};
}

json matrix_to_json(const CMat& m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.dim(); ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < m.dim(); ++j) row.push_back({m(i, j).real(), m(i, j).imag()});
    rows.push_back(std::move(row));
  }
  return rows;
}

CMat matrix_from_json(const json& j, std::size_t expected_dim) {
  if (!j.is_array() || j.empty()) throw ConfigError("matrix must be a non-empty array of rows");
  const std::size_t d = j.size();
  if (expected_dim != 0 && d != expected_dim) {
    throw ConfigError("matrix has " + std::to_string(d) + " rows, expected " +
                      std::to_string(expected_dim));
  }
  CMat m(d);
  for (std::size_t i = 0; i < d; ++i) {
    if (!j[i].is_array() || j[i].size() != d) throw ConfigError("matrix must be square");
    for (std::size_t k = 0; k < d; ++k) m(i, k) = entry_from_json(j[i][k]);
  }
  return m;
}

EtaMap eta_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("eta: expected an object");
  for (const auto& [key, value] : j.items()) {
    if (key != "kind" && key != "dim" && key != "data") throw ConfigError("eta: unknown key '" + key + "'");
  }
  if (!j.contains("kind") || !j["kind"].is_string()) throw ConfigError("eta: missing string 'kind'");
  const std::string kind = j["kind"].get<std::string>();
  std::size_t dim = 0;
  if (j.contains("dim")) {
    if (!j["dim"].is_number_unsigned() || j["dim"].get<std::size_t>() == 0) {
      throw ConfigError("eta: 'dim' must be a positive integer");
    }
    dim = j["dim"].get<std::size_t>();
  }

  if (kind == "toeplitz3") {
    if (dim != 0 && dim != 3) throw ConfigError("eta: toeplitz3 has dim 3");
    return EtaMap::toeplitz3();
  }
  if (dim == 0) throw ConfigError("eta: 'dim' is required for kind '" + kind + "'");
  if (!j.contains("data")) throw ConfigError("eta: 'data' is required for kind '" + kind + "'");
  const json& data = j["data"];

  if (kind == "kraus") {
    if (!data.is_array()) throw ConfigError("eta: kraus data must be a list of matrices");
    std::vector<CMat> ops;
    for (const auto& m : data) ops.push_back(matrix_from_json(m, dim));
    return EtaMap::kraus(dim, std::move(ops));
  }
  if (kind == "linear_tensor") {
    try {
      return EtaMap::linear_tensor(dim, matrix_from_json(data, dim * dim));
    } catch (const EtaRejected& e) {
      throw ConfigError(e.what());
    }
  }
  throw ConfigError("eta: unknown kind '" + kind + "'");
}

json eta_to_json(const EtaMap& eta) {
  json j{{"kind", std::string(eta.kind())}, {"dim", eta.dim()}};
  if (const auto* k = std::get_if<KrausForm>(&eta.representation())) {
    json ops = json::array();
    for (const auto& a : k->operators) ops.push_back(matrix_to_json(a));
    j["data"] = std::move(ops);
  } else if (const auto* l = std::get_if<LinearTensorForm>(&eta.representation())) {
    j["data"] = matrix_to_json(l->tensor);
  } else if (std::holds_alternative<CallbackForm>(eta.representation())) {
    throw ConfigError("eta: callback maps cannot be serialized");
  }
  return j;
}

json certificate_to_json(const PositivityCertificate& c) {
  return json{{"norm_bound", c.norm_bound},
              {"m", c.m},
              {"re_lower_bound", c.re_lower_bound},
              {"measured_norm", c.measured_norm},
              {"measured_lambda_min_re", c.measured_lambda_min_re},
              {"norm_holds", c.norm_holds},
              {"re_holds", c.re_holds},
              {"holds", c.holds()}};
}

json solve_result_to_json(const SolveResult& r, Complex z, const CMat& g) {
  return json{{"z", {z.real(), z.imag()}},
              {"method", std::string(to_string(r.method_used))},
              {"status", std::string(to_string(r.status))},
              {"converged", r.converged},
              {"wrong_root", r.wrong_root},
              {"newton_fallback", r.newton_fallback},
              {"oscillation_detected", r.oscillation_detected},
              {"residual", r.residual},
              {"step", r.step},
              {"iterations", r.iterations},
              {"newton_iterations", r.newton_iterations},
              {"W", matrix_to_json(r.w)},
              {"G", matrix_to_json(g)},
              {"certificate", certificate_to_json(r.certificate)}};
}

void write_curve_csv(const DensityCurve& curve, std::ostream& out) {
  out << kCurveHeader << '\n';
  out << std::setprecision(17);
  for (const auto& r : curve.rows) {
    out << r.t << ',' << r.density << ',' << r.h.real() << ',' << r.h.imag() << ',' << r.iterations
        << ',' << r.residual << ',' << (r.positivity_ok ? "true" : "false") << '\n';
  }
}

DensityCurve read_curve_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || chomp(line) != kCurveHeader) {
    throw DataError("curve CSV: expected header '" + std::string(kCurveHeader) + "'");
  }
  DensityCurve curve;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = chomp(line);
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 7) throw DataError("curve CSV line " + std::to_string(line_no) + ": expected 7 fields");
    DensityRow r;
    r.t = csv_double(cells[0], line_no);
    r.density = csv_double(cells[1], line_no);
    r.h = {csv_double(cells[2], line_no), csv_double(cells[3], line_no)};
    r.iterations = static_cast<int>(csv_double(cells[4], line_no));
    r.residual = csv_double(cells[5], line_no);
    if (cells[6] != "true" && cells[6] != "false") {
      throw DataError("curve CSV line " + std::to_string(line_no) + ": positivity_ok must be true/false");
    }
    r.positivity_ok = cells[6] == "true";
    if (!curve.rows.empty() && !(r.t > curve.rows.back().t)) {
      throw DataError("curve CSV line " + std::to_string(line_no) + ": t must be strictly ascending");
    }
    curve.rows.push_back(r);
  }
  return curve;
}

void write_histogram_csv(const Histogram& h, std::ostream& out) {
  out << kHistogramHeader << '\n';
  out << std::setprecision(17);
  for (std::size_t k = 0; k < h.bins(); ++k) {
    out << h.edges[k] << ',' << h.edges[k + 1] << ',' << h.heights[k] << '\n';
  }
}

Histogram read_histogram_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || chomp(line) != kHistogramHeader) {
    throw DataError("histogram CSV: expected header '" + std::string(kHistogramHeader) + "'");
  }
  Histogram h;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = chomp(line);
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 3) throw DataError("histogram CSV line " + std::to_string(line_no) + ": expected 3 fields");
    const double left = csv_double(cells[0], line_no);
    const double right = csv_double(cells[1], line_no);
    const double height = csv_double(cells[2], line_no);
    if (!(right > left) || height < 0.0) {
      throw DataError("histogram CSV line " + std::to_string(line_no) + ": invalid bin");
    }
    if (h.edges.empty()) {
      h.edges.push_back(left);
    } else if (std::abs(h.edges.back() - left) > 1e-12 * std::max(1.0, std::abs(left))) {
      throw DataError("histogram CSV line " + std::to_string(line_no) + ": bins are not contiguous");
    }
    h.edges.push_back(right);
    h.heights.push_back(height);
  }
  if (h.heights.empty()) throw DataError("histogram CSV: no bins");
  h.counts.assign(h.heights.size(), 0);
  return h;
}

}  // namespace opval
