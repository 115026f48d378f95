#pragma once

#include <charconv>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <span>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "mvlmn/distributions.hpp"
#include "mvlmn/errors.hpp"
#include "mvlmn/harness.hpp"
#include "mvlmn/kde.hpp"
#include "mvlmn/model.hpp"
#include "mvlmn/stats.hpp"

namespace mvlmn {

inline constexpr std::string_view kVersion = "0.1.0";

using json = nlohmann::json;

/// Shortest form with 17 significant digits, '.' separator; round-trips doubles.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

// ---------------------------------------------------------------- files

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("failed reading " + path.string());
  return ss.str();
}

inline void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.flush();
  if (!out) throw IoError("failed writing " + path.string());
}

inline json parse_json_text(std::string_view text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(what + ": " + e.what());
  }
}

inline json read_json_file(const std::filesystem::path& path) {
  return parse_json_text(read_text_file(path), path.string());
}

// ---------------------------------------------------------------- CSV

/// Numeric CSV without header: one matrix row per line. CRLF tolerated.
inline Eigen::MatrixXd parse_csv_matrix(std::string_view text) {
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) {
      if (eol == text.size()) break;
      continue;
    }
    std::vector<double> row;
    std::size_t field_start = 0;
    for (;;) {
      std::size_t comma = line.find(',', field_start);
      std::string_view field = line.substr(field_start, comma == std::string_view::npos ? line.npos : comma - field_start);
      const auto first = field.find_first_not_of(" \t");
      const auto last = field.find_last_not_of(" \t");
      if (first == std::string_view::npos) {
        throw ParseError("CSV line " + std::to_string(line_no) + ": empty field");
      }
      field = field.substr(first, last - first + 1);
      if (field.front() == '+') field.remove_prefix(1);
      double v = 0.0;
      const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
      if (res.ec != std::errc() || res.ptr != field.data() + field.size() || !std::isfinite(v)) {
        throw ParseError("CSV line " + std::to_string(line_no) + ": cannot parse '" + std::string(field) + "'");
      }
      row.push_back(v);
      if (comma == std::string_view::npos) break;
      field_start = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ParseError("CSV line " + std::to_string(line_no) + ": expected " + std::to_string(rows.front().size()) +
                       " fields, found " + std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
    if (eol == text.size()) break;
  }
  if (rows.empty()) throw ParseError("CSV: no data rows");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return m;
}

inline Eigen::MatrixXd read_csv_matrix(const std::filesystem::path& path) {
  return parse_csv_matrix(read_text_file(path));
}

inline std::string samples_csv(std::span<const double> samples) {
  std::string out = "standardized\n";
  out.reserve(samples.size() * 24 + 16);
  for (double v : samples) {
    out += format_double(v);
    out += '\n';
  }
  return out;
}

inline std::string kde_csv(std::span<const KdePoint> kde, bool with_normal) {
  std::string out = with_normal ? "x,density,normal\n" : "x,density\n";
  for (const auto& pt : kde) {
    out += format_double(pt.x);
    out += ',';
    out += format_double(pt.density);
    if (with_normal) {
      out += ',';
      out += format_double(normal_pdf(pt.x));
    }
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------- model files

namespace detail {

inline Eigen::VectorXd json_vector(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) throw ParseError(what + ": expected a non-empty array of numbers");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ParseError(what + ": entry " + std::to_string(i) + " is not a number");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

inline Eigen::MatrixXd json_matrix(const json& j, const std::string& what) {
  if (j.is_object() && j.contains("diagonal")) {
    return json_vector(j.at("diagonal"), what + ".diagonal").asDiagonal();
  }
  if (!j.is_array() || j.empty()) throw ParseError(what + ": expected an array of rows or {\"diagonal\": [...]}");
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  if (cols == 0) throw ParseError(what + ": rows must be non-empty arrays");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (!j[r].is_array() || j[r].size() != cols) {
      throw ParseError(what + ": row " + std::to_string(r) + " has the wrong length");
    }
    for (std::size_t c = 0; c < cols; ++c) {
      if (!j[r][c].is_number()) throw ParseError(what + ": non-numeric entry");
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = j[r][c].get<double>();
    }
  }
  return m;
}

inline json vector_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline const json& require(const json& j, const char* key, const std::string& what) {
  if (!j.is_object() || !j.contains(key)) throw ParseError(what + ": missing key '" + key + "'");
  return j.at(key);
}

}  // namespace detail

inline NuDistribution nu_from_json(const json& j) {
  const std::string type = detail::require(j, "type", "nu").is_string() ? j.at("type").get<std::string>() : "";
  if (type == "truncated_normal") {
    return TruncatedNormalAbs{detail::json_matrix(detail::require(j, "omega", "nu"), "nu.omega")};
  }
  if (type == "gal") {
    const json& shape = detail::require(j, "shape", "nu");
    if (!shape.is_number()) throw ParseError("nu.shape must be a number");
    return GeneralizedAsymmetricLaplace{detail::json_vector(detail::require(j, "m", "nu"), "nu.m"),
                                        detail::json_matrix(detail::require(j, "sigma", "nu"), "nu.sigma"),
                                        shape.get<double>()};
  }
  if (type == "degenerate") {
    return Degenerate{detail::json_vector(detail::require(j, "value", "nu"), "nu.value")};
  }
  throw ParseError("nu.type must be one of truncated_normal, gal, degenerate");
}

inline json nu_to_json(const NuDistribution& nu) {
  return std::visit(
      [](const auto& law) -> json {
        using T = std::decay_t<decltype(law)>;
        if constexpr (std::is_same_v<T, TruncatedNormalAbs>) {
          return {{"type", "truncated_normal"}, {"omega", detail::matrix_json(law.omega)}};
        } else if constexpr (std::is_same_v<T, GeneralizedAsymmetricLaplace>) {
          return {{"type", "gal"},
                  {"m", detail::vector_json(law.m)},
                  {"sigma", detail::matrix_json(law.sigma)},
                  {"shape", law.shape}};
        } else {
          return {{"type", "degenerate"}, {"value", detail::vector_json(law.value)}};
        }
      },
      nu.law());
}

inline ModelSpec model_from_json(const json& j) {
  Eigen::VectorXd mu = detail::json_vector(detail::require(j, "mu", "model"), "mu");
  Eigen::MatrixXd sigma = detail::json_matrix(detail::require(j, "sigma", "model"), "sigma");
  Eigen::MatrixXd b = detail::json_matrix(detail::require(j, "b", "model"), "b");
  NuDistribution nu = nu_from_json(detail::require(j, "nu", "model"));
  return ModelSpec(std::move(mu), std::move(sigma), std::move(b), std::move(nu));
}

inline json model_to_json(const ModelSpec& m) {
  return {{"mu", detail::vector_json(m.mu())},
          {"sigma", detail::matrix_json(m.sigma())},
          {"b", detail::matrix_json(m.b())},
          {"nu", nu_to_json(m.nu())}};
}

inline ModelSpec load_model(const std::filesystem::path& path) { return model_from_json(read_json_file(path)); }

// ---------------------------------------------------------------- experiment config

inline std::string product_name(ProductKind k) {
  return k == ProductKind::CovTimesMean ? "cov" : "precision";
}

inline ProductKind parse_product(const std::string& s) {
  if (s == "cov") return ProductKind::CovTimesMean;
  if (s == "precision") return ProductKind::PrecisionTimesMean;
  throw InvalidInput("product must be 'cov' or 'precision'");
}

inline json config_to_json(const ExperimentConfig& cfg) {
  json bw = json::array();
  for (double h : cfg.bandwidth_grid) bw.push_back(h);
  return {{"p", cfg.p},
          {"n", cfg.n},
          {"q", cfg.q},
          {"c", cfg.c},
          {"n_reps", cfg.n_reps},
          {"product", product_name(cfg.product)},
          {"nu", nu_to_json(cfg.nu)},
          {"master_seed", cfg.master_seed},
          {"model_seed", cfg.model_seed},
          {"kde_grid", {{"lo", cfg.kde_grid.lo}, {"hi", cfg.kde_grid.hi}, {"points", cfg.kde_grid.points}}},
          {"bandwidth_grid", bw},
          {"variance_convention", cfg.convention == VarianceConvention::TraceOverP ? "trace_over_p" : "frobenius"}};
}

inline ExperimentConfig config_from_json(const json& j) {
  try {
    ExperimentConfig cfg;
    cfg.p = j.at("p").get<std::size_t>();
    cfg.n = j.at("n").get<std::size_t>();
    cfg.q = j.at("q").get<std::size_t>();
    cfg.c = j.at("c").get<double>();
    cfg.n_reps = j.at("n_reps").get<std::size_t>();
    cfg.product = parse_product(j.at("product").get<std::string>());
    cfg.nu = nu_from_json(j.at("nu"));
    cfg.master_seed = j.at("master_seed").get<std::uint64_t>();
    cfg.model_seed = j.at("model_seed").get<std::uint64_t>();
    const json& g = j.at("kde_grid");
    cfg.kde_grid = {g.at("lo").get<double>(), g.at("hi").get<double>(), g.at("points").get<std::size_t>()};
    cfg.bandwidth_grid = j.at("bandwidth_grid").get<std::vector<double>>();
    const std::string conv = j.at("variance_convention").get<std::string>();
    if (conv != "trace_over_p" && conv != "frobenius") throw ParseError("variance_convention must be trace_over_p or frobenius");
    cfg.convention = conv == "trace_over_p" ? VarianceConvention::TraceOverP : VarianceConvention::FrobeniusCompat;
    return cfg;
  } catch (const json::exception& e) {
    throw ParseError(std::string("experiment config: ") + e.what());
  }
}

inline json report_to_json(const GofReport& r, const ExperimentConfig& cfg, double duration_seconds) {
  return {{"ks", r.ks_statistic},
          {"bandwidth", r.bandwidth},
          {"mean", r.mean},
          {"variance", r.variance},
          {"skewness", r.skewness},
          {"skewness_definition", "m3 / m2^(3/2) with central moments divided by N (no bias correction)"},
          {"variance_definition", "sum of squared deviations divided by N - 1"},
          {"config", config_to_json(cfg)},
          {"duration_seconds", duration_seconds}};
}

}  // namespace mvlmn
