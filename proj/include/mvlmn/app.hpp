#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>

#include "mvlmn/errors.hpp"
#include "mvlmn/figures.hpp"
#include "mvlmn/harness.hpp"
#include "mvlmn/io.hpp"

namespace mvlmn {

/// Everything needed to regenerate a run directory bit for bit.
struct RunManifest {
  ExperimentConfig config;
  bool kde_normal_column = false;
  std::optional<std::string> figure;  // e.g. "3c" for figure runs
  std::string samples_file = "samples.csv";
  std::string kde_file = "kde.csv";
  std::string report_file = "report.json";
  std::string code_version = std::string(kVersion);
  double duration_seconds = 0.0;
};

inline json manifest_to_json(const RunManifest& m) {
  json j = {{"config", config_to_json(m.config)},
            {"kde_normal_column", m.kde_normal_column},
            {"artifacts", {{"samples", m.samples_file}, {"kde", m.kde_file}, {"report", m.report_file}}},
            {"code_version", m.code_version},
            {"duration_seconds", m.duration_seconds}};
  if (m.figure) j["figure"] = *m.figure;
  return j;
}

inline RunManifest manifest_from_json(const json& j) {
  RunManifest m;
  try {
    m.config = config_from_json(j.at("config"));
    m.kde_normal_column = j.value("kde_normal_column", false);
    if (j.contains("figure")) m.figure = j.at("figure").get<std::string>();
    if (j.contains("code_version")) m.code_version = j.at("code_version").get<std::string>();
    m.duration_seconds = j.value("duration_seconds", 0.0);
  } catch (const json::exception& e) {
    throw ParseError(std::string("manifest: ") + e.what());
  }
  return m;
}

/// Experiment config for one figure panel.
inline ExperimentConfig figure_config(const FigurePanel& fp, std::size_t n_reps, std::uint64_t master_seed,
                                      std::uint64_t model_seed, std::size_t q = 10) {
  ExperimentConfig cfg;
  cfg.p = fp.p;
  cfg.n = fp.n;
  cfg.q = q;
  cfg.c = fp.c;
  cfg.n_reps = n_reps;
  cfg.product = fp.product;
  cfg.nu = make_nu(fp.nu, q);
  cfg.master_seed = master_seed;
  cfg.model_seed = model_seed;
  return cfg;
}

/// Runs the experiment and writes samples.csv, kde.csv, report.json and
/// manifest.json into `out_dir`.
inline RunManifest run_to_directory(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                                    unsigned threads, bool kde_normal_column,
                                    std::optional<std::string> figure = std::nullopt) {
  cfg.validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec || !std::filesystem::is_directory(out_dir)) {
    throw IoError("cannot create output directory " + out_dir.string());
  }
  const auto start = std::chrono::steady_clock::now();
  const SampleSet set = run_experiment(cfg, threads);
  const GofReport report = summarize(set);
  const double duration = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  RunManifest m;
  m.config = cfg;
  m.kde_normal_column = kde_normal_column;
  m.figure = std::move(figure);
  m.duration_seconds = duration;
  write_text_file(out_dir / m.samples_file, samples_csv(set.standardized));
  write_text_file(out_dir / m.kde_file, kde_csv(report.kde, kde_normal_column));
  write_text_file(out_dir / m.report_file, report_to_json(report, cfg, duration).dump(2) + "\n");
  write_text_file(out_dir / "manifest.json", manifest_to_json(m).dump(2) + "\n");
  return m;
}

}  // namespace mvlmn
