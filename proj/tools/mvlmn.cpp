// Command-line front end: simulate, figure, verify, density.
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "mvlmn/app.hpp"
#include "mvlmn/density.hpp"
#include "mvlmn/errors.hpp"
#include "mvlmn/figures.hpp"
#include "mvlmn/io.hpp"
#include "mvlmn/verify.hpp"

namespace {

enum Exit : int { kOk = 0, kVerifyFailed = 1, kUsage = 2, kRegime = 3, kIo = 4 };

struct SimulateOptions {
  std::size_t p = 0;
  std::size_t n = 0;
  std::size_t q = 10;
  std::optional<double> c;
  std::size_t nreps = 100000;
  std::string product = "cov";
  std::string nu = "tn";
  std::uint64_t seed = 1;
  std::uint64_t model_seed = 20170101;
  std::string out;
  unsigned threads = 0;
  std::string manifest;
  bool frobenius = false;
  double kde_lo = -4.0;
  double kde_hi = 4.0;
  std::size_t kde_points = 201;
};

struct FigureOptions {
  int figure = 0;
  std::string panel;
  std::size_t nreps = 100000;
  std::uint64_t seed = 1;
  std::uint64_t model_seed = 20170101;
  std::string out;
  unsigned threads = 0;
};

int run_simulate(const SimulateOptions& o, bool p_given, bool n_given) {
  if (!o.manifest.empty()) {
    const mvlmn::RunManifest m = mvlmn::manifest_from_json(mvlmn::read_json_file(o.manifest));
    mvlmn::run_to_directory(m.config, o.out, o.threads, m.kde_normal_column, m.figure);
    return kOk;
  }
  if (!p_given || !n_given) throw mvlmn::InvalidInput("--p and --n are required unless --manifest is given");
  if (o.n == 0) throw mvlmn::InvalidDimension("--n must be positive");
  mvlmn::ExperimentConfig cfg;
  cfg.p = o.p;
  cfg.n = o.n;
  cfg.q = o.q;
  cfg.c = o.c.value_or(static_cast<double>(o.p) / static_cast<double>(o.n));
  cfg.n_reps = o.nreps;
  cfg.product = mvlmn::parse_product(o.product);
  cfg.nu = mvlmn::make_nu(o.nu == "gal" ? mvlmn::NuFamily::Gal : mvlmn::NuFamily::TruncatedNormal, o.q);
  cfg.master_seed = o.seed;
  cfg.model_seed = o.model_seed;
  cfg.kde_grid = {o.kde_lo, o.kde_hi, o.kde_points};
  cfg.convention = o.frobenius ? mvlmn::VarianceConvention::FrobeniusCompat : mvlmn::VarianceConvention::TraceOverP;
  mvlmn::run_to_directory(cfg, o.out, o.threads, false);
  return kOk;
}

int run_figure(const FigureOptions& o) {
  const auto row = mvlmn::find_figure_panel(o.figure, o.panel.empty() ? '?' : o.panel[0]);
  if (!row || o.panel.size() != 1) throw mvlmn::InvalidInput("unknown figure/panel");
  const auto cfg = mvlmn::figure_config(*row, o.nreps, o.seed, o.model_seed);
  mvlmn::run_to_directory(cfg, o.out, o.threads, true, std::to_string(o.figure) + o.panel);
  return kOk;
}

int run_verify(const std::string& suite, std::uint64_t seed, const std::string& out) {
  const auto checks = mvlmn::run_suite(suite, seed);
  bool ok = true;
  for (const auto& c : checks) ok = ok && c.passed;
  const nlohmann::json report = {{"suite", suite}, {"seed", seed}, {"passed", ok}, {"checks", mvlmn::checks_to_json(checks)}};
  const std::string text = report.dump(2) + "\n";
  std::cout << text;
  if (!out.empty()) mvlmn::write_text_file(out, text);
  return ok ? kOk : kVerifyFailed;
}

int run_density(const std::string& model_path, const std::string& data_path) {
  const mvlmn::ModelSpec model = mvlmn::load_model(model_path);
  const Eigen::MatrixXd z = mvlmn::read_csv_matrix(data_path);
  if (static_cast<std::size_t>(z.rows()) != model.p()) {
    throw mvlmn::InvalidDimension("data has " + std::to_string(z.rows()) + " rows but the model has p = " +
                                  std::to_string(model.p()));
  }
  const auto ws = mvlmn::build_workspace(model, static_cast<std::size_t>(z.cols()));
  const nlohmann::json out = {{"log_density", mvlmn::log_density(ws, model, z)}};
  std::cout << out.dump() << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Matrix-variate location mixture of normals: simulation, verification and density tool"};
  app.set_version_flag("--version", std::string(mvlmn::kVersion));
  app.require_subcommand(1);

  SimulateOptions sim;
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo study of a standardized product statistic");
  simulate->add_option("--p", sim.p, "dimension p")->check(CLI::PositiveNumber);
  simulate->add_option("--n", sim.n, "sample size n")->check(CLI::Range(std::size_t{2}, std::size_t{1} << 40));
  simulate->add_option("--q", sim.q, "mixing dimension q")->check(CLI::PositiveNumber)->capture_default_str();
  simulate->add_option("--c", sim.c, "aspect ratio used for standardization (default p/n)")->check(CLI::NonNegativeNumber);
  simulate->add_option("--nreps", sim.nreps, "number of replicates N")->capture_default_str();
  simulate->add_option("--product", sim.product, "statistic: cov = l'S xbar, precision = l'S^-1 xbar")
      ->check(CLI::IsMember({"cov", "precision"}))
      ->capture_default_str();
  simulate->add_option("--nu", sim.nu, "mixing law: tn = |N(0,I)|, gal = GAL(1, I, 10)")
      ->check(CLI::IsMember({"tn", "gal"}))
      ->capture_default_str();
  simulate->add_option("--seed", sim.seed, "master seed of the replicate streams")->capture_default_str();
  simulate->add_option("--model-seed", sim.model_seed, "seed of the random mu, Sigma, B")->capture_default_str();
  simulate->add_option("--out", sim.out, "output directory")->required();
  simulate->add_option("--threads", sim.threads, "worker threads (0 = all cores); output does not depend on it")
      ->capture_default_str();
  simulate->add_option("--manifest", sim.manifest, "re-run the configuration stored in a manifest.json")
      ->check(CLI::ExistingFile);
  simulate->add_flag("--frobenius-variance", sim.frobenius,
                     "use c*||Sigma||_F^2 instead of c*tr(Sigma^2)/p in the l'S xbar variance");
  simulate->add_option("--kde-lo", sim.kde_lo, "KDE grid lower end")->capture_default_str();
  simulate->add_option("--kde-hi", sim.kde_hi, "KDE grid upper end")->capture_default_str();
  simulate->add_option("--kde-points", sim.kde_points, "KDE grid size")->capture_default_str();

  FigureOptions fig;
  auto* figure = app.add_subcommand("figure", "Regenerate the data behind one figure panel");
  figure->add_option("--figure", fig.figure, "figure number")->required()->check(CLI::Range(1, 8));
  figure->add_option("--panel", fig.panel, "panel letter")->required()->check(CLI::IsMember({"a", "b", "c", "d"}));
  figure->add_option("--nreps", fig.nreps, "number of replicates N")->capture_default_str();
  figure->add_option("--seed", fig.seed, "master seed")->capture_default_str();
  figure->add_option("--model-seed", fig.model_seed, "seed of the random mu, Sigma, B")->capture_default_str();
  figure->add_option("--out", fig.out, "output directory")->required();
  figure->add_option("--threads", fig.threads, "worker threads (0 = all cores)")->capture_default_str();

  std::string suite = "all";
  std::uint64_t verify_seed = 1;
  std::string verify_out;
  auto* verify = app.add_subcommand("verify", "Run oracle and identity checks; exit 1 if any fails");
  verify->add_option("--suite", suite, "check suite")
      ->check(CLI::IsMember({"oracle", "moments", "variance", "density", "all"}))
      ->capture_default_str();
  verify->add_option("--seed", verify_seed, "seed")->capture_default_str();
  verify->add_option("--out", verify_out, "also write the JSON report to this file");

  std::string model_path, data_path;
  auto* density = app.add_subcommand("density", "Log-density of a data matrix under truncated-normal mixing");
  density->add_option("--model", model_path, "model JSON file")->required();
  density->add_option("--data", data_path, "p x n data matrix, CSV without header")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*simulate) return run_simulate(sim, simulate->count("--p") > 0, simulate->count("--n") > 0);
    if (*figure) return run_figure(fig);
    if (*verify) return run_verify(suite, verify_seed, verify_out);
    if (*density) return run_density(model_path, data_path);
  } catch (const mvlmn::RegimeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRegime;
  } catch (const mvlmn::UnsupportedMixing& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRegime;
  } catch (const mvlmn::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  } catch (const mvlmn::ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kUsage;
  } catch (const mvlmn::InvalidDimension& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const mvlmn::InvalidInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const mvlmn::NotPositiveDefinite& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const mvlmn::ZeroVector& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kVerifyFailed;
  }
  return kUsage;
}
