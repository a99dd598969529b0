// lyacert: learn a quadratic Lyapunov certificate from a trajectory CSV, or
// generate synthetic trajectories.
//
// Exit codes: 0 certified (or synth written), 1 usage/input error,
// 2 no certificate found, 3 training diverged.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "lyacert/certifier.hpp"
#include "lyacert/csv.hpp"
#include "lyacert/error.hpp"
#include "lyacert/report.hpp"
#include "lyacert/synth.hpp"

namespace {

using namespace lyacert;

constexpr int kExitCertified = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNotFound = 2;
constexpr int kExitDiverged = 3;

struct CertifyArgs {
  std::string input;
  std::string report;
  std::string format = "html";
  std::string mode = "constant";
  CertifyConfig config;
};

struct SynthArgs {
  double damping = 0.1;
  double freq = 1.0;
  bool unstable = false;
  double rate = 0.5;
  double e0 = 1.0;
  double sigma = 0.0;
  double t_end = 30.0;
  double h = 0.01;
  std::uint64_t seed = 0;
  std::string output;
};

std::optional<std::uint64_t> seed_from_env() {
  const char* s = std::getenv("LYACERT_SEED");
  if (!s || !*s) return std::nullopt;
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(s, &used);
    if (used != std::string(s).size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw InputError(fmt::format("LYACERT_SEED must be a non-negative integer, got '{}'", s));
  }
}

int run_certify(CertifyArgs& args) {
  if (auto seed = seed_from_env()) args.config.train.seed = *seed;
  args.config.train.mode = mode_from_string(args.mode);
  const RawTrajectory raw = read_csv(args.input);
  const PipelineResult result = run_pipeline(raw, args.config);

  std::cout << verdict_reason(result.verdict) << '\n';
  if (!args.report.empty()) {
    Provenance provenance{std::filesystem::path(args.input).filename().string(), hash_file(args.input)};
    write_report(make_bundle(result, args.config, std::move(provenance)), args.report, args.format);
  }
  switch (result.verdict.index()) {
    case 0: return kExitCertified;
    case 1: return kExitNotFound;
    default: return kExitDiverged;
  }
}

int run_synth(SynthArgs& args) {
  if (auto seed = seed_from_env()) args.seed = *seed;
  const LtiSystem system =
      args.unstable ? LtiSystem::exponential(args.rate) : LtiSystem::damped_oscillator(args.damping, args.freq);
  Vector xi0(2);
  // The exponential starts on its growing mode, so e(t) = e0 exp(rate t).
  xi0 << args.e0, args.unstable ? args.rate * args.e0 : 0.0;
  const RawTrajectory raw = add_noise(simulate(system, xi0, args.t_end, args.h), {args.sigma, args.seed});
  if (args.output.empty() || args.output == "-") {
    write_csv(std::cout, raw);
  } else {
    write_csv(args.output, raw);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learn quadratic Lyapunov stability certificates from sampled trajectories"};
  app.require_subcommand(1);

  CertifyArgs cert;
  CertifyConfig& c = cert.config;
  auto* certify_cmd = app.add_subcommand("certify", "Certify a trajectory CSV (t,r,x columns)");
  certify_cmd->add_option("input", cert.input, "Trajectory CSV")->required();
  certify_cmd->add_option("--report", cert.report, "Write a report to this path");
  certify_cmd->add_option("--format", cert.format, "Report format")
      ->check(CLI::IsMember({"html", "json"}))
      ->capture_default_str();
  certify_cmd->add_option("--dt", c.dt, "Resampling step [s]")->capture_default_str();
  certify_cmd->add_option("--gamma", c.train.gamma, "Decrease margin")->capture_default_str();
  certify_cmd->add_option("--lr", c.train.learning_rate, "Gradient-descent step")->capture_default_str();
  certify_cmd->add_option("--epochs", c.train.epochs, "Epoch limit")->capture_default_str();
  certify_cmd->add_option("--seed", c.train.seed, "Initialisation seed (LYACERT_SEED overrides)")
      ->capture_default_str();
  certify_cmd->add_option("--mode", cert.mode, "Candidate parameterisation")
      ->check(CLI::IsMember({"constant", "mlp"}))
      ->capture_default_str();
  certify_cmd->add_option("--hidden", c.train.hidden, "Hidden layer widths (mlp mode)")
      ->capture_default_str();
  certify_cmd->add_option("--theta-max", c.train.theta_max, "Divergence threshold on max |theta|")
      ->capture_default_str();
  certify_cmd->add_option("--tol-loss", c.train.tol_loss, "Convergence threshold on the loss")
      ->capture_default_str();
  certify_cmd->add_option("--eps-max", c.eps_max, "Reject certificates with a larger epsilon");
  certify_cmd->add_option("--smooth", c.smoothing_window, "Odd moving-average width applied to e (0 = off)")
      ->capture_default_str();
  certify_cmd->add_option("--holdout", c.holdout_fraction, "Trailing fraction of samples kept out of training")
      ->capture_default_str();
  certify_cmd->add_option("--nonconstancy-tol", c.nonconstancy_tol, "Mlp mode: relative Q(xi) spread allowed")
      ->capture_default_str();

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic trajectory CSV");
  synth_cmd->set_help_flag("--help", "Print this help message and exit");  // frees -h for --h
  synth_cmd->add_option("--damping", synth.damping, "Damping ratio")->capture_default_str();
  synth_cmd->add_option("--freq", synth.freq, "Natural frequency [rad/s]")->capture_default_str();
  synth_cmd->add_flag("--unstable", synth.unstable, "Exponentially growing error instead");
  synth_cmd->add_option("--rate", synth.rate, "Growth rate with --unstable [1/s]")->capture_default_str();
  synth_cmd->add_option("--e0", synth.e0, "Initial tracking error")->capture_default_str();
  synth_cmd->add_option("--sigma", synth.sigma, "Measurement noise std")->capture_default_str();
  synth_cmd->add_option("--t-end", synth.t_end, "Duration [s]")->capture_default_str();
  synth_cmd->add_option("--h", synth.h, "Integration and output step [s]")->capture_default_str();
  synth_cmd->add_option("--seed", synth.seed, "Noise seed (LYACERT_SEED overrides)")->capture_default_str();
  synth_cmd->add_option("-o,--output", synth.output, "Output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*certify_cmd) return run_certify(cert);
    return run_synth(synth);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}
