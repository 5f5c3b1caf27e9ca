#pragma once

// Command layer behind the `ris` executable: run, sweep, verify, list-problems.

#include "ris/io.hpp"
#include "ris/problems.hpp"

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace ris::cli {

/// One run as described by flags and/or a JSON config (flags win).
struct RunConfig {
  std::string problem;
  std::string scheme;
  std::optional<int> N;
  std::optional<double> h;
  std::optional<double> eta;
  std::optional<double> delta;
  std::optional<double> mu;
  std::optional<std::string> muRule;
  std::optional<double> ratio;
  std::optional<double> alpha;
  std::optional<double> tol;
  std::optional<long> maxOuter;
  std::optional<int> maxInner;
  bool zParam = false;
  std::string out;
  std::vector<std::string> formats{"csv", "json"};
};

/// Evaluates a viscosity rule over {tau, sqrt(...), *, numbers}, e.g. "0.1*sqrt(tau)".
double eval_mu_rule(const std::string& expr, double tau);

/// Sets one parameter by its config key (the flag name without dashes);
/// throws ParameterError naming the key when unknown or ill-typed.
void set_param(RunConfig& cfg, const std::string& key, const json& value);
RunConfig config_from_json(const json& j);
json config_to_json(const RunConfig& cfg);

/// Validates the parameters against the scheme and builds the solver config.
SchemeConfig to_scheme_config(const RunConfig& cfg, const Problem& pr);

struct RunOutcome {
  Termination terminated = Termination::ReachedT;
  DiagnosticsReport report;
  StepJump jump;
  int steps = 0;
  int minimizations = 0;
  std::filesystem::path dir;
};

/// Solves, parametrises, diagnoses and writes trace.csv, curve.csv,
/// diagnostics.json and run.json into `dir`.
RunOutcome execute_run(const RunConfig& cfg, const std::filesystem::path& dir);

/// Entry point; returns the process exit code.
int run_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ris::cli
