#pragma once

#include <filesystem>
#include <string>

#include "mfg/evaluators.hpp"
#include "mfg/fictitious_play.hpp"
#include "mfg/generators.hpp"

namespace mfg {

/// Serialized form: generator spec + kernel + the materialized state/model
/// fields, so a file is both reproducible and human-checkable. `load`
/// regenerates from the spec and verifies the materialized fields agree.
void save_instance(const Instance& instance, const std::filesystem::path& path);
Instance load_instance(const std::filesystem::path& path);

std::string instance_to_json(const Instance& instance);
Instance instance_from_json(const std::string& text);

/// Everything run_experiment needs; `instance_path` and `generator` are
/// alternatives (the path wins when both are present).
struct RunConfig {
  std::string instance_path;
  std::optional<GeneratorSpec> generator;
  std::optional<Kernel> kernel;  // only with inline generator
  double lambda = 0.5;
  int T = 1000;
  std::optional<double> c_alpha, c_beta, c_eta;
  Mode mode = Mode::D;
  EvaluatorConfig evaluator;
  DiagnosticsLevel diagnostics = DiagnosticsLevel::Full;
  std::uint64_t seed = 0;
  double ne_tol = 1e-10;
  bool baseline = false;         // run the double-loop method instead
  double inner_tol = 1e-10;      // baseline inner solve tolerance
  std::string output_dir = ".";
  std::string label = "run";     // file-name stem
};

RunConfig run_config_from_json(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);
std::string run_config_to_json(const RunConfig& config);

struct SweepSpec {
  RunConfig base;
  std::string axis;                 // T | epsilon | lambda | coupling
  std::vector<double> values;
  int replications = 1;
};

SweepSpec sweep_spec_from_json(const std::string& text);
SweepSpec load_sweep_spec(const std::filesystem::path& path);

}  // namespace mfg
