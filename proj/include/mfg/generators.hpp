#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "mfg/kernel.hpp"
#include "mfg/model.hpp"

namespace mfg {

/// Reproducible instance description; an instance file stores exactly these
/// fields plus the materialized tables for inspection.
struct GeneratorSpec {
  std::string kind = "crowding";  // crowding | random_contractive | torus_nav
  int n = 16;          // states for 1-D kinds, per-side count for 2-D kinds
  int dims = 1;
  int m = 3;           // actions (1-D moves); 2-D kinds use 5
  double gamma = 0.9;
  double r_max = 1.0;
  double coupling = 0.1;  // congestion strength c
  double slip = 0.1;      // move noise (crowding, torus_nav)
  double jump = 0.5;      // exogenous churn: uniform resampling probability
  std::uint64_t seed = 0;
  double reward_width = 0.0;  // attraction profile width; 0 picks a default
};

struct Instance {
  MFGModel model;
  Kernel kernel;
  GeneratorSpec generator;
};

/// Builds one of the shipped problem families. The congestion penalty enters
/// only through the embedded mean-field values, and identical specs always
/// produce identical tables. The kernel defaults to a Gaussian with
/// bandwidth twice the grid spacing.
Instance generate_instance(const GeneratorSpec& spec,
                           std::optional<Kernel> kernel = {});

}  // namespace mfg
