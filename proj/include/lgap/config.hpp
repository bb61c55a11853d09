#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lgap/model.hpp"
#include "lgap/rbm.hpp"

namespace lgap {

enum class RunMode { Rbm, Ed, Bethe, MeanField, Compare };

std::string to_string(RunMode mode);
RunMode mode_from_string(const std::string& s);

struct ModelBlock {
  Geometry geometry = Geometry::Chain;
  int n = 0;        // chain sites
  int lx = 0, ly = 0;
  std::optional<Boundary> boundary;  // required for square, chain defaults
  double jx = 0.0, jy = 0.0, jz = 0.0;
  double gamma = 0.0;

  Boundary effective_boundary() const {
    return boundary.value_or(Boundary::Periodic);
  }
  int sites() const {
    return geometry == Geometry::Chain ? n : lx * ly;
  }
  bool operator==(const ModelBlock&) const = default;
};

enum class AncillaryKind { Identity, AllDown };

struct RbmBlock {
  std::optional<int> hidden;   // explicit M wins over the ratio
  double hidden_ratio = 3.0;   // M = ratio * 2N
  double init_scale = 0.01;
  AncillaryKind ancillary = AncillaryKind::Identity;
  OkVariant ok_variant = OkVariant::ChainRule;

  int hidden_count(int sites) const {
    if (hidden) return *hidden;
    return static_cast<int>(hidden_ratio * 2 * sites + 0.5);
  }
  bool operator==(const RbmBlock&) const = default;
};

struct SamplerBlock {
  long samples = 0;
  int chains = 2;
  std::optional<std::uint64_t> seed;  // mandatory for sampling modes
  bool exact_summation = false;
  double burn_in = 0.05;
  long trace_samples = 1024;
  std::optional<bool> exhaustive_trace;  // default: on for N <= 14

  bool exhaustive_trace_for(int sites) const {
    return exhaustive_trace.value_or(sites <= 14);
  }
  bool operator==(const SamplerBlock&) const = default;
};

struct OptimizerBlock {
  int max_iters = 500;
  double beta = 0.0;
  bool two_phase = true;
  int window = 20;
  double tolerance = 1e-3;
  bool operator==(const OptimizerBlock&) const = default;
};

struct OutputBlock {
  std::string dir = ".";
  bool operator==(const OutputBlock&) const = default;
};

struct ExperimentConfig {
  std::optional<RunMode> mode;  // usually supplied by the CLI subcommand
  ModelBlock model;
  RbmBlock rbm;
  SamplerBlock sampler;
  OptimizerBlock optimizer;
  OutputBlock output;
  bool operator==(const ExperimentConfig&) const = default;
};

// Strict section/key parser: unknown sections or keys, malformed lines and
// type mismatches raise ConfigError naming the key and line.
ExperimentConfig parse_config(const std::string& text);

// Canonical serialization; parse(serialize(cfg)) == cfg.
std::string serialize_config(const ExperimentConfig& cfg);

// FNV-1a over the canonical serialization.
std::uint64_t config_hash(const ExperimentConfig& cfg);

// Mode-dependent completeness checks; returns advisory warnings (e.g. a
// hidden-unit ratio outside the recommended 3..6 band).
std::vector<std::string> validate_config(const ExperimentConfig& cfg,
                                         RunMode mode);

// key=value override of a single config entry, "section.key=value".
void apply_override(ExperimentConfig& cfg, const std::string& assignment);

}  // namespace lgap
