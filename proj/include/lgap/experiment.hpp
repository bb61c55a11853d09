#pragma once

#include <string>

#include "lgap/config.hpp"
#include "lgap/optimizer.hpp"

namespace lgap {

inline constexpr const char* kVersion = "0.1.0";

// Exact-round-trip parameter checkpoint: a text header (N, M, ancillary
// descriptor, iteration index) followed by one hexfloat per real value.
void save_checkpoint(const std::string& path, const RbmParameters& rbm,
                     const AncillaryState& ancillary, int iteration);

struct Checkpoint {
  RbmParameters rbm;
  AncillaryState ancillary;
  int iteration = 0;
};

Checkpoint load_checkpoint(const std::string& path);

// Builds the model objects out of a validated config block.
LindbladModel model_from_config(const ModelBlock& block);

// Runs one experiment and writes its artifacts (manifest, trace, summary,
// exports) under cfg.output.dir. Throws ConfigError for bad configs and
// other exceptions for runtime failures; partial artifacts stay on disk.
void run_experiment(const ExperimentConfig& cfg, RunMode mode);

}  // namespace lgap
