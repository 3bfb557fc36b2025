#pragma once

#include <cstdint>
#include <string>

#include "fast/pipeline.hpp"

namespace fast {

/// Evaluation harness knobs.
struct EvalOptions {
  int n_random = 20;
  int heldout_freqs = 256;
  bool run_strategies = true;
  std::uint64_t seed = 1;  // kept disjoint from the selection seed streams
};

/// Flat key=value configuration covering the whole toolkit. Unknown keys are
/// errors so typos in ablation scripts fail loudly.
class Config {
 public:
  PipelineConfig pipeline;
  EvalOptions eval;

  /// Parses and validates one key. Throws InvalidParameterError on unknown
  /// keys or malformed values.
  void set(const std::string& key, const std::string& value);

  /// Loads "key=value" lines; '#' starts a comment, blank lines are skipped.
  void load_file(const std::string& path);

  /// Full canonical snapshot, one "key=value" line per known key, sorted.
  std::string snapshot() const;
};

}  // namespace fast
