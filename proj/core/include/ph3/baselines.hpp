#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ph3/backend.hpp"
#include "ph3/core.hpp"

namespace ph3 {

/// Result of generation-based classification.
struct GenerationOutcome {
  std::vector<TokenId> generated_tokens;
  std::optional<std::size_t> matched_class;  // index into LabelSpec
  std::size_t tokens_consumed = 0;           // = backend runs
  bool truncated = false;
};

struct DecodingMode {
  bool greedy = true;
  double temperature = 1.0;
  std::uint64_t seed = 0;

  static DecodingMode greedy_mode() { return DecodingMode{}; }
  static DecodingMode sampled(double temperature, std::uint64_t seed) {
    return DecodingMode{false, temperature, seed};
  }
};

/// Generate token by token until a class surface form appears
/// (case-insensitive substring of the detokenized continuation) or
/// max_tokens is reached.
GenerationOutcome generate_classify(const Backend& backend,
                                    std::span<const TokenId> prompt_tokens,
                                    const LabelSpec& labels,
                                    std::size_t max_tokens = 50,
                                    DecodingMode mode = DecodingMode::greedy_mode());

struct SelfConsistencyResult {
  std::optional<std::size_t> decision;  // empty = Undecided
  std::size_t total_runs = 0;           // sum of tokens_consumed over ways
  std::vector<GenerationOutcome> ways;
};

/// Plurality vote over several sampled generation paths. Unmatched ways
/// abstain; an all-abstain or tied vote is Undecided.
SelfConsistencyResult self_consistency(const Backend& backend,
                                       std::span<const TokenId> prompt_tokens,
                                       const LabelSpec& labels,
                                       std::size_t ways,
                                       double temperature,
                                       std::span<const std::uint64_t> seeds,
                                       std::size_t max_tokens = 50);

}  // namespace ph3
