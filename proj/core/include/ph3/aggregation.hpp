#pragma once

#include <cstddef>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <tuple>

#include "ph3/backend.hpp"
#include "ph3/core.hpp"
#include "ph3/engine.hpp"

namespace ph3 {

/// How per-position class scores become one decision.
struct AggregationPolicy {
  enum class Kind { NextToken, SkipPosition, SlopePosition, RangeVote };

  Kind kind = Kind::NextToken;
  std::size_t skip = 0;               // SkipPosition
  double eta_degrees = 0.0;           // SlopePosition, [0, 90)
  double intercept = -10.0;           // SlopePosition
  std::size_t eta = 1;                // RangeVote width, >= 1
  CalibrationVariant calibration = CalibrationVariant::None;  // RangeVote
  bool score_sum_vote = false;        // RangeVote: sum scores instead of ballots

  static AggregationPolicy next_token();
  static AggregationPolicy skip_position(std::size_t i);
  static AggregationPolicy slope_position(double eta_degrees, double intercept);
  static AggregationPolicy range_vote(std::size_t eta,
                                      CalibrationVariant cal = CalibrationVariant::None);

  void validate() const;
  /// Highest matrix position the policy can request for an n-token input.
  std::size_t max_position(std::size_t n_tokens, std::size_t m_cap) const;

  std::string to_json() const;
  static AggregationPolicy from_json(const std::string& json_text);
};

/// Position selected by the slope rule: clamp(round(tan(eta) * n + b), 0, m_max).
std::size_t slope_position(std::size_t n_tokens, double eta_degrees, double intercept,
                           std::size_t m_max);

/// Plurality vote over per-position argmaxes for positions [0, eta).
/// `cals`, when non-null, supplies one calibration vector per voting position.
/// Ties break to the smallest position index whose argmax is in the tied set.
std::size_t range_vote(const PositionClassMatrix& matrix, std::size_t eta,
                       const std::vector<CalibrationVector>* cals = nullptr,
                       bool score_sum = false);

/// Content-free score cache keyed by (template, variant, position).
/// Concurrent lookups are safe; inserts are serialized.
class CalibrationCache {
 public:
  const CalibrationVector& get(const Backend& backend, const PromptTemplate& tmpl,
                               const LabelSpec& labels, CalibrationVariant variant,
                               std::size_t position);
  std::size_t size() const;

 private:
  using Key = std::tuple<std::string, CalibrationVariant, std::size_t>;
  mutable std::mutex mu_;
  std::map<Key, CalibrationVector> entries_;
};

struct ClassifyResult {
  std::size_t class_index;
  PositionClassMatrix matrix;
};

/// One forward pass, then policy dispatch. Calibration (RangeVote only) uses
/// `calibration_template` (the null template when absent) through `cache`;
/// without a cache, vectors are computed per call.
ClassifyResult classify(const Backend& backend, std::string_view rendered_prompt,
                        const LabelSpec& labels, const AggregationPolicy& policy,
                        CalibrationCache* cache = nullptr,
                        const PromptTemplate* calibration_template = nullptr,
                        std::size_t placeholder_cap = 512);

}  // namespace ph3
