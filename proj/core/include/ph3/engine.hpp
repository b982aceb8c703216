#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "ph3/backend.hpp"
#include "ph3/core.hpp"

namespace ph3 {

/// (position x class) probability table extracted from one forward pass.
/// Row 0 is the next-token position; row i the i-th subsequent position.
struct PositionClassMatrix {
  Eigen::MatrixXd entries;      // (m+1) x K, class-token sums, unnormalized
  std::size_t input_tokens = 0; // n
  std::size_t placeholders = 0; // m

  std::size_t positions() const { return static_cast<std::size_t>(entries.rows()); }
  std::size_t num_classes() const { return static_cast<std::size_t>(entries.cols()); }
  Eigen::RowVectorXd row(std::size_t i) const {
    return entries.row(static_cast<Eigen::Index>(i));
  }
  /// Per-row renormalized copy (each row sums to 1).
  PositionClassMatrix normalized() const;
};

enum class CalibrationVariant { None, NA, Empty, Unk5 };

std::string to_string(CalibrationVariant v);
CalibrationVariant calibration_variant_from_string(std::string_view s);

/// Per-class scores measured on a content-free input; divisor of `calibrate`.
/// Entries are floor-clamped to 1e-12.
struct CalibrationVector {
  Eigen::RowVectorXd content_free_scores;
  CalibrationVariant variant = CalibrationVariant::None;
};

/// Sum of `dist` over each class's token set.
Eigen::RowVectorXd class_sums(const Eigen::RowVectorXd& dist,
                              const LabelSpec& labels);

/// Class scores at the position right after x (next-token prediction).
Eigen::RowVectorXd ntp_scores(const Backend& backend,
                              std::span<const TokenId> x,
                              const LabelSpec& labels);

/// Class scores at the skip-th subsequent position, approximated by
/// appending `skip` placeholder tokens and reading the final output row.
Eigen::RowVectorXd psp_scores(const Backend& backend,
                              std::span<const TokenId> x, std::size_t skip,
                              const LabelSpec& labels);

/// All positions 0..m from ONE forward pass over x ++ <ph> x m.
/// Row i equals psp_scores(backend, x, i, labels) on any causal backend.
PositionClassMatrix p3_matrix(const Backend& backend,
                              std::span<const TokenId> x, std::size_t m,
                              const LabelSpec& labels);

/// Exact marginal class probability at the i-th subsequent position,
/// chain-rule-enumerated over every possible i-token prefix. Feasibility
/// guard: V^i <= 1e6, else EnumerationTooLarge.
Eigen::RowVectorXd exact_marginal(const Backend& backend,
                                  std::span<const TokenId> x, std::size_t i,
                                  const LabelSpec& labels);

/// Divide scores by the content-free scores and renormalize to sum 1.
/// Argmax is invariant under positive rescaling of `scores`.
Eigen::RowVectorXd calibrate(const Eigen::RowVectorXd& scores,
                             const CalibrationVector& cal);

/// Score the content-free input for `variant` rendered through `tmpl`, at the
/// same placeholder offset `position_context` as the scores being calibrated.
CalibrationVector content_free_vector(const Backend& backend,
                                      const PromptTemplate& tmpl,
                                      const LabelSpec& labels,
                                      CalibrationVariant variant,
                                      std::size_t position_context);

}  // namespace ph3
