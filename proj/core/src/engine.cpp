#include "ph3/engine.hpp"

#include <cmath>
#include <vector>

namespace ph3 {

PositionClassMatrix PositionClassMatrix::normalized() const {
  PositionClassMatrix out = *this;
  for (Eigen::Index i = 0; i < out.entries.rows(); ++i) {
    const double s = out.entries.row(i).sum();
    if (s > 0.0) out.entries.row(i) /= s;
  }
  return out;
}

std::string to_string(CalibrationVariant v) {
  switch (v) {
    case CalibrationVariant::None: return "none";
    case CalibrationVariant::NA: return "na";
    case CalibrationVariant::Empty: return "empty";
    case CalibrationVariant::Unk5: return "unk5";
  }
  return "none";
}

CalibrationVariant calibration_variant_from_string(std::string_view s) {
  if (s == "none") return CalibrationVariant::None;
  if (s == "na") return CalibrationVariant::NA;
  if (s == "empty") return CalibrationVariant::Empty;
  if (s == "unk5") return CalibrationVariant::Unk5;
  throw ValidationError("unknown calibration variant '" + std::string(s) + "'");
}

Eigen::RowVectorXd class_sums(const Eigen::RowVectorXd& dist,
                              const LabelSpec& labels) {
  Eigen::RowVectorXd out =
      Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(labels.num_classes()));
  for (std::size_t c = 0; c < labels.num_classes(); ++c)
    for (TokenId t : labels.classes[c].tokens)
      out[static_cast<Eigen::Index>(c)] += dist[t];
  return out;
}

namespace {

std::vector<TokenId> with_placeholders(const Backend& backend,
                                       std::span<const TokenId> x,
                                       std::size_t count) {
  std::vector<TokenId> seq(x.begin(), x.end());
  seq.insert(seq.end(), count, backend.vocab().placeholder_id);
  return seq;
}

// Next-token distribution after `seq`, with LM(empty) for an empty sequence.
Eigen::RowVectorXd next_distribution(const Backend& backend,
                                     std::span<const TokenId> seq) {
  if (seq.empty()) return backend.empty_prefix_distribution();
  const auto matrix = backend.forward_full(seq);
  return matrix.rows.row(matrix.rows.rows() - 1);
}

}  // namespace

Eigen::RowVectorXd psp_scores(const Backend& backend,
                              std::span<const TokenId> x, std::size_t skip,
                              const LabelSpec& labels) {
  const auto seq = with_placeholders(backend, x, skip);
  return class_sums(next_distribution(backend, seq), labels);
}

Eigen::RowVectorXd ntp_scores(const Backend& backend,
                              std::span<const TokenId> x,
                              const LabelSpec& labels) {
  return psp_scores(backend, x, 0, labels);
}

PositionClassMatrix p3_matrix(const Backend& backend,
                              std::span<const TokenId> x, std::size_t m,
                              const LabelSpec& labels) {
  PositionClassMatrix out;
  out.input_tokens = x.size();
  out.placeholders = m;
  out.entries.resize(static_cast<Eigen::Index>(m + 1),
                     static_cast<Eigen::Index>(labels.num_classes()));
  const auto seq = with_placeholders(backend, x, m);
  if (seq.empty()) {
    // empty input, m == 0: single row from the start state
    out.entries.row(0) = class_sums(backend.empty_prefix_distribution(), labels);
    return out;
  }
  const auto matrix = backend.forward_full(seq);
  for (std::size_t i = 0; i <= m; ++i) {
    Eigen::RowVectorXd dist;
    if (x.empty() && i == 0)
      dist = backend.empty_prefix_distribution();
    else
      dist = matrix.rows.row(static_cast<Eigen::Index>(x.size() + i) - 1);
    out.entries.row(static_cast<Eigen::Index>(i)) = class_sums(dist, labels);
  }
  return out;
}

namespace {

void enumerate_prefixes(const Backend& backend, std::vector<TokenId>& seq,
                        std::size_t remaining, double prob,
                        const LabelSpec& labels, Eigen::RowVectorXd& acc) {
  const Eigen::RowVectorXd dist = next_distribution(backend, seq);
  if (remaining == 0) {
    acc += prob * class_sums(dist, labels);
    return;
  }
  for (Eigen::Index t = 0; t < dist.size(); ++t) {
    const double p = dist[t];
    if (p == 0.0) continue;  // zero-mass branches contribute nothing
    seq.push_back(static_cast<TokenId>(t));
    enumerate_prefixes(backend, seq, remaining - 1, prob * p, labels, acc);
    seq.pop_back();
  }
}

}  // namespace

Eigen::RowVectorXd exact_marginal(const Backend& backend,
                                  std::span<const TokenId> x, std::size_t i,
                                  const LabelSpec& labels) {
  if (i < 1) throw ValidationError("exact_marginal requires i >= 1");
  const double paths =
      std::pow(static_cast<double>(backend.vocab().size), static_cast<double>(i));
  if (paths > 1e6)
    throw EnumerationTooLarge("V^i = " + std::to_string(paths) + " exceeds 1e6");
  Eigen::RowVectorXd acc =
      Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(labels.num_classes()));
  std::vector<TokenId> seq(x.begin(), x.end());
  enumerate_prefixes(backend, seq, i, 1.0, labels, acc);
  return acc;
}

Eigen::RowVectorXd calibrate(const Eigen::RowVectorXd& scores,
                             const CalibrationVector& cal) {
  if (scores.size() != cal.content_free_scores.size())
    throw ValidationError("calibration vector size mismatch");
  Eigen::RowVectorXd out = scores.cwiseQuotient(cal.content_free_scores);
  const double s = out.sum();
  if (s > 0.0)
    out /= s;
  else
    out.setConstant(1.0 / static_cast<double>(out.size()));
  return out;
}

CalibrationVector content_free_vector(const Backend& backend,
                                      const PromptTemplate& tmpl,
                                      const LabelSpec& labels,
                                      CalibrationVariant variant,
                                      std::size_t position_context) {
  std::string text;
  switch (variant) {
    case CalibrationVariant::NA:
      text = "N/A";
      break;
    case CalibrationVariant::Empty:
      text = "";
      break;
    case CalibrationVariant::Unk5: {
      const std::string& ph = backend.vocab().surface(backend.vocab().placeholder_id);
      for (int k = 0; k < 5; ++k) {
        if (!text.empty()) text += ' ';
        text += ph;
      }
      break;
    }
    case CalibrationVariant::None:
      throw ValidationError("content_free_vector requires a concrete variant");
  }
  const std::string rendered = tmpl.render_text(text);
  const auto tokens = backend.tokenize(rendered);
  CalibrationVector cal;
  cal.variant = variant;
  cal.content_free_scores =
      psp_scores(backend, tokens, position_context, labels).cwiseMax(1e-12);
  return cal;
}

}  // namespace ph3
