#include "ph3/aggregation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include <json.hpp>

namespace ph3 {

AggregationPolicy AggregationPolicy::next_token() {
  return AggregationPolicy{};
}

AggregationPolicy AggregationPolicy::skip_position(std::size_t i) {
  AggregationPolicy p;
  p.kind = Kind::SkipPosition;
  p.skip = i;
  return p;
}

AggregationPolicy AggregationPolicy::slope_position(double eta_degrees,
                                                    double intercept) {
  AggregationPolicy p;
  p.kind = Kind::SlopePosition;
  p.eta_degrees = eta_degrees;
  p.intercept = intercept;
  return p;
}

AggregationPolicy AggregationPolicy::range_vote(std::size_t eta,
                                                CalibrationVariant cal) {
  AggregationPolicy p;
  p.kind = Kind::RangeVote;
  p.eta = eta;
  p.calibration = cal;
  return p;
}

void AggregationPolicy::validate() const {
  switch (kind) {
    case Kind::SlopePosition:
      if (eta_degrees < 0.0 || eta_degrees >= 90.0)
        throw ValidationError("slope eta must be in [0, 90) degrees");
      break;
    case Kind::RangeVote:
      if (eta < 1) throw ValidationError("range-vote eta must be >= 1");
      break;
    default:
      break;
  }
}

std::size_t AggregationPolicy::max_position(std::size_t n_tokens,
                                            std::size_t m_cap) const {
  switch (kind) {
    case Kind::NextToken:
      return 0;
    case Kind::SkipPosition:
      return std::min(skip, m_cap);
    case Kind::SlopePosition:
      return ph3::slope_position(n_tokens, eta_degrees, intercept, m_cap);
    case Kind::RangeVote:
      return std::min(eta - 1, m_cap);
  }
  return 0;
}

std::string AggregationPolicy::to_json() const {
  nlohmann::ordered_json j;
  switch (kind) {
    case Kind::NextToken:
      j["policy"] = "next_token";
      break;
    case Kind::SkipPosition:
      j["policy"] = "skip_position";
      j["skip"] = skip;
      break;
    case Kind::SlopePosition:
      j["policy"] = "slope_position";
      j["eta"] = eta_degrees;
      j["intercept"] = intercept;
      break;
    case Kind::RangeVote:
      j["policy"] = "range_vote";
      j["eta"] = eta;
      j["calibration"] = ph3::to_string(calibration);
      if (score_sum_vote) j["vote"] = "score_sum";
      break;
  }
  return j.dump();
}

AggregationPolicy AggregationPolicy::from_json(const std::string& json_text) {
  auto j = nlohmann::json::parse(json_text);
  const std::string name = j.at("policy").get<std::string>();
  AggregationPolicy p;
  if (name == "next_token") {
    p = next_token();
  } else if (name == "skip_position") {
    p = skip_position(j.at("skip").get<std::size_t>());
  } else if (name == "slope_position") {
    p = slope_position(j.at("eta").get<double>(),
                       j.value("intercept", -10.0));
  } else if (name == "range_vote") {
    p = range_vote(j.at("eta").get<std::size_t>(),
                   calibration_variant_from_string(j.value("calibration", "none")));
    p.score_sum_vote = j.value("vote", std::string{}) == "score_sum";
  } else {
    throw ValidationError("unknown policy '" + name + "'");
  }
  p.validate();
  return p;
}

std::size_t slope_position(std::size_t n_tokens, double eta_degrees,
                           double intercept, std::size_t m_max) {
  if (eta_degrees < 0.0 || eta_degrees >= 90.0)
    throw ValidationError("slope eta must be in [0, 90) degrees");
  const double radians = eta_degrees * std::numbers::pi / 180.0;
  const double raw =
      std::round(std::tan(radians) * static_cast<double>(n_tokens) + intercept);
  if (raw <= 0.0) return 0;
  return std::min(static_cast<std::size_t>(raw), m_max);
}

namespace {

std::size_t row_argmax(const Eigen::RowVectorXd& row) {
  Eigen::Index best;
  row.maxCoeff(&best);
  return static_cast<std::size_t>(best);
}

}  // namespace

std::size_t range_vote(const PositionClassMatrix& matrix, std::size_t eta,
                       const std::vector<CalibrationVector>* cals,
                       bool score_sum) {
  if (eta < 1) throw ValidationError("range-vote eta must be >= 1");
  if (matrix.positions() < eta)
    throw EtaExceedsMatrix("eta " + std::to_string(eta) + " exceeds matrix with " +
                           std::to_string(matrix.positions()) + " positions");
  if (cals && cals->size() < eta)
    throw ValidationError("need one calibration vector per voting position");

  const std::size_t k = matrix.num_classes();
  std::vector<std::size_t> ballots(k, 0);
  std::vector<std::size_t> argmaxes(eta);
  Eigen::RowVectorXd score_total = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(k));
  for (std::size_t i = 0; i < eta; ++i) {
    Eigen::RowVectorXd row = matrix.row(i);
    if (cals) row = calibrate(row, (*cals)[i]);
    argmaxes[i] = row_argmax(row);
    ballots[argmaxes[i]]++;
    score_total += row;
  }

  if (score_sum) return row_argmax(score_total);

  const std::size_t best_count = *std::max_element(ballots.begin(), ballots.end());
  // tie -> the earliest position whose argmax belongs to the tied set
  for (std::size_t i = 0; i < eta; ++i)
    if (ballots[argmaxes[i]] == best_count) return argmaxes[i];
  return argmaxes[0];
}

const CalibrationVector& CalibrationCache::get(const Backend& backend,
                                              const PromptTemplate& tmpl,
                                              const LabelSpec& labels,
                                              CalibrationVariant variant,
                                              std::size_t position) {
  const Key key{tmpl.str(), variant, position};
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = entries_.find(key);
    if (it != entries_.end()) return it->second;
  }
  CalibrationVector fresh =
      content_free_vector(backend, tmpl, labels, variant, position);
  std::lock_guard<std::mutex> lock(mu_);
  auto [it, inserted] = entries_.emplace(key, std::move(fresh));
  return it->second;
}

std::size_t CalibrationCache::size() const {
  std::lock_guard<std::mutex> lock(mu_);
  return entries_.size();
}

ClassifyResult classify(const Backend& backend, std::string_view rendered_prompt,
                        const LabelSpec& labels, const AggregationPolicy& policy,
                        CalibrationCache* cache,
                        const PromptTemplate* calibration_template,
                        std::size_t placeholder_cap) {
  policy.validate();
  const auto tokens = backend.tokenize(rendered_prompt);
  if (tokens.empty())
    throw ValidationError("prompt tokenized to zero tokens");

  const std::size_t m_cap =
      std::min(placeholder_cap, backend.max_len() - std::min(backend.max_len(), tokens.size()));
  const std::size_t target = policy.max_position(tokens.size(), m_cap);
  const auto matrix = p3_matrix(backend, tokens, target, labels);

  std::size_t decision = 0;
  switch (policy.kind) {
    case AggregationPolicy::Kind::NextToken:
    case AggregationPolicy::Kind::SkipPosition:
    case AggregationPolicy::Kind::SlopePosition: {
      Eigen::Index best;
      matrix.row(target).maxCoeff(&best);
      decision = static_cast<std::size_t>(best);
      break;
    }
    case AggregationPolicy::Kind::RangeVote: {
      const std::size_t eta = std::min(policy.eta, matrix.positions());
      if (policy.calibration == CalibrationVariant::None) {
        decision = range_vote(matrix, eta, nullptr, policy.score_sum_vote);
      } else {
        const PromptTemplate null_tmpl;
        const PromptTemplate& tmpl =
            calibration_template ? *calibration_template : null_tmpl;
        std::vector<CalibrationVector> cals;
        cals.reserve(eta);
        CalibrationCache local;
        CalibrationCache& store = cache ? *cache : local;
        for (std::size_t i = 0; i < eta; ++i)
          cals.push_back(store.get(backend, tmpl, labels, policy.calibration, i));
        decision = range_vote(matrix, eta, &cals, policy.score_sum_vote);
      }
      break;
    }
  }
  return ClassifyResult{decision, matrix};
}

}  // namespace ph3
