#include <doctest.h>

#include <random>

#include "fixtures.hpp"
#include "ph3/aggregation.hpp"

using ph3::AggregationPolicy;
using ph3::CalibrationVariant;
using ph3::PositionClassMatrix;
using ph3::TokenId;

namespace {

PositionClassMatrix matrix_from(std::initializer_list<std::initializer_list<double>> rows) {
  PositionClassMatrix m;
  const auto r = static_cast<Eigen::Index>(rows.size());
  const auto c = static_cast<Eigen::Index>(rows.begin()->size());
  m.entries.resize(r, c);
  Eigen::Index i = 0;
  for (const auto& row : rows) {
    Eigen::Index j = 0;
    for (double v : row) m.entries(i, j++) = v;
    ++i;
  }
  m.placeholders = static_cast<std::size_t>(r) - 1;
  return m;
}

}  // namespace

TEST_CASE("slope position follows tan(eta) * n + b") {
  CHECK(ph3::slope_position(100, 0.0, 0.0, 512) == 0);
  CHECK(ph3::slope_position(20, 45.0, -10.0, 512) == 10);  // tan(45) = 1
  CHECK(ph3::slope_position(4, 45.0, -10.0, 512) == 0);    // clamped at 0
  CHECK(ph3::slope_position(1000, 45.0, 0.0, 512) == 512); // clamped at m_max
  CHECK_THROWS_AS(ph3::slope_position(10, 90.0, 0.0, 512), ph3::ValidationError);
}

TEST_CASE("range vote: single voter reduces to next-token argmax") {
  const auto m = matrix_from({{0.1, 0.7}, {0.9, 0.0}});
  CHECK(ph3::range_vote(m, 1) == 1);
}

TEST_CASE("range vote: plurality and tie break") {
  const auto m = matrix_from({{0.9, 0.1}, {0.1, 0.9}, {0.8, 0.2}});
  CHECK(ph3::range_vote(m, 3) == 0);  // A, B, A -> A

  const auto tied = matrix_from({{0.9, 0.1}, {0.1, 0.9}});
  CHECK(ph3::range_vote(tied, 2) == 0);  // position-0 tiebreak

  CHECK_THROWS_AS(ph3::range_vote(tied, 3), ph3::EtaExceedsMatrix);
}

TEST_CASE("range vote: unanimous positions elect their class") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> unit(0.0, 0.4);
  for (int trial = 0; trial < 100; ++trial) {
    PositionClassMatrix m;
    m.entries.resize(4, 3);
    for (Eigen::Index i = 0; i < 4; ++i)
      for (Eigen::Index j = 0; j < 3; ++j) m.entries(i, j) = unit(rng);
    const Eigen::Index winner = trial % 3;
    m.entries.col(winner).setConstant(0.9);
    CHECK(ph3::range_vote(m, 4) == static_cast<std::size_t>(winner));
  }
}

TEST_CASE("vote decisions survive positive rescaling of rows") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> unit(0.01, 1.0);
  std::uniform_real_distribution<double> scale(0.01, 50.0);
  for (int trial = 0; trial < 100; ++trial) {
    PositionClassMatrix m;
    m.entries.resize(3, 3);
    for (Eigen::Index i = 0; i < 3; ++i)
      for (Eigen::Index j = 0; j < 3; ++j) m.entries(i, j) = unit(rng);
    auto scaled = m;
    for (Eigen::Index i = 0; i < 3; ++i) scaled.entries.row(i) *= scale(rng);
    CHECK(ph3::range_vote(m, 3) == ph3::range_vote(scaled, 3));
  }
}

TEST_CASE("policy serialization round trip") {
  const auto policy = AggregationPolicy::range_vote(5, CalibrationVariant::Unk5);
  const auto json = policy.to_json();
  CHECK(json == R"({"policy":"range_vote","eta":5,"calibration":"unk5"})");
  const auto back = AggregationPolicy::from_json(json);
  CHECK(back.kind == AggregationPolicy::Kind::RangeVote);
  CHECK(back.eta == 5);
  CHECK(back.calibration == CalibrationVariant::Unk5);

  const auto slope = AggregationPolicy::slope_position(37.0, -10.0);
  const auto slope_back = AggregationPolicy::from_json(slope.to_json());
  CHECK(slope_back.eta_degrees == 37.0);
  CHECK(slope_back.intercept == -10.0);

  CHECK_THROWS_AS(AggregationPolicy::from_json(R"({"policy":"bogus"})"),
                  ph3::ValidationError);
}

TEST_CASE("zero-range policies all reproduce the next-token decision") {
  ph3::ToyTransformer toy(fixtures::toy_config());
  const auto labels = fixtures::sentiment_labels();
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const auto x = fixtures::random_tokens(rng, 16, 1, 10);
    const auto prompt = toy.detokenize(x);
    const auto ntp =
        ph3::classify(toy, prompt, labels, AggregationPolicy::next_token());
    for (const auto& policy :
         {AggregationPolicy::skip_position(0),
          AggregationPolicy::slope_position(0.0, 0.0),
          AggregationPolicy::range_vote(1)}) {
      CHECK(ph3::classify(toy, prompt, labels, policy).class_index ==
            ntp.class_index);
    }
  }
}

TEST_CASE("classify with calibration caches content-free passes") {
  ph3::ToyTransformer toy(fixtures::toy_config());
  ph3::CountingBackend counting(toy);
  const auto labels = fixtures::sentiment_labels();
  const ph3::PromptTemplate tmpl("{text} t5");
  const auto policy = AggregationPolicy::range_vote(3, CalibrationVariant::NA);
  ph3::CalibrationCache cache;

  ph3::classify(counting, tmpl.render_text("t1 t2"), labels, policy, &cache, &tmpl);
  // 1 scoring pass + one content-free pass per voting position
  CHECK(counting.forward_calls() == 1 + 3);
  CHECK(cache.size() == 3);

  counting.reset();
  ph3::classify(counting, tmpl.render_text("t2 t3"), labels, policy, &cache, &tmpl);
  CHECK(counting.forward_calls() == 1);  // cache hit, no extra passes
}

TEST_CASE("skip and slope policies read the requested position") {
  ph3::ToyTransformer toy(fixtures::toy_config());
  const auto labels = fixtures::sentiment_labels();
  const std::vector<TokenId> x{1, 2, 3, 4};
  const auto prompt = toy.detokenize(x);

  const auto skip2 = ph3::classify(toy, prompt, labels,
                                   AggregationPolicy::skip_position(2));
  const auto scores = ph3::psp_scores(toy, x, 2, labels);
  Eigen::Index best;
  scores.maxCoeff(&best);
  CHECK(skip2.class_index == static_cast<std::size_t>(best));
  CHECK(skip2.matrix.positions() == 3);
}

TEST_CASE("score-sum vote mode aggregates magnitudes") {
  // ballots say class 0 (two weak wins); scores say class 1 (one huge win)
  const auto m = matrix_from({{0.30, 0.29}, {0.30, 0.29}, {0.01, 0.99}});
  CHECK(ph3::range_vote(m, 3, nullptr, false) == 0);
  CHECK(ph3::range_vote(m, 3, nullptr, true) == 1);
}

TEST_CASE("policy validation rejects bad parameters") {
  CHECK_THROWS_AS(AggregationPolicy::slope_position(95.0, 0.0).validate(),
                  ph3::ValidationError);
  CHECK_THROWS_AS(AggregationPolicy::range_vote(0).validate(),
                  ph3::ValidationError);
}
