#include <doctest.h>

#include <vector>

#include "fixtures.hpp"
#include "ph3/baselines.hpp"
#include "ph3/engine.hpp"

using ph3::TabularLM;
using ph3::TokenId;

namespace {

// Deterministic chain: prompt-final token 5 -> 4 -> 3 -> 1 ("good"); the
// non-discriminative continuation "is movie" precedes the class surface.
TabularLM scripted_chain() {
  auto lm = TabularLM(fixtures::sentiment_vocab(), 1);
  lm.set_row_onehot({TabularLM::kStart}, 5);
  lm.set_row_onehot({5}, 4);
  lm.set_row_onehot({4}, 3);
  lm.set_row_onehot({3}, 1);
  lm.set_row_onehot({1}, 1);
  lm.set_row_onehot({2}, 2);
  lm.set_row_onehot({0}, 0);
  return lm;
}

}  // namespace

TEST_CASE("immediate surface match consumes one run") {
  auto lm = scripted_chain();
  const auto labels = fixtures::sentiment_labels();
  const std::vector<TokenId> prompt{3};  // 3 -> 1 = "good" right away
  const auto outcome = ph3::generate_classify(lm, prompt, labels);
  CHECK(outcome.matched_class == 0);
  CHECK(outcome.tokens_consumed == 1);
  CHECK(!outcome.truncated);
}

TEST_CASE("non-discriminative prefix is generated through") {
  auto lm = scripted_chain();
  const auto labels = fixtures::sentiment_labels();
  const std::vector<TokenId> prompt{5};  // "very is movie good"-style path
  const auto outcome = ph3::generate_classify(lm, prompt, labels);
  CHECK(outcome.matched_class == 0);
  CHECK(outcome.tokens_consumed == 3);
  CHECK(outcome.generated_tokens == std::vector<TokenId>{4, 3, 1});
}

TEST_CASE("never-matching backend truncates at the cap") {
  auto lm = scripted_chain();
  const auto labels = fixtures::sentiment_labels();
  const std::vector<TokenId> prompt{0};  // placeholder self-loop, no surface
  const auto outcome = ph3::generate_classify(lm, prompt, labels);
  CHECK(!outcome.matched_class);
  CHECK(outcome.tokens_consumed == 50);
  CHECK(outcome.truncated);

  const auto shorter = ph3::generate_classify(lm, prompt, labels, 7);
  CHECK(shorter.tokens_consumed == 7);
  CHECK(shorter.truncated);
}

TEST_CASE("surface matching is case-insensitive substring") {
  auto lm = TabularLM(fixtures::sentiment_vocab(), 1);
  lm.set_uniform_default();
  ph3::LabelSpec labels;
  labels.classes.push_back({"positive", {1}, {"GOOD"}});
  labels.classes.push_back({"negative", {2}, {"BAD"}});
  auto chain = scripted_chain();
  const std::vector<TokenId> prompt{3};
  const auto outcome = ph3::generate_classify(chain, prompt, labels);
  CHECK(outcome.matched_class == 0);
}

TEST_CASE("self-consistency plurality and degenerate single way") {
  auto lm = scripted_chain();
  const auto labels = fixtures::sentiment_labels();
  const std::vector<TokenId> prompt{5};
  const std::vector<std::uint64_t> seeds{1, 2, 3};
  // deterministic chain: every way agrees, total runs = 3x single way
  const auto result = ph3::self_consistency(lm, prompt, labels, 3, 1.0, seeds);
  CHECK(result.decision == 0);
  CHECK(result.total_runs == 9);

  const std::vector<std::uint64_t> one_seed{7};
  const auto single = ph3::self_consistency(lm, prompt, labels, 1, 0.0, one_seed);
  const auto greedy = ph3::generate_classify(lm, prompt, labels);
  CHECK(single.decision == greedy.matched_class);
  CHECK(single.total_runs == greedy.tokens_consumed);
}

TEST_CASE("self-consistency abstentions and undecided outcomes") {
  auto lm = scripted_chain();
  const auto labels = fixtures::sentiment_labels();
  const std::vector<std::uint64_t> seeds{1, 2, 3};
  // all ways loop on the placeholder: everyone abstains
  const std::vector<TokenId> hopeless{0};
  const auto result = ph3::self_consistency(lm, hopeless, labels, 3, 1.0, seeds);
  CHECK(!result.decision);
  CHECK(result.total_runs == 150);

  CHECK_THROWS_AS(
      ph3::self_consistency(lm, hopeless, labels, 3, 1.0,
                            std::vector<std::uint64_t>{1, 1, 2}),
      ph3::ValidationError);
}

TEST_CASE("run-count ordering: p3 = 1 << gen << 3-way sc") {
  auto lm = scripted_chain();
  const auto labels = fixtures::sentiment_labels();
  const std::vector<TokenId> prompt{5};

  ph3::CountingBackend counting(lm);
  ph3::p3_matrix(counting, prompt, 3, labels);
  const auto p3_runs = counting.forward_calls();

  const auto gen_runs = ph3::generate_classify(lm, prompt, labels).tokens_consumed;
  const std::vector<std::uint64_t> seeds{1, 2, 3};
  const auto sc_runs =
      ph3::self_consistency(lm, prompt, labels, 3, 1.0, seeds).total_runs;

  CHECK(p3_runs == 1);
  CHECK(gen_runs > p3_runs);
  CHECK(sc_runs == 3 * gen_runs);
}
