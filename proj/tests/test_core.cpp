#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <random>

#include "fixtures.hpp"
#include "ph3/core.hpp"

using ph3::LabelSpec;
using ph3::PromptTemplate;
using ph3::Sample;

TEST_CASE("render_prompt substitutes slots verbatim") {
  Sample s;
  s.text = "great movie";
  CHECK(PromptTemplate("{text} It is").render(s) == "great movie It is");
}

TEST_CASE("null prompt is the identity on text") {
  Sample s;
  s.text = "abc";
  CHECK(PromptTemplate("{text}").render(s) == "abc");
  CHECK(PromptTemplate::null_template().str() == "{text}");
  CHECK(PromptTemplate::null_template(true).str() == "{title} {text}");
}

TEST_CASE("missing title raises MissingSlotValue") {
  Sample s;
  s.text = "body";
  CHECK_THROWS_AS(PromptTemplate("{title} {text}").render(s),
                  ph3::MissingSlotValue);
  s.title = "headline";
  CHECK(PromptTemplate("{title} {text}").render(s) == "headline body");
}

TEST_CASE("unknown slot names are a validation error") {
  CHECK_THROWS_AS(PromptTemplate("{text} {foo}"), ph3::ValidationError);
}

TEST_CASE("render is deterministic and length-additive") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> len(0, 30);
  std::uniform_int_distribution<int> ch('a', 'z');
  for (int trial = 0; trial < 200; ++trial) {
    std::string text(static_cast<std::size_t>(len(rng)), ' ');
    for (auto& c : text) c = static_cast<char>(ch(rng));
    std::string prefix(static_cast<std::size_t>(len(rng)), 'p');
    const PromptTemplate tmpl(prefix + "{text} and {text}");
    Sample s;
    s.text = text;
    const auto out = tmpl.render(s);
    CHECK(out == tmpl.render(s));
    // |out| = |template| - 2 * |"{text}"| + 2 * |value|
    CHECK(out.size() == tmpl.str().size() - 2 * 6 + 2 * text.size());
  }
}

TEST_CASE("label spec validation") {
  const auto vocab = fixtures::sentiment_vocab();
  auto labels = fixtures::sentiment_labels();
  CHECK_NOTHROW(labels.validate(vocab.size));

  SUBCASE("fewer than two classes") {
    labels.classes.pop_back();
    CHECK_THROWS_AS(labels.validate(vocab.size), ph3::ValidationError);
  }
  SUBCASE("duplicate name") {
    labels.classes[1].name = "positive";
    CHECK_THROWS_AS(labels.validate(vocab.size), ph3::ValidationError);
  }
  SUBCASE("token out of range") {
    labels.classes[1].tokens = {99};
    CHECK_THROWS_AS(labels.validate(vocab.size), ph3::ValidationError);
  }
}

TEST_CASE("overlapping class tokens rejected on random specs") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<ph3::TokenId> tok(0, 9);
  for (int trial = 0; trial < 200; ++trial) {
    LabelSpec spec;
    const ph3::TokenId shared = tok(rng);
    spec.classes.push_back({"a", {shared, tok(rng)}, {"a"}});
    spec.classes.push_back({"b", {shared}, {"b"}});
    CHECK_THROWS_AS(spec.validate(10), ph3::ValidationError);
  }
}

TEST_CASE("vocab invariants") {
  auto vocab = fixtures::sentiment_vocab();
  CHECK_NOTHROW(vocab.validate());
  vocab.placeholder_id = 17;
  CHECK_THROWS_AS(vocab.validate(), ph3::ValidationError);
  vocab.placeholder_id = 0;
  vocab.surfaces.pop_back();
  CHECK_THROWS_AS(vocab.validate(), ph3::ValidationError);
}

TEST_CASE("label spec JSON round trip preserves class order") {
  const std::string json = R"({
    "world": {"tokens": [3], "surfaces": ["world"]},
    "sports": {"tokens": [1, 2], "surfaces": ["sports", "game"]}
  })";
  const auto spec = ph3::parse_label_spec(json);
  REQUIRE(spec.num_classes() == 2);
  CHECK(spec.classes[0].name == "world");
  CHECK(spec.classes[1].name == "sports");
  CHECK(spec.classes[1].tokens == std::vector<ph3::TokenId>{1, 2});
  CHECK(spec.index_of("sports") == 1);
  CHECK(!spec.index_of("none"));
}

TEST_CASE("prompt set loader maps blank lines to the null template") {
  const std::string path = "prompts_test.txt";
  {
    std::ofstream out(path);
    out << "{text} It was\n\nReview: {text} Sentiment:\n";
  }
  const auto templates = ph3::load_prompt_set(path);
  REQUIRE(templates.size() == 3);
  CHECK(templates[0].str() == "{text} It was");
  CHECK(templates[1].str() == "{text}");
  CHECK(templates[2].str() == "Review: {text} Sentiment:");
  std::remove(path.c_str());
}
