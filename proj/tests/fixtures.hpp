#pragma once

#include <random>
#include <vector>

#include "ph3/core.hpp"
#include "ph3/tabular_lm.hpp"
#include "ph3/toy_transformer.hpp"

namespace fixtures {

// Vocab 0:<ph> 1:good 2:bad 3:movie 4:is 5:very
inline ph3::Vocab sentiment_vocab() {
  ph3::Vocab v;
  v.size = 6;
  v.placeholder_id = 0;
  v.surfaces = {"<ph>", "good", "bad", "movie", "is", "very"};
  return v;
}

inline ph3::LabelSpec sentiment_labels() {
  ph3::LabelSpec labels;
  labels.classes.push_back({"positive", {1}, {"good"}});
  labels.classes.push_back({"negative", {2}, {"bad"}});
  return labels;
}

// Order-1 LM with a seeded random stochastic transition table over every
// context (including start), rich enough for property tests.
inline ph3::TabularLM random_order1_lm(std::uint64_t seed, std::size_t vocab_size = 6,
                                       std::size_t max_len = 256) {
  ph3::Vocab v;
  v.size = vocab_size;
  v.placeholder_id = 0;
  v.surfaces.resize(vocab_size);
  v.surfaces[0] = "<ph>";
  for (std::size_t i = 1; i < vocab_size; ++i)
    v.surfaces[i] = "w" + std::to_string(i);
  ph3::TabularLM lm(std::move(v), 1, max_len);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.05, 1.0);
  auto random_row = [&] {
    Eigen::RowVectorXd row(static_cast<Eigen::Index>(vocab_size));
    for (Eigen::Index i = 0; i < row.size(); ++i) row[i] = unit(rng);
    row /= row.sum();
    // exact renormalization to satisfy the 1e-9 table invariant
    row[row.size() - 1] += 1.0 - row.sum();
    return row;
  };
  lm.set_row({ph3::TabularLM::kStart}, random_row());
  for (std::size_t t = 0; t < vocab_size; ++t)
    lm.set_row({static_cast<ph3::TokenId>(t)}, random_row());
  return lm;
}

inline ph3::ToyTransformerConfig toy_config(std::uint64_t seed = 7) {
  ph3::ToyTransformerConfig config;
  config.layers = 2;
  config.hidden = 32;
  config.heads = 4;
  config.vocab = 16;
  config.max_len = 64;
  config.placeholder_id = 0;
  config.seed = seed;
  return config;
}

inline std::vector<ph3::TokenId> random_tokens(std::mt19937_64& rng,
                                               std::size_t max_vocab,
                                               std::size_t min_len,
                                               std::size_t max_len) {
  std::uniform_int_distribution<std::size_t> len(min_len, max_len);
  std::uniform_int_distribution<ph3::TokenId> tok(
      0, static_cast<ph3::TokenId>(max_vocab - 1));
  std::vector<ph3::TokenId> out(len(rng));
  for (auto& t : out) t = tok(rng);
  return out;
}

}  // namespace fixtures
