#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ph3/backend.hpp"

namespace ph3 {

struct ToyTransformerConfig {
  std::size_t layers = 2;
  std::size_t hidden = 32;
  std::size_t heads = 4;       // must divide hidden
  std::size_t vocab = 16;
  std::size_t max_len = 64;
  TokenId placeholder_id = 0;
  std::uint64_t seed = 0;      // weight initialization seed
};

/// Untrained decoder-only transformer with seeded random weights. Strictly
/// causal: the output at position i is computed from positions <= i only,
/// so identical (config, seed, input) give bit-identical output and prefixes
/// are stable under appended suffixes. A fixed BOS token is prepended
/// internally to define the empty-prefix state.
class ToyTransformer : public Backend {
 public:
  explicit ToyTransformer(const ToyTransformerConfig& config);

  const ToyTransformerConfig& config() const { return config_; }

  // Backend interface
  const Vocab& vocab() const override { return vocab_; }
  std::size_t max_len() const override { return config_.max_len; }
  PrefixDistributionMatrix forward_full(
      std::span<const TokenId> tokens) const override;
  Eigen::RowVectorXd empty_prefix_distribution() const override;
  std::vector<TokenId> tokenize(std::string_view text) const override;
  std::optional<FlopsShape> flops_shape() const override;
  std::string fingerprint() const override;

 private:
  struct Layer {
    Eigen::VectorXd ln1_g, ln1_b, ln2_g, ln2_b;
    Eigen::MatrixXd wq, wk, wv, wo;   // h x h
    Eigen::MatrixXd w1;               // h x 4h
    Eigen::VectorXd b1;
    Eigen::MatrixXd w2;               // 4h x h
    Eigen::VectorXd b2;
  };

  // Rows of next-token distributions for the internal sequence [BOS, tokens...];
  // internal row j conditions on internal positions 0..j.
  Eigen::MatrixXd run(std::span<const TokenId> tokens) const;

  ToyTransformerConfig config_;
  Vocab vocab_;
  TokenId bos_;                       // internal id, = vocab size
  Eigen::MatrixXd tok_emb_;           // (V+1) x h
  Eigen::MatrixXd pos_emb_;           // (max_len+1) x h
  std::vector<Layer> layers_;
  Eigen::VectorXd lnf_g_, lnf_b_;
  Eigen::MatrixXd head_;              // h x V
};

}  // namespace ph3
