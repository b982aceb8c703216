#pragma once

#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "ph3/backend.hpp"

namespace ph3 {

/// Exact n-gram language model backed by an explicit probability table.
/// Contexts shorter than the order are padded on the left with a reserved
/// start symbol. Deterministic desk-scale substrate for oracle tests.
class TabularLM : public Backend {
 public:
  /// Start-of-sequence padding symbol, never a valid input token.
  static constexpr TokenId kStart = -1;
  using Context = std::vector<TokenId>;  // exactly `order` entries

  TabularLM(Vocab vocab, std::size_t order, std::size_t max_len = 4096);

  /// Stores P(. | ctx); the row must sum to 1 within 1e-9.
  void set_row(const Context& ctx, Eigen::RowVectorXd dist);
  void set_row_onehot(const Context& ctx, TokenId next);
  /// Fallback row for contexts without an explicit entry. Without it a
  /// missing context is an error.
  void set_default_row(Eigen::RowVectorXd dist);
  void set_uniform_default();

  std::size_t order() const { return order_; }
  const Eigen::RowVectorXd& row_for(const Context& ctx) const;

  // Backend interface
  const Vocab& vocab() const override { return vocab_; }
  std::size_t max_len() const override { return max_len_; }
  PrefixDistributionMatrix forward_full(
      std::span<const TokenId> tokens) const override;
  Eigen::RowVectorXd empty_prefix_distribution() const override;
  std::vector<TokenId> tokenize(std::string_view text) const override;
  std::string fingerprint() const override;

  /// {"order":k, "max_len":n, "placeholder":id, "surfaces":[...],
  ///  "rows":{"<space-joined ids, -1 = start>":[probs]}, "default":"uniform"}
  static TabularLM from_json(const std::string& json_text);
  static TabularLM from_json_file(const std::string& path);

 private:
  Context context_for(std::span<const TokenId> tokens, std::size_t prefix_len) const;
  void check_dist(const Eigen::RowVectorXd& dist) const;

  Vocab vocab_;
  std::size_t order_;
  std::size_t max_len_;
  std::map<Context, Eigen::RowVectorXd> table_;
  std::optional<Eigen::RowVectorXd> default_row_;
  std::unordered_map<std::string, TokenId> word_to_id_;
};

}  // namespace ph3
