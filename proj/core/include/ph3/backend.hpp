#pragma once

#include <atomic>
#include <cstdint>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ph3/core.hpp"

namespace ph3 {

/// Per-prefix next-token distributions from one forward pass.
/// Row i = distribution over the token following prefix (x0..xi).
struct PrefixDistributionMatrix {
  Eigen::MatrixXd rows;  // L x V, each row sums to 1

  std::size_t length() const { return static_cast<std::size_t>(rows.rows()); }
  std::size_t vocab_size() const { return static_cast<std::size_t>(rows.cols()); }
};

/// Shape parameters a transformer backend exposes for FLOPs accounting.
struct FlopsShape {
  std::size_t layers;
  std::size_t hidden;
  std::size_t vocab;
};

/// The language-model abstraction the engine runs on. Backends own their
/// tokenizer and return probabilities (softmax happens inside the backend).
class Backend {
 public:
  virtual ~Backend() = default;

  virtual const Vocab& vocab() const = 0;
  virtual std::size_t max_len() const = 0;

  /// False = harness must serialize calls to this backend.
  virtual bool supports_concurrent_calls() const { return true; }

  /// One forward pass; row i is the next-token distribution for prefix
  /// length i+1. Throws TokenOutOfRange / SequenceTooLong.
  virtual PrefixDistributionMatrix forward_full(
      std::span<const TokenId> tokens) const = 0;

  /// The start-state distribution LM(empty); what the model predicts before
  /// seeing any input token.
  virtual Eigen::RowVectorXd empty_prefix_distribution() const = 0;

  virtual std::vector<TokenId> tokenize(std::string_view text) const = 0;
  virtual std::string detokenize(std::span<const TokenId> tokens) const;

  virtual std::optional<FlopsShape> flops_shape() const { return std::nullopt; }

  /// Short human-readable identity string for reports.
  virtual std::string fingerprint() const = 0;

 protected:
  void check_input(std::span<const TokenId> tokens) const;
};

/// Draw a token from the last row of forward_full. temperature == 0 is argmax;
/// otherwise probabilities are annealed by 1/temperature. Deterministic given
/// rng_seed.
TokenId sample_next(const Backend& backend, std::span<const TokenId> tokens,
                    double temperature, std::uint64_t rng_seed);

/// Wrapper that counts forward passes (and their sequence lengths) going
/// through it. Used by the harness for run and FLOPs accounting.
class CountingBackend : public Backend {
 public:
  explicit CountingBackend(const Backend& inner) : inner_(inner) {}

  const Vocab& vocab() const override { return inner_.vocab(); }
  std::size_t max_len() const override { return inner_.max_len(); }
  bool supports_concurrent_calls() const override {
    return inner_.supports_concurrent_calls();
  }
  PrefixDistributionMatrix forward_full(
      std::span<const TokenId> tokens) const override {
    calls_.fetch_add(1, std::memory_order_relaxed);
    token_total_.fetch_add(tokens.size(), std::memory_order_relaxed);
    {
      std::lock_guard<std::mutex> lock(mu_);
      call_lengths_.push_back(tokens.size());
    }
    return inner_.forward_full(tokens);
  }
  Eigen::RowVectorXd empty_prefix_distribution() const override {
    calls_.fetch_add(1, std::memory_order_relaxed);
    std::lock_guard<std::mutex> lock(mu_);
    call_lengths_.push_back(1);  // counts as a length-1 pass
    return inner_.empty_prefix_distribution();
  }
  std::vector<TokenId> tokenize(std::string_view text) const override {
    return inner_.tokenize(text);
  }
  std::string detokenize(std::span<const TokenId> tokens) const override {
    return inner_.detokenize(tokens);
  }
  std::optional<FlopsShape> flops_shape() const override {
    return inner_.flops_shape();
  }
  std::string fingerprint() const override { return inner_.fingerprint(); }

  std::uint64_t forward_calls() const {
    return calls_.load(std::memory_order_relaxed);
  }
  std::vector<std::size_t> call_lengths() const {
    std::lock_guard<std::mutex> lock(mu_);
    return call_lengths_;
  }
  void reset() {
    calls_.store(0);
    token_total_.store(0);
    std::lock_guard<std::mutex> lock(mu_);
    call_lengths_.clear();
  }

 private:
  const Backend& inner_;
  mutable std::atomic<std::uint64_t> calls_{0};
  mutable std::atomic<std::uint64_t> token_total_{0};
  mutable std::mutex mu_;
  mutable std::vector<std::size_t> call_lengths_;
};

}  // namespace ph3
