#pragma once

#include <memory>
#include <string>
#include <thread>

#include "ph3/backend.hpp"

namespace ph3 {

/// Client for the remote logits protocol:
///   POST /forward_full {"tokens":[ids], "append_placeholders":m} -> {"rows":[[p..]..]}
///   POST /tokenize {"text":s} -> {"tokens":[ids]}
///   GET  /vocab -> {"size":V, "placeholder_id":p, "surfaces":[...], ...}
/// Trailing placeholder tokens in a forward_full input are sent as the
/// append_placeholders count, so the wire payload never carries them.
class RemoteBackend : public Backend {
 public:
  explicit RemoteBackend(std::string base_url);
  ~RemoteBackend() override;

  const Vocab& vocab() const override { return vocab_; }
  std::size_t max_len() const override { return max_len_; }
  PrefixDistributionMatrix forward_full(
      std::span<const TokenId> tokens) const override;
  // Not representable in the wire protocol; throws RemoteUnavailable.
  Eigen::RowVectorXd empty_prefix_distribution() const override;
  std::vector<TokenId> tokenize(std::string_view text) const override;
  std::optional<FlopsShape> flops_shape() const override { return shape_; }
  std::string fingerprint() const override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::string base_url_;
  Vocab vocab_;
  std::size_t max_len_ = 4096;
  std::optional<FlopsShape> shape_;
};

/// Serves any backend over the remote logits protocol. Used by the CLI
/// `serve` subcommand and by the protocol tests.
class BackendServer {
 public:
  BackendServer(const Backend& backend, std::string host, int port);
  ~BackendServer();

  /// Starts in a background thread; returns once the server accepts requests.
  void start();
  void stop();
  /// Blocking serve loop (CLI entry point).
  void run();
  int port() const { return port_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  const Backend& backend_;
  std::string host_;
  int port_;
  std::thread thread_;
};

}  // namespace ph3
