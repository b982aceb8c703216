#include <doctest.h>

#include <random>

#include "fixtures.hpp"
#include "ph3/engine.hpp"
#include "ph3/remote.hpp"
#include "ph3/toy_transformer.hpp"

using ph3::TokenId;

namespace {

constexpr int kPort = 18473;

struct ServerFixture {
  ph3::ToyTransformer toy{fixtures::toy_config()};
  ph3::BackendServer server{toy, "127.0.0.1", kPort};
  ServerFixture() { server.start(); }
};

}  // namespace

TEST_CASE("remote client mirrors the served backend") {
  ServerFixture fx;
  ph3::RemoteBackend remote("127.0.0.1:" + std::to_string(kPort));

  CHECK(remote.vocab().size == 16);
  CHECK(remote.vocab().placeholder_id == 0);
  CHECK(remote.max_len() == 64);
  REQUIRE(remote.flops_shape().has_value());
  CHECK(remote.flops_shape()->hidden == 32);

  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    const auto x = fixtures::random_tokens(rng, 16, 1, 12);
    const auto local = fx.toy.forward_full(x);
    const auto wire = remote.forward_full(x);
    CHECK((local.rows - wire.rows).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("remote tokenization round trips through the server") {
  ServerFixture fx;
  ph3::RemoteBackend remote("127.0.0.1:" + std::to_string(kPort));
  const auto tokens = remote.tokenize("t3 t7 mystery");
  CHECK(tokens == std::vector<TokenId>{3, 7, 0});
  CHECK(remote.detokenize(tokens) == "t3 t7 <ph>");
}

TEST_CASE("trailing placeholders travel as a count and rows cover them") {
  ServerFixture fx;
  ph3::RemoteBackend remote("127.0.0.1:" + std::to_string(kPort));
  const auto labels = fixtures::sentiment_labels();
  const std::vector<TokenId> x{3, 7, 9};
  // engine-level call: p3 through the wire equals local p3
  const auto local = ph3::p3_matrix(fx.toy, x, 4, labels);
  const auto wire = ph3::p3_matrix(remote, x, 4, labels);
  CHECK((local.entries - wire.entries).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("remote errors surface as RemoteUnavailable") {
  CHECK_THROWS_AS(ph3::RemoteBackend("127.0.0.1:1"), ph3::RemoteUnavailable);

  ServerFixture fx;
  ph3::RemoteBackend remote("127.0.0.1:" + std::to_string(kPort));
  const std::vector<TokenId> too_long(65, 1);
  CHECK_THROWS_AS(remote.forward_full(too_long), ph3::SequenceTooLong);
  CHECK_THROWS_AS(remote.empty_prefix_distribution(), ph3::RemoteUnavailable);
}
