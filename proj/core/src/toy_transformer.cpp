#include "ph3/toy_transformer.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace ph3 {

namespace {

Eigen::VectorXd layer_norm(const Eigen::VectorXd& x, const Eigen::VectorXd& g,
                           const Eigen::VectorXd& b) {
  const double mean = x.mean();
  const Eigen::ArrayXd centered = x.array() - mean;
  const double var = centered.square().mean();
  const double inv = 1.0 / std::sqrt(var + 1e-5);
  return (centered * inv * g.array() + b.array()).matrix();
}

Eigen::VectorXd gelu(const Eigen::VectorXd& x) {
  // tanh approximation
  constexpr double k = 0.7978845608028654;  // sqrt(2/pi)
  Eigen::VectorXd out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double v = x[i];
    out[i] = 0.5 * v * (1.0 + std::tanh(k * (v + 0.044715 * v * v * v)));
  }
  return out;
}

Eigen::RowVectorXd softmax_row(const Eigen::RowVectorXd& logits) {
  const double m = logits.maxCoeff();
  Eigen::RowVectorXd e = (logits.array() - m).exp().matrix();
  return e / e.sum();
}

}  // namespace

ToyTransformer::ToyTransformer(const ToyTransformerConfig& config)
    : config_(config) {
  if (config_.hidden == 0 || config_.heads == 0 || config_.hidden % config_.heads != 0)
    throw ValidationError("heads must divide hidden size");
  if (config_.vocab < 2) throw ValidationError("vocab too small");

  vocab_.size = config_.vocab;
  vocab_.placeholder_id = config_.placeholder_id;
  vocab_.surfaces.resize(config_.vocab);
  for (std::size_t i = 0; i < config_.vocab; ++i)
    vocab_.surfaces[i] = "t" + std::to_string(i);
  vocab_.surfaces[static_cast<std::size_t>(config_.placeholder_id)] = "<ph>";
  vocab_.validate();
  bos_ = static_cast<TokenId>(config_.vocab);

  // All weights drawn in a fixed order from one seeded generator:
  // scaled uniform U(-1/sqrt(h), 1/sqrt(h)) for matrices, LN gains near 1.
  std::mt19937_64 rng(config_.seed);
  const double scale = 1.0 / std::sqrt(static_cast<double>(config_.hidden));
  std::uniform_real_distribution<double> w(-scale, scale);
  std::uniform_real_distribution<double> g(0.9, 1.1);
  auto fill = [&](Eigen::MatrixXd& m, std::size_t r, std::size_t c) {
    m.resize(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = w(rng);
  };
  auto fill_vec = [&](Eigen::VectorXd& v, std::size_t n) {
    v.resize(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = w(rng);
  };
  auto fill_gain = [&](Eigen::VectorXd& v, std::size_t n) {
    v.resize(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = g(rng);
  };

  const std::size_t h = config_.hidden;
  fill(tok_emb_, config_.vocab + 1, h);
  fill(pos_emb_, config_.max_len + 1, h);
  layers_.resize(config_.layers);
  for (auto& layer : layers_) {
    fill_gain(layer.ln1_g, h);
    fill_vec(layer.ln1_b, h);
    fill(layer.wq, h, h);
    fill(layer.wk, h, h);
    fill(layer.wv, h, h);
    fill(layer.wo, h, h);
    fill_gain(layer.ln2_g, h);
    fill_vec(layer.ln2_b, h);
    fill(layer.w1, h, 4 * h);
    fill_vec(layer.b1, 4 * h);
    fill(layer.w2, 4 * h, h);
    fill_vec(layer.b2, h);
  }
  fill_gain(lnf_g_, h);
  fill_vec(lnf_b_, h);
  fill(head_, h, config_.vocab);
}

Eigen::MatrixXd ToyTransformer::run(std::span<const TokenId> tokens) const {
  const std::size_t n = tokens.size() + 1;  // BOS prepended
  const std::size_t h = config_.hidden;
  const std::size_t heads = config_.heads;
  const std::size_t hd = h / heads;
  const double att_scale = 1.0 / std::sqrt(static_cast<double>(hd));

  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(h));
  x.row(0) = tok_emb_.row(bos_) + pos_emb_.row(0);
  for (std::size_t i = 0; i < tokens.size(); ++i)
    x.row(static_cast<Eigen::Index>(i + 1)) =
        tok_emb_.row(tokens[i]) + pos_emb_.row(static_cast<Eigen::Index>(i + 1));

  for (const auto& layer : layers_) {
    Eigen::MatrixXd normed(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      normed.row(i) = layer_norm(x.row(i).transpose(), layer.ln1_g, layer.ln1_b).transpose();
    const Eigen::MatrixXd q = normed * layer.wq;
    const Eigen::MatrixXd k = normed * layer.wk;
    const Eigen::MatrixXd v = normed * layer.wv;

    Eigen::MatrixXd att_out = Eigen::MatrixXd::Zero(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      for (std::size_t head = 0; head < heads; ++head) {
        const auto col0 = static_cast<Eigen::Index>(head * hd);
        const auto width = static_cast<Eigen::Index>(hd);
        // attend to positions <= i only
        Eigen::VectorXd scores(i + 1);
        for (Eigen::Index j = 0; j <= i; ++j)
          scores[j] = q.row(i).segment(col0, width)
                          .dot(k.row(j).segment(col0, width)) * att_scale;
        const double m = scores.maxCoeff();
        Eigen::ArrayXd e = (scores.array() - m).exp();
        e /= e.sum();
        for (Eigen::Index j = 0; j <= i; ++j)
          att_out.row(i).segment(col0, width) += e[j] * v.row(j).segment(col0, width);
      }
    }
    x += att_out * layer.wo;

    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const Eigen::VectorXd normed2 =
          layer_norm(x.row(i).transpose(), layer.ln2_g, layer.ln2_b);
      const Eigen::VectorXd hidden =
          gelu(layer.w1.transpose() * normed2 + layer.b1);
      x.row(i) += (layer.w2.transpose() * hidden + layer.b2).transpose();
    }
  }

  Eigen::MatrixXd probs(static_cast<Eigen::Index>(n),
                        static_cast<Eigen::Index>(config_.vocab));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const Eigen::VectorXd fin = layer_norm(x.row(i).transpose(), lnf_g_, lnf_b_);
    probs.row(i) = softmax_row((fin.transpose() * head_));
  }
  return probs;
}

PrefixDistributionMatrix ToyTransformer::forward_full(
    std::span<const TokenId> tokens) const {
  check_input(tokens);
  const Eigen::MatrixXd internal = run(tokens);
  PrefixDistributionMatrix out;
  // drop the BOS-only row; row i conditions on x0..xi
  out.rows = internal.bottomRows(internal.rows() - 1);
  return out;
}

Eigen::RowVectorXd ToyTransformer::empty_prefix_distribution() const {
  return run({}).row(0);
}

std::vector<TokenId> ToyTransformer::tokenize(std::string_view text) const {
  std::vector<TokenId> out;
  std::istringstream in{std::string(text)};
  std::string word;
  while (in >> word) {
    TokenId id = vocab_.placeholder_id;
    for (std::size_t i = 0; i < vocab_.surfaces.size(); ++i) {
      if (vocab_.surfaces[i] == word) {
        id = static_cast<TokenId>(i);
        break;
      }
    }
    out.push_back(id);
  }
  return out;
}

std::optional<FlopsShape> ToyTransformer::flops_shape() const {
  return FlopsShape{config_.layers, config_.hidden, config_.vocab};
}

std::string ToyTransformer::fingerprint() const {
  std::ostringstream out;
  out << "toy(l=" << config_.layers << ",h=" << config_.hidden
      << ",heads=" << config_.heads << ",V=" << config_.vocab
      << ",max_len=" << config_.max_len << ",seed=" << config_.seed << ")";
  return out.str();
}

}  // namespace ph3
