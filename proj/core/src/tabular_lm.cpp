#include "ph3/tabular_lm.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace ph3 {

TabularLM::TabularLM(Vocab vocab, std::size_t order, std::size_t max_len)
    : vocab_(std::move(vocab)), order_(order), max_len_(max_len) {
  vocab_.validate();
  if (order_ < 1) throw ValidationError("tabular LM order must be >= 1");
  for (std::size_t i = 0; i < vocab_.surfaces.size(); ++i) {
    const auto& s = vocab_.surfaces[i];
    if (!s.empty()) word_to_id_.emplace(s, static_cast<TokenId>(i));
  }
}

void TabularLM::check_dist(const Eigen::RowVectorXd& dist) const {
  if (static_cast<std::size_t>(dist.size()) != vocab_.size)
    throw ValidationError("distribution size != vocab size");
  if (std::abs(dist.sum() - 1.0) > 1e-9)
    throw ValidationError("distribution does not sum to 1 within 1e-9");
  if ((dist.array() < 0.0).any())
    throw ValidationError("negative probability in distribution");
}

void TabularLM::set_row(const Context& ctx, Eigen::RowVectorXd dist) {
  if (ctx.size() != order_) throw ValidationError("context length != order");
  check_dist(dist);
  table_[ctx] = std::move(dist);
}

void TabularLM::set_row_onehot(const Context& ctx, TokenId next) {
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(vocab_.size));
  row[next] = 1.0;
  set_row(ctx, std::move(row));
}

void TabularLM::set_default_row(Eigen::RowVectorXd dist) {
  check_dist(dist);
  default_row_ = std::move(dist);
}

void TabularLM::set_uniform_default() {
  const auto V = static_cast<Eigen::Index>(vocab_.size);
  set_default_row(Eigen::RowVectorXd::Constant(V, 1.0 / static_cast<double>(V)));
}

const Eigen::RowVectorXd& TabularLM::row_for(const Context& ctx) const {
  auto it = table_.find(ctx);
  if (it != table_.end()) return it->second;
  if (default_row_) return *default_row_;
  std::ostringstream ctx_str;
  for (TokenId t : ctx) ctx_str << t << ' ';
  throw Error("tabular LM: no entry for context [" + ctx_str.str() + "]");
}

TabularLM::Context TabularLM::context_for(std::span<const TokenId> tokens,
                                          std::size_t prefix_len) const {
  Context ctx(order_, kStart);
  for (std::size_t j = 0; j < order_ && j < prefix_len; ++j)
    ctx[order_ - 1 - j] = tokens[prefix_len - 1 - j];
  return ctx;
}

PrefixDistributionMatrix TabularLM::forward_full(
    std::span<const TokenId> tokens) const {
  check_input(tokens);
  PrefixDistributionMatrix out;
  out.rows.resize(static_cast<Eigen::Index>(tokens.size()),
                  static_cast<Eigen::Index>(vocab_.size));
  for (std::size_t i = 0; i < tokens.size(); ++i)
    out.rows.row(static_cast<Eigen::Index>(i)) = row_for(context_for(tokens, i + 1));
  return out;
}

Eigen::RowVectorXd TabularLM::empty_prefix_distribution() const {
  return row_for(Context(order_, kStart));
}

std::vector<TokenId> TabularLM::tokenize(std::string_view text) const {
  std::vector<TokenId> out;
  std::istringstream in{std::string(text)};
  std::string word;
  while (in >> word) {
    auto it = word_to_id_.find(word);
    out.push_back(it != word_to_id_.end() ? it->second : vocab_.placeholder_id);
  }
  return out;
}

std::string TabularLM::fingerprint() const {
  return "tabular(order=" + std::to_string(order_) +
         ",V=" + std::to_string(vocab_.size) +
         ",rows=" + std::to_string(table_.size()) + ")";
}

TabularLM TabularLM::from_json(const std::string& json_text) {
  auto j = nlohmann::json::parse(json_text);
  Vocab vocab;
  vocab.surfaces = j.at("surfaces").get<std::vector<std::string>>();
  vocab.size = vocab.surfaces.size();
  vocab.placeholder_id = j.at("placeholder").get<TokenId>();
  TabularLM lm(std::move(vocab), j.at("order").get<std::size_t>(),
               j.value("max_len", std::size_t{4096}));
  if (j.contains("rows")) {
    for (auto& [key, probs] : j.at("rows").items()) {
      Context ctx;
      std::istringstream in(key);
      TokenId t;
      while (in >> t) ctx.push_back(t);
      Eigen::RowVectorXd row(static_cast<Eigen::Index>(probs.size()));
      for (std::size_t i = 0; i < probs.size(); ++i) row[static_cast<Eigen::Index>(i)] = probs[i].get<double>();
      lm.set_row(ctx, std::move(row));
    }
  }
  if (j.value("default", std::string{}) == "uniform") lm.set_uniform_default();
  return lm;
}

TabularLM TabularLM::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open tabular LM config: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

}  // namespace ph3
