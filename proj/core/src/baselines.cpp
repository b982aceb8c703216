#include "ph3/baselines.hpp"

#include <algorithm>
#include <cctype>
#include <set>

namespace ph3 {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

// First class whose surface occurs in `text`; earliest occurrence wins,
// class order breaks exact position ties.
std::optional<std::size_t> match_class(const std::string& text,
                                       const LabelSpec& labels) {
  const std::string haystack = lower(text);
  std::optional<std::size_t> best;
  std::size_t best_pos = std::string::npos;
  for (std::size_t c = 0; c < labels.num_classes(); ++c) {
    for (const auto& surface : labels.classes[c].surfaces) {
      const auto pos = haystack.find(lower(surface));
      if (pos != std::string::npos && pos < best_pos) {
        best_pos = pos;
        best = c;
      }
    }
  }
  return best;
}

}  // namespace

GenerationOutcome generate_classify(const Backend& backend,
                                    std::span<const TokenId> prompt_tokens,
                                    const LabelSpec& labels,
                                    std::size_t max_tokens,
                                    DecodingMode mode) {
  if (max_tokens < 1) throw ValidationError("max_tokens must be >= 1");
  GenerationOutcome out;
  std::vector<TokenId> seq(prompt_tokens.begin(), prompt_tokens.end());
  for (std::size_t step = 0; step < max_tokens; ++step) {
    const double temp = mode.greedy ? 0.0 : mode.temperature;
    const TokenId next = sample_next(backend, seq, temp, mode.seed + step);
    seq.push_back(next);
    out.generated_tokens.push_back(next);
    out.tokens_consumed = step + 1;
    const std::string text = backend.detokenize(out.generated_tokens);
    if (auto matched = match_class(text, labels)) {
      out.matched_class = matched;
      return out;
    }
  }
  out.truncated = true;
  return out;
}

SelfConsistencyResult self_consistency(const Backend& backend,
                                       std::span<const TokenId> prompt_tokens,
                                       const LabelSpec& labels,
                                       std::size_t ways,
                                       double temperature,
                                       std::span<const std::uint64_t> seeds,
                                       std::size_t max_tokens) {
  if (ways < 1) throw ValidationError("self_consistency needs ways >= 1");
  if (seeds.size() < ways)
    throw ValidationError("need one seed per way");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() < ways)
    throw ValidationError("seeds must be distinct");

  SelfConsistencyResult result;
  std::vector<std::size_t> votes(labels.num_classes(), 0);
  for (std::size_t w = 0; w < ways; ++w) {
    auto outcome = generate_classify(backend, prompt_tokens, labels, max_tokens,
                                     DecodingMode::sampled(temperature, seeds[w]));
    result.total_runs += outcome.tokens_consumed;
    if (outcome.matched_class) votes[*outcome.matched_class]++;
    result.ways.push_back(std::move(outcome));
  }

  const std::size_t best = *std::max_element(votes.begin(), votes.end());
  if (best == 0) return result;  // all abstained -> Undecided
  std::size_t winner = 0, winners = 0;
  for (std::size_t c = 0; c < votes.size(); ++c) {
    if (votes[c] == best) {
      winner = c;
      ++winners;
    }
  }
  if (winners == 1) result.decision = winner;  // tie -> Undecided
  return result;
}

}  // namespace ph3
