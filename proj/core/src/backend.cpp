#include "ph3/backend.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace ph3 {

void Backend::check_input(std::span<const TokenId> tokens) const {
  if (tokens.empty()) throw ValidationError("forward_full: empty input");
  if (tokens.size() > max_len())
    throw SequenceTooLong("input length " + std::to_string(tokens.size()) +
                          " exceeds max_len " + std::to_string(max_len()));
  const auto V = static_cast<TokenId>(vocab().size);
  for (TokenId t : tokens)
    if (t < 0 || t >= V)
      throw TokenOutOfRange("token " + std::to_string(t) + " >= vocab size " +
                            std::to_string(V));
}

std::string Backend::detokenize(std::span<const TokenId> tokens) const {
  std::ostringstream out;
  bool first = true;
  for (TokenId t : tokens) {
    if (!first) out << ' ';
    out << vocab().surface(t);
    first = false;
  }
  return out.str();
}

TokenId sample_next(const Backend& backend, std::span<const TokenId> tokens,
                    double temperature, std::uint64_t rng_seed) {
  if (temperature < 0.0)
    throw ValidationError("temperature must be >= 0");
  const auto matrix = backend.forward_full(tokens);
  const Eigen::RowVectorXd row = matrix.rows.row(matrix.rows.rows() - 1);

  if (temperature == 0.0) {
    Eigen::Index best;
    row.maxCoeff(&best);
    return static_cast<TokenId>(best);
  }

  Eigen::RowVectorXd weights = row.cwiseMax(0.0);
  if (temperature != 1.0)
    weights = weights.array().pow(1.0 / temperature).matrix();
  const double total = weights.sum();
  if (total <= 0.0) throw Error("sample_next: degenerate distribution");

  std::mt19937_64 rng(rng_seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double u = unit(rng) * total;
  double acc = 0.0;
  for (Eigen::Index t = 0; t < weights.size(); ++t) {
    acc += weights[t];
    if (u <= acc) return static_cast<TokenId>(t);
  }
  return static_cast<TokenId>(weights.size() - 1);
}

}  // namespace ph3
