#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ph3/aggregation.hpp"
#include "ph3/backend.hpp"
#include "ph3/core.hpp"

namespace ph3 {

std::vector<Sample> load_dataset(const std::string& path,
                                 const LabelSpec* labels = nullptr);

/// Population standard deviation (divisor = count).
double cross_prompt_std(std::span<const double> values);

/// Shape parameters of the transformer FLOPs formula.
struct FlopsParams {
  std::uint64_t batch = 1;
  std::uint64_t seq = 1;
  std::uint64_t hidden = 1;
  std::uint64_t layers = 1;
  std::uint64_t vocab = 1;
};

/// l * (24*B*s*h^2 + 4*B*s^2*h) + 2*B*s*h*V, exactly; throws Error on
/// uint64 overflow (evaluated in 128-bit arithmetic).
std::uint64_t flops_estimate(const FlopsParams& p);

enum class Method { Ntp, Psp, P3, Gen, Sc };
std::string to_string(Method m);
Method method_from_string(std::string_view s);

struct RunSpec {
  Method method = Method::P3;
  AggregationPolicy policy;        // ntp/psp/p3
  std::size_t max_tokens = 50;     // gen/sc generation cap
  std::size_t ways = 3;            // sc
  double temperature = 1.0;        // sc
  std::uint64_t seed = 0;
  std::size_t sample_cap = 0;      // 0 = all samples
  std::size_t jobs = 1;
  std::size_t placeholder_cap = 512;
};

struct PromptResult {
  std::size_t template_id = 0;
  double accuracy = 0.0;
  double avg_runs = 0.0;
  double avg_flops = 0.0;
};

struct EvaluationReport {
  std::string method;
  std::string policy_json;  // "{}" for gen/sc
  std::vector<PromptResult> per_prompt;
  double mean_accuracy = 0.0;
  double cross_prompt_std = 0.0;
  std::string backend;
  std::size_t n_samples = 0;
};

bool operator==(const PromptResult& a, const PromptResult& b);
bool operator==(const EvaluationReport& a, const EvaluationReport& b);

/// Sweep every template over every labeled sample. Undecided outcomes count
/// as incorrect. Deterministic given the RunSpec seed; per-sample work may
/// run on `jobs` threads when the backend allows concurrent calls.
EvaluationReport evaluate(const Backend& backend,
                          std::span<const PromptTemplate> templates,
                          std::span<const Sample> samples,
                          const LabelSpec& labels, const RunSpec& spec);

std::string serialize_report_json(const EvaluationReport& report);
std::string serialize_report_csv(const EvaluationReport& report);
EvaluationReport parse_report_json(const std::string& json_text);

void emit_report(const EvaluationReport& report, const std::string& path,
                 const std::string& format /* "json" | "csv" */);

}  // namespace ph3
