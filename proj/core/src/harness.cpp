#include "ph3/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "ph3/baselines.hpp"

namespace ph3 {

std::vector<Sample> load_dataset(const std::string& path,
                                 const LabelSpec* labels) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset: " + path);
  std::vector<Sample> samples;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw MalformedLine(line_no, e.what());
    }
    if (!j.is_object() || !j.contains("text") || !j["text"].is_string())
      throw MalformedLine(line_no, "expected object with string field 'text'");
    Sample s;
    s.text = j["text"].get<std::string>();
    if (j.contains("title")) s.title = j["title"].get<std::string>();
    if (j.contains("label")) {
      s.gold_label = j["label"].get<std::string>();
      if (labels && !labels->index_of(*s.gold_label))
        throw UnknownLabel(line_no, *s.gold_label);
    }
    samples.push_back(std::move(s));
  }
  return samples;
}

double cross_prompt_std(std::span<const double> values) {
  if (values.empty()) throw ValidationError("cross_prompt_std of empty list");
  const double mean =
      std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  double acc = 0.0;
  for (double v : values) acc += (v - mean) * (v - mean);
  return std::sqrt(acc / static_cast<double>(values.size()));
}

std::uint64_t flops_estimate(const FlopsParams& p) {
  using U = unsigned __int128;
  const U B = p.batch, s = p.seq, h = p.hidden, l = p.layers, V = p.vocab;
  const U total = l * (24 * B * s * h * h + 4 * B * s * s * h) + 2 * B * s * h * V;
  if (total > static_cast<U>(std::numeric_limits<std::uint64_t>::max()))
    throw Error("flops_estimate overflow");
  return static_cast<std::uint64_t>(total);
}

std::string to_string(Method m) {
  switch (m) {
    case Method::Ntp: return "ntp";
    case Method::Psp: return "psp";
    case Method::P3: return "p3";
    case Method::Gen: return "gen";
    case Method::Sc: return "sc";
  }
  return "p3";
}

Method method_from_string(std::string_view s) {
  if (s == "ntp") return Method::Ntp;
  if (s == "psp") return Method::Psp;
  if (s == "p3") return Method::P3;
  if (s == "gen") return Method::Gen;
  if (s == "sc") return Method::Sc;
  throw ValidationError("unknown method '" + std::string(s) + "'");
}

bool operator==(const PromptResult& a, const PromptResult& b) {
  return a.template_id == b.template_id && a.accuracy == b.accuracy &&
         a.avg_runs == b.avg_runs && a.avg_flops == b.avg_flops;
}

bool operator==(const EvaluationReport& a, const EvaluationReport& b) {
  return a.method == b.method && a.policy_json == b.policy_json &&
         a.per_prompt == b.per_prompt && a.mean_accuracy == b.mean_accuracy &&
         a.cross_prompt_std == b.cross_prompt_std && a.backend == b.backend &&
         a.n_samples == b.n_samples;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

struct SampleOutcome {
  bool correct = false;
  std::uint64_t runs = 0;
  std::uint64_t flops = 0;
};

SampleOutcome evaluate_one(const Backend& shared, const PromptTemplate& tmpl,
                           const Sample& sample, const LabelSpec& labels,
                           const RunSpec& spec, CalibrationCache& cache,
                           std::uint64_t sample_seed) {
  CountingBackend counting(shared);
  std::optional<std::size_t> decision;

  switch (spec.method) {
    case Method::Ntp: {
      decision = classify(counting, tmpl.render(sample), labels,
                          AggregationPolicy::next_token(), &cache, &tmpl,
                          spec.placeholder_cap)
                     .class_index;
      break;
    }
    case Method::Psp:
    case Method::P3: {
      decision = classify(counting, tmpl.render(sample), labels, spec.policy,
                          &cache, &tmpl, spec.placeholder_cap)
                     .class_index;
      break;
    }
    case Method::Gen: {
      const auto tokens = counting.tokenize(tmpl.render(sample));
      const auto outcome =
          generate_classify(counting, tokens, labels, spec.max_tokens);
      decision = outcome.matched_class;
      break;
    }
    case Method::Sc: {
      const auto tokens = counting.tokenize(tmpl.render(sample));
      std::vector<std::uint64_t> seeds(spec.ways);
      for (std::size_t w = 0; w < spec.ways; ++w)
        seeds[w] = splitmix64(sample_seed ^ (0x5eedULL + w));
      const auto result =
          self_consistency(counting, tokens, labels, spec.ways,
                           spec.temperature, seeds, spec.max_tokens);
      decision = result.decision;
      break;
    }
  }

  SampleOutcome out;
  out.runs = counting.forward_calls();
  if (const auto shape = counting.flops_shape()) {
    for (std::size_t len : counting.call_lengths())
      out.flops += flops_estimate(
          {1, len, shape->hidden, shape->layers, shape->vocab});
  }
  const auto gold = labels.index_of(*sample.gold_label);
  out.correct = decision && gold && *decision == *gold;
  return out;
}

}  // namespace

EvaluationReport evaluate(const Backend& backend,
                          std::span<const PromptTemplate> templates,
                          std::span<const Sample> samples,
                          const LabelSpec& labels, const RunSpec& spec) {
  if (templates.empty()) throw ValidationError("evaluate: no templates");
  std::vector<const Sample*> labeled;
  for (const auto& s : samples)
    if (s.gold_label) labeled.push_back(&s);
  if (spec.sample_cap > 0 && labeled.size() > spec.sample_cap)
    labeled.resize(spec.sample_cap);
  if (labeled.empty()) throw ValidationError("evaluate: no labeled samples");

  RunSpec effective = spec;
  if (spec.method == Method::Ntp)
    effective.policy = AggregationPolicy::next_token();
  effective.policy.validate();

  EvaluationReport report;
  report.method = to_string(spec.method);
  const bool has_policy = spec.method == Method::Ntp ||
                          spec.method == Method::Psp || spec.method == Method::P3;
  report.policy_json = has_policy ? effective.policy.to_json() : "{}";
  report.backend = backend.fingerprint();
  report.n_samples = labeled.size();

  CalibrationCache cache;
  const std::size_t jobs =
      backend.supports_concurrent_calls() ? std::max<std::size_t>(1, spec.jobs) : 1;

  std::vector<double> accuracies;
  for (std::size_t t = 0; t < templates.size(); ++t) {
    std::vector<SampleOutcome> outcomes(labeled.size());
    auto run_range = [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) {
        const std::uint64_t sample_seed =
            splitmix64(spec.seed ^ splitmix64((t << 20) | i));
        outcomes[i] = evaluate_one(backend, templates[t], *labeled[i], labels,
                                   effective, cache, sample_seed);
      }
    };
    if (jobs <= 1 || labeled.size() < 2) {
      run_range(0, labeled.size());
    } else {
      std::vector<std::thread> workers;
      const std::size_t n = labeled.size();
      const std::size_t chunk = (n + jobs - 1) / jobs;
      for (std::size_t j = 0; j < jobs && j * chunk < n; ++j)
        workers.emplace_back(run_range, j * chunk, std::min(n, (j + 1) * chunk));
      for (auto& w : workers) w.join();
    }

    PromptResult pr;
    pr.template_id = t;
    std::size_t correct = 0;
    std::uint64_t runs = 0, flops = 0;
    for (const auto& o : outcomes) {
      correct += o.correct ? 1 : 0;
      runs += o.runs;
      flops += o.flops;
    }
    const auto n = static_cast<double>(labeled.size());
    pr.accuracy = static_cast<double>(correct) / n;
    pr.avg_runs = static_cast<double>(runs) / n;
    pr.avg_flops = static_cast<double>(flops) / n;
    accuracies.push_back(pr.accuracy);
    report.per_prompt.push_back(pr);
  }

  report.mean_accuracy =
      std::accumulate(accuracies.begin(), accuracies.end(), 0.0) /
      static_cast<double>(accuracies.size());
  report.cross_prompt_std = ph3::cross_prompt_std(accuracies);
  return report;
}

namespace {

nlohmann::ordered_json report_to_json(const EvaluationReport& report) {
  nlohmann::ordered_json j;
  j["method"] = report.method;
  j["policy"] = nlohmann::ordered_json::parse(report.policy_json);
  auto& pp = j["per_prompt"] = nlohmann::ordered_json::array();
  for (const auto& p : report.per_prompt) {
    nlohmann::ordered_json row;
    row["template_id"] = p.template_id;
    row["accuracy"] = p.accuracy;
    row["avg_runs"] = p.avg_runs;
    row["avg_flops"] = p.avg_flops;
    pp.push_back(std::move(row));
  }
  j["mean_accuracy"] = report.mean_accuracy;
  j["cross_prompt_std"] = report.cross_prompt_std;
  j["n_samples"] = report.n_samples;
  j["backend"] = report.backend;
  return j;
}

}  // namespace

std::string serialize_report_json(const EvaluationReport& report) {
  return report_to_json(report).dump(2) + "\n";
}

EvaluationReport parse_report_json(const std::string& json_text) {
  const auto j = nlohmann::ordered_json::parse(json_text);
  EvaluationReport report;
  report.method = j.at("method").get<std::string>();
  report.policy_json = j.at("policy").dump();
  for (const auto& row : j.at("per_prompt")) {
    PromptResult p;
    p.template_id = row.at("template_id").get<std::size_t>();
    p.accuracy = row.at("accuracy").get<double>();
    p.avg_runs = row.at("avg_runs").get<double>();
    p.avg_flops = row.at("avg_flops").get<double>();
    report.per_prompt.push_back(p);
  }
  report.mean_accuracy = j.at("mean_accuracy").get<double>();
  report.cross_prompt_std = j.at("cross_prompt_std").get<double>();
  report.n_samples = j.at("n_samples").get<std::size_t>();
  report.backend = j.at("backend").get<std::string>();
  return report;
}

std::string serialize_report_csv(const EvaluationReport& report) {
  std::ostringstream out;
  out.precision(17);
  out << "template_id,accuracy,avg_runs,avg_flops\n";
  for (const auto& p : report.per_prompt)
    out << p.template_id << ',' << p.accuracy << ',' << p.avg_runs << ','
        << p.avg_flops << '\n';
  out << "summary," << report.mean_accuracy << ',' << report.cross_prompt_std
      << ',' << report.n_samples << '\n';
  return out.str();
}

void emit_report(const EvaluationReport& report, const std::string& path,
                 const std::string& format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write report: " + path);
  if (format == "json")
    out << serialize_report_json(report);
  else if (format == "csv")
    out << serialize_report_csv(report);
  else
    throw ValidationError("unknown report format '" + format + "'");
}

}  // namespace ph3
