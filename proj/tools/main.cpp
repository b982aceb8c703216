// Command-line front end: classify a single text, run a prompt-sweep
// evaluation, or serve a local backend over the remote logits protocol.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ph3/aggregation.hpp"
#include "ph3/backend.hpp"
#include "ph3/core.hpp"
#include "ph3/engine.hpp"
#include "ph3/harness.hpp"
#include "ph3/remote.hpp"
#include "ph3/tabular_lm.hpp"
#include "ph3/toy_transformer.hpp"

namespace {

struct BackendOptions {
  std::string kind = "toy";
  std::string config_path;  // tabular/toy JSON config
  std::string remote_url;
  std::uint64_t seed = 0;
};

std::unique_ptr<ph3::Backend> make_backend(const BackendOptions& opts) {
  if (opts.kind == "toy") {
    ph3::ToyTransformerConfig config;
    config.seed = opts.seed;
    if (!opts.config_path.empty()) {
      std::ifstream in(opts.config_path);
      if (!in) throw ph3::IoError("cannot open backend config: " + opts.config_path);
      nlohmann::json j;
      in >> j;
      config.layers = j.value("layers", config.layers);
      config.hidden = j.value("hidden", config.hidden);
      config.heads = j.value("heads", config.heads);
      config.vocab = j.value("vocab", config.vocab);
      config.max_len = j.value("max_len", config.max_len);
      config.placeholder_id = j.value("placeholder_id", config.placeholder_id);
      config.seed = j.value("seed", config.seed);
    }
    return std::make_unique<ph3::ToyTransformer>(config);
  }
  if (opts.kind == "tabular") {
    if (opts.config_path.empty())
      throw ph3::ValidationError("tabular backend requires --backend-config");
    return std::make_unique<ph3::TabularLM>(
        ph3::TabularLM::from_json_file(opts.config_path));
  }
  if (opts.kind == "remote") {
    std::string url = opts.remote_url;
    if (url.empty()) {
      const char* env = std::getenv("PH_REMOTE_URL");
      if (env) url = env;
    }
    if (url.empty())
      throw ph3::ValidationError(
          "remote backend requires --remote-url or PH_REMOTE_URL");
    return std::make_unique<ph3::RemoteBackend>(url);
  }
  throw ph3::ValidationError("unknown backend '" + opts.kind + "'");
}

struct PolicyOptions {
  std::string method = "p3";
  std::string aggregation = "vote";  // p3: vote | slope
  double eta = 5.0;
  bool eta_set = false;
  double intercept = -10.0;
  std::string calibration = "none";
  std::size_t placeholders = 512;
};

ph3::RunSpec build_run_spec(const PolicyOptions& p) {
  ph3::RunSpec spec;
  spec.method = ph3::method_from_string(p.method);
  spec.placeholder_cap = p.placeholders;
  const bool positional = spec.method == ph3::Method::Ntp ||
                          spec.method == ph3::Method::Psp ||
                          spec.method == ph3::Method::P3;
  if (!positional && (p.eta_set || p.calibration != "none"))
    throw ph3::ValidationError("--eta/--calibration only apply to ntp/psp/p3");
  switch (spec.method) {
    case ph3::Method::Ntp:
      spec.policy = ph3::AggregationPolicy::next_token();
      break;
    case ph3::Method::Psp:
      spec.policy = ph3::AggregationPolicy::skip_position(
          static_cast<std::size_t>(p.eta));
      break;
    case ph3::Method::P3:
      if (p.aggregation == "slope") {
        spec.policy = ph3::AggregationPolicy::slope_position(p.eta, p.intercept);
      } else {
        spec.policy = ph3::AggregationPolicy::range_vote(
            static_cast<std::size_t>(p.eta),
            ph3::calibration_variant_from_string(p.calibration));
      }
      break;
    default:
      break;
  }
  spec.policy.validate();
  return spec;
}

void add_backend_flags(CLI::App* cmd, BackendOptions& opts) {
  cmd->add_option("--backend", opts.kind, "Backend: toy, tabular, or remote")
      ->check(CLI::IsMember({"toy", "tabular", "remote"}));
  cmd->add_option("--backend-config", opts.config_path,
                  "JSON config for the toy/tabular backend");
  cmd->add_option("--remote-url", opts.remote_url,
                  "host:port of a remote logits server (or PH_REMOTE_URL)");
  cmd->add_option("--seed", opts.seed, "Backend / run seed");
}

void add_policy_flags(CLI::App* cmd, PolicyOptions& opts) {
  cmd->add_option("--method", opts.method, "ntp, psp, p3, gen, or sc")
      ->check(CLI::IsMember({"ntp", "psp", "p3", "gen", "sc"}));
  auto* eta = cmd->add_option("--eta", opts.eta,
                              "Skip index (psp), vote range (p3 vote), or angle "
                              "in degrees (p3 slope)");
  cmd->callback([eta, &opts] { opts.eta_set = eta->count() > 0; });
  cmd->add_option("--aggregation", opts.aggregation,
                  "p3 aggregation: vote or slope")
      ->check(CLI::IsMember({"vote", "slope"}));
  cmd->add_option("--intercept", opts.intercept, "Slope-rule intercept b");
  cmd->add_option("--calibration", opts.calibration,
                  "Content-free calibration: none, na, empty, unk5")
      ->check(CLI::IsMember({"none", "na", "empty", "unk5"}));
  cmd->add_option("--placeholders", opts.placeholders,
                  "Cap on appended placeholder tokens");
}

int run(int argc, char** argv) {
  CLI::App app{"Zero-shot classification by multi-position token prediction"};
  app.require_subcommand(1);

  // classify
  auto* classify_cmd = app.add_subcommand("classify", "Classify a single text");
  BackendOptions cls_backend;
  PolicyOptions cls_policy;
  std::string cls_text, cls_labels_path, cls_prompt;
  bool cls_null_prompt = false, cls_dump_matrix = false;
  classify_cmd->add_option("text", cls_text, "Input text")->required();
  classify_cmd->add_option("--labels", cls_labels_path, "Label-spec JSON file")
      ->required();
  classify_cmd->add_option("--prompt", cls_prompt,
                           "Prompt template with {text}/{title} slots");
  classify_cmd->add_flag("--null-prompt", cls_null_prompt,
                         "Use the bare '{text}' template");
  classify_cmd->add_flag("--dump-matrix", cls_dump_matrix,
                         "Print the (positions x classes) score matrix");
  add_backend_flags(classify_cmd, cls_backend);
  add_policy_flags(classify_cmd, cls_policy);

  // evaluate
  auto* eval_cmd = app.add_subcommand("evaluate", "Prompt-sweep evaluation");
  BackendOptions ev_backend;
  PolicyOptions ev_policy;
  std::string ev_dataset, ev_prompts, ev_labels_path;
  std::string ev_out = "report.json", ev_format = "json", ev_sweep;
  bool ev_null_prompt = false;
  std::size_t ev_sample_cap = 0, ev_jobs = 1;
  eval_cmd->add_option("--dataset", ev_dataset, "JSONL dataset file")->required();
  eval_cmd->add_option("--prompts", ev_prompts,
                       "Prompt-set file, one template per line");
  eval_cmd->add_flag("--null-prompt", ev_null_prompt,
                     "Evaluate the bare '{text}' template only");
  eval_cmd->add_option("--labels", ev_labels_path, "Label-spec JSON file")
      ->required();
  eval_cmd->add_option("--eta-sweep", ev_sweep,
                       "Range 'a..b': one report per eta value");
  eval_cmd->add_option("--sample-cap", ev_sample_cap,
                       "Evaluate at most N samples (0 = all)");
  eval_cmd->add_option("--jobs", ev_jobs, "Worker threads (default 1)");
  eval_cmd->add_option("--out", ev_out, "Report output path");
  eval_cmd->add_option("--format", ev_format, "Report format")
      ->check(CLI::IsMember({"json", "csv"}));
  add_backend_flags(eval_cmd, ev_backend);
  add_policy_flags(eval_cmd, ev_policy);

  // serve
  auto* serve_cmd =
      app.add_subcommand("serve", "Expose a local backend over HTTP");
  BackendOptions srv_backend;
  std::string srv_host = "127.0.0.1";
  int srv_port = 8080;
  serve_cmd->add_option("--host", srv_host, "Bind address");
  serve_cmd->add_option("--port", srv_port, "Port");
  add_backend_flags(serve_cmd, srv_backend);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (classify_cmd->parsed()) {
    const auto backend = make_backend(cls_backend);
    const auto labels = ph3::load_label_spec(cls_labels_path);
    labels.validate(backend->vocab().size);
    if (cls_null_prompt || cls_prompt.empty()) cls_prompt = "{text}";
    const ph3::PromptTemplate tmpl(cls_prompt);
    const auto spec = build_run_spec(cls_policy);
    if (spec.method == ph3::Method::Gen || spec.method == ph3::Method::Sc)
      throw ph3::ValidationError("classify supports ntp/psp/p3 only");

    ph3::Sample sample;
    sample.text = cls_text;
    ph3::CalibrationCache cache;
    const auto result =
        ph3::classify(*backend, tmpl.render(sample), labels, spec.policy, &cache,
                      &tmpl, spec.placeholder_cap);
    std::cout << "decision: " << labels.classes[result.class_index].name << "\n";
    if (cls_dump_matrix) {
      std::cout << "position";
      for (const auto& c : labels.classes) std::cout << '\t' << c.name;
      std::cout << "\n";
      for (std::size_t i = 0; i < result.matrix.positions(); ++i) {
        std::cout << i;
        for (std::size_t c = 0; c < result.matrix.num_classes(); ++c)
          std::cout << '\t' << result.matrix.entries(static_cast<Eigen::Index>(i),
                                                     static_cast<Eigen::Index>(c));
        std::cout << "\n";
      }
    }
    return 0;
  }

  if (eval_cmd->parsed()) {
    const auto backend = make_backend(ev_backend);
    const auto labels = ph3::load_label_spec(ev_labels_path);
    labels.validate(backend->vocab().size);
    std::vector<ph3::PromptTemplate> templates;
    if (ev_null_prompt || ev_prompts.empty())
      templates.push_back(ph3::PromptTemplate::null_template());
    else
      templates = ph3::load_prompt_set(ev_prompts);
    const auto samples = ph3::load_dataset(ev_dataset, &labels);

    auto run_once = [&](const PolicyOptions& p, const std::string& out_path) {
      auto spec = build_run_spec(p);
      spec.seed = ev_backend.seed;
      spec.sample_cap = ev_sample_cap;
      spec.jobs = ev_jobs;
      const auto report =
          ph3::evaluate(*backend, templates, samples, labels, spec);
      ph3::emit_report(report, out_path, ev_format);
      std::cout << out_path << ": mean_accuracy=" << report.mean_accuracy
                << " cross_prompt_std=" << report.cross_prompt_std << "\n";
    };

    if (ev_sweep.empty()) {
      run_once(ev_policy, ev_out);
    } else {
      const auto sep = ev_sweep.find("..");
      if (sep == std::string::npos)
        throw ph3::ValidationError("--eta-sweep expects 'a..b'");
      const int lo = std::stoi(ev_sweep.substr(0, sep));
      const int hi = std::stoi(ev_sweep.substr(sep + 2));
      if (lo > hi) throw ph3::ValidationError("--eta-sweep range is empty");
      for (int eta = lo; eta <= hi; ++eta) {
        PolicyOptions p = ev_policy;
        p.eta = eta;
        p.eta_set = true;
        if (p.method == "p3" && p.aggregation == "vote" && eta < 1)
          p.eta = 1;  // vote range is at least 1
        const auto dot = ev_out.rfind('.');
        const std::string stem =
            dot == std::string::npos ? ev_out : ev_out.substr(0, dot);
        const std::string ext = dot == std::string::npos ? "" : ev_out.substr(dot);
        run_once(p, stem + "_eta" + std::to_string(eta) + ext);
      }
    }
    return 0;
  }

  if (serve_cmd->parsed()) {
    const auto backend = make_backend(srv_backend);
    std::cerr << "serving " << backend->fingerprint() << " on " << srv_host << ":"
              << srv_port << "\n";
    ph3::BackendServer server(*backend, srv_host, srv_port);
    server.run();
    return 0;
  }

  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ph3::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
