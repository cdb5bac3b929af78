// uishift: every pipeline stage and the reward service behind one binary.

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "uishift/error.hpp"
#include "uishift/eval.hpp"
#include "uishift/grpo.hpp"
#include "uishift/logging.hpp"
#include "uishift/reward.hpp"
#include "uishift/service.hpp"
#include "uishift/synthetic_env.hpp"
#include "uishift/toy_policy.hpp"
#include "uishift/trajectory.hpp"
#include "uishift/transition.hpp"

namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw uishift::Error("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::ofstream open_out(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw uishift::Error("cannot write " + p.string());
  return out;
}

int cmd_build_pairs(const fs::path& corpus, int k, std::size_t count, std::uint64_t seed, const fs::path& out) {
  std::vector<std::string> diagnostics;
  auto episodes = uishift::load_all(corpus, diagnostics);
  for (const auto& d : diagnostics) std::cerr << "skipped: " << d << '\n';
  auto result = uishift::build_pairs(episodes, k, count, seed);
  uishift::write_pairs(out, result.pairs);
  const auto& r = result.report;
  std::cerr << "pairs: " << r.produced << "/" << r.requested << " from " << r.eligible_episodes
            << " eligible episodes (" << r.eligible_samples << " eligible steps, " << r.skipped_unresolved
            << " unresolved clicks)\n";
  if (r.shortfall() > 0) std::cerr << "warning: short by " << r.shortfall() << " pairs\n";
  return 0;
}

int cmd_score(const fs::path& pairs_file, const fs::path& completions, const std::string& mode_name,
              double std_floor, const fs::path& out_file) {
  auto mode = uishift::reasoning_mode_from_name(mode_name);
  if (!mode) throw uishift::InvalidArgumentError("--mode must be enabled or free");
  auto index = uishift::load_pair_index(pairs_file);
  std::ifstream in(completions);
  if (!in) throw uishift::Error("cannot open " + completions.string());
  auto out = open_out(out_file);
  std::string line;
  std::size_t line_no = 0;
  std::size_t errors = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("pair_id") || !j["pair_id"].is_string() ||
        !j.contains("samples") || !j["samples"].is_array()) {
      throw uishift::SchemaError(completions.string(), line_no, "", "expected {\"pair_id\", \"samples\": [str]}");
    }
    json row;
    auto pid = j["pair_id"].get<std::string>();
    row["pair_id"] = pid;
    auto it = index.find(pid);
    std::vector<std::string> samples;
    for (const auto& s : j["samples"]) {
      if (!s.is_string()) throw uishift::SchemaError(completions.string(), line_no, "samples", "expected strings");
      samples.push_back(s.get<std::string>());
    }
    if (it == index.end()) {
      row["error"] = "unknown pair_id";
      ++errors;
    } else if (samples.empty()) {
      row["error"] = "no samples";
      ++errors;
    } else {
      auto rewards = uishift::score_group(samples, it->second, *mode);
      row["rewards"] = json::array();
      for (const auto& b : rewards) {
        row["rewards"].push_back({{"r_format", b.r_format}, {"r_accuracy", b.r_accuracy}, {"total", b.total}});
      }
      if (rewards.size() >= 2) row["advantages"] = uishift::normalize_advantages(uishift::totals(rewards), std_floor);
    }
    out << row.dump(-1, ' ', false, json::error_handler_t::replace) << '\n';
  }
  if (errors > 0) std::cerr << "warning: " << errors << " lines could not be scored\n";
  return 0;
}

int cmd_train_toy(const fs::path& pairs_file, const fs::path& corpus, int k, const std::string& config_file,
                  std::uint64_t seed, const fs::path& metrics_out) {
  uishift::ToyTrainConfig cfg;
  if (!config_file.empty()) cfg = uishift::toy_config_from_json(slurp(config_file));
  std::vector<uishift::TransitionPair> pairs;
  for (auto& p : uishift::read_pairs(pairs_file)) {
    if (p.k == k) pairs.push_back(std::move(p));
  }
  if (pairs.size() < 2) throw uishift::InvalidArgumentError("need at least 2 pairs with the requested k");
  auto episodes = uishift::load_all(corpus);
  uishift::StepIndex steps(episodes);
  auto vocab = uishift::vocabulary_from(episodes);

  uishift::Rng split_rng(uishift::mix_seed(seed, 0x5eed));
  split_rng.shuffle(std::span(pairs));
  auto n_hold = static_cast<std::size_t>(cfg.holdout_fraction * static_cast<double>(pairs.size()));
  n_hold = std::min(n_hold, pairs.size() - 1);
  std::span<const uishift::TransitionPair> all(pairs);
  auto holdout = all.first(n_hold);
  auto train = all.subspan(n_hold);

  auto out = open_out(metrics_out);
  auto result = uishift::toy_train(train, holdout, steps, vocab, cfg, seed, [&](const uishift::ToyStepMetrics& m) {
    out << uishift::metrics_to_jsonl(m) << '\n';
  });
  std::cerr << "train " << train.size() << " / holdout " << holdout.size() << " pairs, final holdout accuracy "
            << result.final_holdout_acc << '\n';
  return 0;
}

int cmd_gen_corpus(const std::string& config_file, std::size_t episodes, std::size_t length, std::uint64_t seed,
                   const fs::path& out) {
  uishift::WorldConfig cfg;
  if (!config_file.empty()) cfg = uishift::world_config_from_json(slurp(config_file));
  auto corpus = uishift::generate_corpus(cfg, episodes, length, seed);
  uishift::write_corpus(out, corpus.episodes());
  std::cerr << "wrote " << corpus.rollouts.size() << " episodes to " << out.string() << '\n';
  return 0;
}

int cmd_eval(const std::string& task_name, const fs::path& in, const fs::path& report, const std::string& csv) {
  auto task = uishift::eval_task_from_name(task_name);
  if (!task) throw uishift::InvalidArgumentError("--task must be grounding or automation");
  auto r = uishift::eval_file(*task, in);
  open_out(report) << uishift::report_to_json(r) << '\n';
  if (!csv.empty()) open_out(csv) << uishift::report_to_csv(r);
  return 0;
}

uishift::RewardServer* g_server = nullptr;

extern "C" void on_signal(int) {
  if (g_server != nullptr) g_server->stop();
}

int cmd_serve(const std::string& bind, const std::string& pairs_file, double std_floor) {
  uishift::PairIndex index;
  if (!pairs_file.empty()) index = uishift::load_pair_index(pairs_file);
  uishift::RewardServer server(std::move(index), {std_floor});
  int port = server.bind(bind);
  std::cerr << "listening on port " << port << " with " << server.pair_count() << " pairs\n";
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  server.run();
  g_server = nullptr;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  uishift::configure_logging_from_env();
  CLI::App app{"uishift: UI transition pairs, rule-based rewards and GRPO utilities"};
  app.set_version_flag("--version", std::string(uishift::version()));
  app.require_subcommand(1);

  fs::path corpus, out, pairs, completions, config_path, in, report, metrics_out;
  std::string mode = "free", task, csv, bind, config;
  int k = 1;
  std::size_t count = 0, episodes = 0, length = 0;
  std::uint64_t seed = 0;
  double std_floor = 1e-6;

  auto* bp = app.add_subcommand("build-pairs", "Sample k-step transition pairs from a corpus");
  bp->add_option("--corpus", corpus, "Corpus directory of *.jsonl episodes")->required()->check(CLI::ExistingDirectory);
  bp->add_option("--k", k, "Steps between S_t and S_t+k")->required()->check(CLI::Range(1, 4));
  bp->add_option("--count", count, "Number of pairs")->required();
  bp->add_option("--seed", seed)->required();
  bp->add_option("--out", out, "Pair JSONL file")->required();

  auto* sc = app.add_subcommand("score", "Score completions against pair golds");
  sc->add_option("--pairs", pairs)->required()->check(CLI::ExistingFile);
  sc->add_option("--completions", completions, "JSONL of {\"pair_id\", \"samples\": [str]}")
      ->required()
      ->check(CLI::ExistingFile);
  sc->add_option("--mode", mode)->required()->check(CLI::IsMember({"enabled", "free"}));
  sc->add_option("--std-floor", std_floor)->capture_default_str();
  sc->add_option("--out", out)->required();

  auto* tt = app.add_subcommand("train-toy", "GRPO on the softmax-linear toy policy");
  tt->add_option("--pairs", pairs)->required()->check(CLI::ExistingFile);
  tt->add_option("--corpus", corpus, "Corpus holding the pairs' view hierarchies")
      ->required()
      ->check(CLI::ExistingDirectory);
  tt->add_option("--k", k)->required()->check(CLI::Range(1, 4));
  tt->add_option("--config", config, "JSON training config")->check(CLI::ExistingFile);
  tt->add_option("--seed", seed)->required();
  tt->add_option("--metrics-out", metrics_out)->required();

  auto* gc = app.add_subcommand("gen-corpus", "Generate a synthetic GUI corpus");
  gc->add_option("--config", config, "JSON world config")->check(CLI::ExistingFile);
  gc->add_option("--episodes", episodes)->required();
  gc->add_option("--length", length, "Steps per episode")->required()->check(CLI::Range(2, 100000));
  gc->add_option("--seed", seed)->required();
  gc->add_option("--out", out)->required();

  auto* ev = app.add_subcommand("eval", "Compute grounding or automation metrics");
  ev->add_option("--task", task)->required()->check(CLI::IsMember({"grounding", "automation"}));
  ev->add_option("--in", in)->required()->check(CLI::ExistingFile);
  ev->add_option("--report", report)->required();
  ev->add_option("--csv", csv, "Also write a CSV table");

  auto* sv = app.add_subcommand("serve", "Run the HTTP reward service");
  sv->add_option("--bind", bind, "host:port")->required();
  sv->add_option("--pairs", config_path, "Pair JSONL to index by pair_id")->check(CLI::ExistingFile);
  sv->add_option("--std-floor", std_floor)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*bp) return cmd_build_pairs(corpus, k, count, seed, out);
    if (*sc) return cmd_score(pairs, completions, mode, std_floor, out);
    if (*tt) return cmd_train_toy(pairs, corpus, k, config, seed, metrics_out);
    if (*gc) return cmd_gen_corpus(config, episodes, length, seed, out);
    if (*ev) return cmd_eval(task, in, report, csv);
    if (*sv) return cmd_serve(bind, config_path.string(), std_floor);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
