#include "uishift/transition.hpp"

#include <fstream>

#include "json_codec.hpp"
#include "text_util.hpp"
#include "log.hpp"
#include "uishift/prompts.hpp"
#include "uishift/rng.hpp"

namespace uishift {

std::string template_id_for_k(int k) { return "ui_transition_k" + std::to_string(k); }

BuildResult build_pairs(std::span<const Episode> corpus, int k, std::size_t count, std::uint64_t seed) {
  if (k < 1) throw InvalidArgumentError("k must be >= 1");
  if (count < 1) throw InvalidArgumentError("count must be >= 1");
  if (corpus.empty()) throw InvalidArgumentError("corpus is empty");

  BuildResult result;
  auto& report = result.report;
  report.requested = count;

  struct Pool {
    std::size_t episode = 0;
    std::vector<std::size_t> unused_t;
  };
  std::vector<Pool> pools;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& steps = corpus[i].steps;
    Pool pool{i, {}};
    for (std::size_t t = 0; t + static_cast<std::size_t>(k) < steps.size(); ++t) {
      if (steps[t].action) pool.unused_t.push_back(t);
    }
    if (!pool.unused_t.empty()) {
      report.eligible_samples += pool.unused_t.size();
      pools.push_back(std::move(pool));
    }
  }
  report.eligible_episodes = pools.size();

  Rng rng(seed);
  rng.shuffle(std::span(pools));

  bool progressed = true;
  while (result.pairs.size() < count && progressed) {
    progressed = false;
    for (auto& pool : pools) {
      if (result.pairs.size() >= count) break;
      if (pool.unused_t.empty()) continue;
      progressed = true;
      auto pick = static_cast<std::size_t>(rng.below(pool.unused_t.size()));
      auto t = pool.unused_t[pick];
      pool.unused_t.erase(pool.unused_t.begin() + static_cast<std::ptrdiff_t>(pick));

      const auto& ep = corpus[pool.episode];
      const auto& s0 = ep.steps[t];
      const auto& sk = ep.steps[t + static_cast<std::size_t>(k)];
      GoldTarget gold{*s0.action, std::nullopt};
      if (std::holds_alternative<Click>(gold.action)) {
        try {
          gold.bbox = resolve_click_bbox(s0);
        } catch (const UnresolvedTargetError& e) {
          ++report.skipped_unresolved;
          auto msg = ep.episode_id + " t=" + std::to_string(t) + ": " + e.what();
          log::debug("dropping pair: {}", msg);
          report.diagnostics.push_back(std::move(msg));
          continue;
        }
      }
      TransitionPair p;
      p.pair_id = ep.episode_id + "/t" + std::to_string(t) + "/k" + std::to_string(k);
      p.episode_id = ep.episode_id;
      p.t = t;
      p.k = k;
      p.s_t = {s0.screenshot_ref, s0.screen_w, s0.screen_h};
      p.s_tk = {sk.screenshot_ref, sk.screen_w, sk.screen_h};
      p.gold = std::move(gold);
      p.prompt_template_id = template_id_for_k(k);
      result.pairs.push_back(std::move(p));
    }
  }
  report.produced = result.pairs.size();
  if (report.shortfall() > 0) {
    log::warn("build_pairs: requested {} pairs, produced {} ({} eligible samples, {} unresolved)",
              report.requested, report.produced, report.eligible_samples, report.skipped_unresolved);
  }
  return result;
}

std::string pair_to_jsonl(const TransitionPair& p) { return detail::dump(detail::pair_to_json(p)); }

TransitionPair pair_from_jsonl(std::string_view line, const std::string& file, std::size_t line_no) {
  auto j = detail::json::parse(line, nullptr, false);
  if (j.is_discarded()) throw SchemaError(file, line_no, "", "not valid JSON");
  try {
    return detail::pair_from_json(j);
  } catch (const detail::FieldError& e) {
    throw SchemaError(file, line_no, e.field, e.what());
  }
}

void write_pairs(const std::filesystem::path& file, std::span<const TransitionPair> pairs) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + file.string());
  for (const auto& p : pairs) out << pair_to_jsonl(p) << '\n';
  if (!out) throw Error("failed writing " + file.string());
}

std::vector<TransitionPair> read_pairs(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error("cannot read " + file.string());
  std::vector<TransitionPair> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim_ascii(line).empty()) continue;
    out.push_back(pair_from_jsonl(line, file.string(), line_no));
  }
  return out;
}

std::string render_training_prompt(const TransitionPair& pair) {
  constexpr std::string_view kPrefix = "ui_transition_k";
  const auto& id = pair.prompt_template_id;
  if (!id.starts_with(kPrefix)) throw TemplateError("unknown template id '" + id + "'");
  int k = 0;
  try {
    std::size_t used = 0;
    k = std::stoi(id.substr(kPrefix.size()), &used);
    if (used != id.size() - kPrefix.size()) k = 0;
  } catch (const std::exception&) {
    k = 0;
  }
  if (k < 1 || k > 4) throw TemplateError("unknown template id '" + id + "'");
  return render_transition_prompt(k, pair.s_t.w, pair.s_t.h);
}

StepIndex::StepIndex(std::span<const Episode> episodes) {
  for (const auto& e : episodes) {
    for (const auto& s : e.steps) by_ref_.emplace(s.screenshot_ref, &s);
  }
}

const Step* StepIndex::find(std::string_view ref) const {
  auto it = by_ref_.find(std::string(ref));
  return it == by_ref_.end() ? nullptr : it->second;
}

}  // namespace uishift
