#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "uishift/action.hpp"
#include "uishift/trajectory.hpp"

namespace uishift {

struct ScreenRef {
  std::string ref;
  std::int64_t w = 0;
  std::int64_t h = 0;
  bool operator==(const ScreenRef&) const = default;
};

// A k-step inverse-dynamics sample: given S_t and S_{t+k}, predict the first
// action taken at S_t.
struct TransitionPair {
  std::string pair_id;
  std::string episode_id;
  std::size_t t = 0;
  int k = 1;
  ScreenRef s_t;
  ScreenRef s_tk;
  GoldTarget gold;
  std::string prompt_template_id;

  bool operator==(const TransitionPair&) const = default;
};

struct BuildReport {
  std::size_t requested = 0;
  std::size_t produced = 0;
  std::size_t eligible_episodes = 0;
  std::size_t eligible_samples = 0;
  std::size_t skipped_unresolved = 0;
  std::vector<std::string> diagnostics;

  std::size_t shortfall() const { return requested > produced ? requested - produced : 0; }
};

struct BuildResult {
  std::vector<TransitionPair> pairs;
  BuildReport report;
};

// Diversity-first selection: passes over a seeded shuffle of the eligible
// episodes take one uniformly drawn, not-yet-used step per episode, until
// `count` pairs exist or every eligible step is spent. Click golds carry the
// bbox resolved from S_t's view hierarchy; unresolvable ones are skipped and
// reported.
BuildResult build_pairs(std::span<const Episode> corpus, int k, std::size_t count,
                        std::uint64_t seed);

std::string template_id_for_k(int k);

std::string pair_to_jsonl(const TransitionPair& p);
TransitionPair pair_from_jsonl(std::string_view line, const std::string& file = "<memory>",
                               std::size_t line_no = 1);

void write_pairs(const std::filesystem::path& file, std::span<const TransitionPair> pairs);
std::vector<TransitionPair> read_pairs(const std::filesystem::path& file);

// Training prompt for the pair's template with the S_t dimensions filled in.
// Throws TemplateError for an unknown template id.
std::string render_training_prompt(const TransitionPair& pair);

// Lookup of steps by screenshot ref, for consumers that need the view
// hierarchies behind a pair. Holds pointers into `episodes`.
class StepIndex {
 public:
  explicit StepIndex(std::span<const Episode> episodes);
  const Step* find(std::string_view ref) const;
  std::size_t size() const { return by_ref_.size(); }

 private:
  std::unordered_map<std::string, const Step*> by_ref_;
};

}  // namespace uishift
