#include "uishift/prompts.hpp"

#include <array>
#include <string>

#include "prompt_assets.hpp"
#include "text_util.hpp"
#include "uishift/error.hpp"

namespace uishift {
namespace {

std::string cardinal(int n) {
  static constexpr std::array<const char*, 11> kWords = {
      "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten"};
  if (n >= 0 && n < static_cast<int>(kWords.size())) return kWords[static_cast<std::size_t>(n)];
  return std::to_string(n);
}

std::string ordinal(int n) {
  static constexpr std::array<const char*, 12> kWords = {
      "zeroth", "first", "second", "third",  "fourth", "fifth",
      "sixth",  "seventh", "eighth", "ninth", "tenth",  "eleventh"};
  if (n >= 0 && n < static_cast<int>(kWords.size())) return kWords[static_cast<std::size_t>(n)];
  auto suffix = (n % 100 >= 11 && n % 100 <= 13) ? "th"
                : n % 10 == 1                     ? "st"
                : n % 10 == 2                     ? "nd"
                : n % 10 == 3                     ? "rd"
                                                  : "th";
  return std::to_string(n) + suffix;
}

}  // namespace

std::vector<std::string> prompt_template_ids() {
  std::vector<std::string> ids;
  for (const auto& a : detail::prompt_assets()) ids.emplace_back(a.id);
  return ids;
}

const std::string& prompt_template(std::string_view id) {
  static const auto* cache = [] {
    auto* m = new std::map<std::string, std::string, std::less<>>();
    for (const auto& a : detail::prompt_assets()) m->emplace(a.id, a.text);
    return m;
  }();
  auto it = cache->find(id);
  if (it == cache->end()) throw TemplateError("unknown prompt template '" + std::string(id) + "'");
  return it->second;
}

std::string render_prompt(std::string_view id, const std::map<std::string, std::string>& vars) {
  std::string out = prompt_template(id);
  for (const auto& [name, value] : vars) detail::replace_all(out, "{" + name + "}", value);
  return out;
}

std::string render_transition_prompt(int k, long width, long height) {
  if (k < 1) throw TemplateError("transition prompt needs k >= 1, got " + std::to_string(k));
  std::map<std::string, std::string> vars = {{"width", std::to_string(width)},
                                             {"height", std::to_string(height)}};
  if (k == 1) return render_prompt("ui_transition_k1", vars);
  vars["k_words"] = cardinal(k);
  vars["last_index"] = std::to_string(k + 1);
  vars["last_ordinal"] = ordinal(k + 1);
  return render_prompt("ui_transition_multi", vars);
}

}  // namespace uishift
