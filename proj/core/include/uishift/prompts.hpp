#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace uishift {

// Prompt templates bundled with the library:
//   ui_transition_k1, ui_transition_multi   (training, k = 1 and k >= 2)
//   eval_grounding, eval_androidcontrol_low, eval_androidcontrol_high
std::vector<std::string> prompt_template_ids();

// Raw template text with `{name}` placeholders. Throws TemplateError.
const std::string& prompt_template(std::string_view id);

// Substitutes each `{name}` in the template with vars[name]. Placeholders
// without a binding are left untouched (the action schema uses literal
// braces).
std::string render_prompt(std::string_view id, const std::map<std::string, std::string>& vars);

// Training prompt for a k-step transition. k = 1 uses the single-action
// wording; k >= 2 generalizes the two-action wording to k actions.
std::string render_transition_prompt(int k, long width, long height);

}  // namespace uishift
