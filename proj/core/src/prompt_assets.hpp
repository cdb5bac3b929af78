#pragma once

#include <string_view>
#include <vector>

namespace uishift::detail {

struct PromptAsset {
  std::string_view id;
  std::string_view text;
};

const std::vector<PromptAsset>& prompt_assets();

}  // namespace uishift::detail
