#include "triage/severity.hpp"

namespace triage {

namespace {
constexpr std::array<std::string_view, kNumClasses> kNames = {"green", "amber", "red", "crisis"};
}

std::string_view to_string(SeverityLabel l) { return kNames[static_cast<std::size_t>(index_of(l))]; }

std::optional<SeverityLabel> parse_label(std::string_view s) {
  for (std::size_t i = 0; i < kNames.size(); ++i)
    if (kNames[i] == s) return label_at(static_cast<int>(i));
  return std::nullopt;
}

}  // namespace triage
