#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace triage {

/// Post severity, ordered GREEN < AMBER < RED < CRISIS.
enum class SeverityLabel : int { Green = 0, Amber = 1, Red = 2, Crisis = 3 };

inline constexpr int kNumClasses = 4;
inline constexpr std::array<SeverityLabel, kNumClasses> kAllLabels = {
    SeverityLabel::Green, SeverityLabel::Amber, SeverityLabel::Red, SeverityLabel::Crisis};

constexpr int index_of(SeverityLabel l) { return static_cast<int>(l); }
constexpr SeverityLabel label_at(int i) { return static_cast<SeverityLabel>(i); }

/// AMBER, RED or CRISIS.
constexpr bool is_flagged(SeverityLabel l) { return l != SeverityLabel::Green; }
/// RED or CRISIS.
constexpr bool is_urgent(SeverityLabel l) {
  return l == SeverityLabel::Red || l == SeverityLabel::Crisis;
}

/// Lowercase wire name: "green", "amber", "red", "crisis".
std::string_view to_string(SeverityLabel l);
std::optional<SeverityLabel> parse_label(std::string_view s);

}  // namespace triage
