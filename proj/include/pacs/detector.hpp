#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace pacs {

/// On/off single-photon detector. A gate with n incident photons clicks with
/// probability 1 - (1 - dark_prob) (1 - eta)^n.
struct DetectorModel {
  double eta = 1.0;
  double dark_prob = 0.0;

  static constexpr DetectorModel ideal() { return {1.0, 0.0}; }

  /// Throws std::invalid_argument unless eta in [0,1] and dark_prob in [0,1).
  void validate() const;

  friend bool operator==(const DetectorModel&, const DetectorModel&) = default;
};

double click_probability_given_n(const DetectorModel& detector, std::size_t n);

/// Probability of the given outcome (click or no click) for n photons.
inline double outcome_probability(const DetectorModel& detector, bool click, std::size_t n) {
  const double p = click_probability_given_n(detector, n);
  return click ? p : 1.0 - p;
}

/// One click/no-click outcome per idler, in stage order.
struct ClickPattern {
  std::vector<bool> clicks;

  /// Parses a string of '1' (click) and '0' (no click), stage 1 first.
  static ClickPattern parse(std::string_view text);
  /// Pattern whose bit j (least significant = stage 1) is the click of stage j+1.
  static ClickPattern from_bits(std::size_t bits, std::size_t n_stages);
  static ClickPattern none(std::size_t n_stages) { return {std::vector<bool>(n_stages, false)}; }

  std::size_t size() const noexcept { return clicks.size(); }
  std::size_t click_count() const noexcept;
  std::string to_string() const;

  friend bool operator==(const ClickPattern&, const ClickPattern&) = default;
};

}  // namespace pacs
