#pragma once

// Post-selection on idler click patterns and projection of the signal mode.

#include <optional>
#include <vector>

#include "pacs/detector.hpp"
#include "pacs/dynamics.hpp"
#include "pacs/fock.hpp"

namespace pacs {

/// Conditions a chain output (signal = mode 0, idlers = modes 1..N) on a click
/// pattern. Every idler photon-number configuration with nonzero POVM weight
/// contributes one branch of the conditional signal ensemble.
Conditioned condition_on_pattern(const PureState& joint, const ClickPattern& pattern,
                                 const DetectorModel& detector);

struct Projection {
  double probability = 0.0;
  /// Normalized idler state; empty when the projection has zero probability.
  std::optional<PureState> idlers;
};

/// Projects the signal mode onto |reference><reference| and returns the idler state.
Projection project_signal(const PureState& joint, const PureState& reference);

struct PatternRow {
  ClickPattern pattern;
  double probability = 0.0;
  std::optional<WeightedEnsemble> signal;
  /// <n> of the conditional signal, NaN for impossible patterns.
  double mean_signal_photons = 0.0;
};

/// All 2^N patterns, ordered by their bit value with stage 1 least significant.
std::vector<PatternRow> enumerate_patterns(const PureState& joint, const DetectorModel& detector);

/// Same table computed stage by stage with run_chain_sequential.
std::vector<PatternRow> enumerate_patterns_sequential(const ChainConfig& config, const DetectorModel& detector);

/// P(exactly k clicks) for k = 0..N, summed from a pattern table.
std::vector<double> click_count_distribution(const std::vector<PatternRow>& rows);

/// <n> of an ensemble on a single mode.
double mean_photon_number(const WeightedEnsemble& ensemble);

}  // namespace pacs
