#include "pacs/detection.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace pacs {

// Detector and patterns ----------------------------------------------------

void DetectorModel::validate() const {
  if (!(eta >= 0.0 && eta <= 1.0)) throw std::invalid_argument("detector: eta must lie in [0, 1]");
  if (!(dark_prob >= 0.0 && dark_prob < 1.0)) throw std::invalid_argument("detector: dark_prob must lie in [0, 1)");
}

double click_probability_given_n(const DetectorModel& detector, std::size_t n) {
  // dark + (1 - dark)(1 - (1 - eta)^n), arranged so n = 0 returns dark_prob exactly
  const double photon = 1.0 - std::pow(1.0 - detector.eta, static_cast<double>(n));
  return detector.dark_prob + (1.0 - detector.dark_prob) * photon;
}

ClickPattern ClickPattern::parse(std::string_view text) {
  ClickPattern pattern;
  for (char c : text) {
    if (c == '1') {
      pattern.clicks.push_back(true);
    } else if (c == '0') {
      pattern.clicks.push_back(false);
    } else {
      throw std::invalid_argument("click pattern: expected only '0' and '1', got '" + std::string(text) + "'");
    }
  }
  if (pattern.clicks.empty()) throw std::invalid_argument("click pattern: empty");
  return pattern;
}

ClickPattern ClickPattern::from_bits(std::size_t bits, std::size_t n_stages) {
  ClickPattern pattern;
  pattern.clicks.resize(n_stages);
  for (std::size_t j = 0; j < n_stages; ++j) pattern.clicks[j] = ((bits >> j) & 1U) != 0;
  return pattern;
}

std::size_t ClickPattern::click_count() const noexcept {
  std::size_t k = 0;
  for (bool c : clicks) k += c ? 1 : 0;
  return k;
}

std::string ClickPattern::to_string() const {
  std::string out;
  for (bool c : clicks) out.push_back(c ? '1' : '0');
  return out;
}

// Conditioning -------------------------------------------------------------

double mean_photon_number(const WeightedEnsemble& ensemble) {
  if (ensemble.space.size() != 1) throw std::invalid_argument("mean_photon_number: single-mode ensemble expected");
  double mean = 0.0;
  for (const auto& b : ensemble.branches) {
    const Amplitudes& a = b.state.amplitudes();
    for (Eigen::Index n = 0; n < a.size(); ++n) mean += b.weight * static_cast<double>(n) * std::norm(a[n]);
  }
  return mean;
}

Conditioned condition_on_pattern(const PureState& joint, const ClickPattern& pattern, const DetectorModel& detector) {
  detector.validate();
  const MultiMode& space = joint.space();
  const std::size_t n_idlers = space.size() - 1;
  if (pattern.size() != n_idlers) {
    throw std::invalid_argument("condition_on_pattern: pattern length " + std::to_string(pattern.size()) +
                                " does not match " + std::to_string(n_idlers) + " idlers");
  }
  const std::size_t ds = space[0].dim;
  const std::size_t block = space.stride(0);  // number of idler configurations

  std::vector<std::vector<double>> povm(n_idlers);
  for (std::size_t j = 0; j < n_idlers; ++j) {
    for (std::size_t n = 0; n < space[j + 1].dim; ++n) {
      povm[j].push_back(outcome_probability(detector, pattern.clicks[j], n));
    }
  }

  const std::size_t keep_signal[] = {0};
  const MultiMode signal_space = space.subspace(keep_signal);
  std::vector<Branch> branches;
  double probability = 0.0;
  for (std::size_t offset = 0; offset < block; ++offset) {
    double weight = 1.0;
    for (std::size_t j = 0; j < n_idlers && weight > 0.0; ++j) {
      weight *= povm[j][(offset / space.stride(j + 1)) % space[j + 1].dim];
    }
    if (weight == 0.0) continue;
    Amplitudes signal(static_cast<Eigen::Index>(ds));
    for (std::size_t s = 0; s < ds; ++s) signal[static_cast<Eigen::Index>(s)] = joint[s * block + offset];
    const double p = signal.squaredNorm();
    if (p == 0.0) continue;
    probability += weight * p;
    branches.push_back({weight * p, PureState::normalized(signal_space, std::move(signal))});
  }
  if (probability < kImpossibleProbability) return {probability, std::nullopt};
  for (auto& b : branches) b.weight /= probability;
  return {probability, WeightedEnsemble{signal_space, std::move(branches)}};
}

Projection project_signal(const PureState& joint, const PureState& reference) {
  const MultiMode& space = joint.space();
  if (space.size() < 2) throw std::invalid_argument("project_signal: joint state needs idler modes");
  if (reference.space().size() != 1 || reference.space()[0].dim != space[0].dim) {
    throw std::invalid_argument("project_signal: reference must live on the signal mode");
  }
  const std::size_t ds = space[0].dim;
  const std::size_t block = space.stride(0);
  Amplitudes idlers = Amplitudes::Zero(static_cast<Eigen::Index>(block));
  for (std::size_t s = 0; s < ds; ++s) {
    const complex r = std::conj(reference[s]);
    if (r == complex{}) continue;
    idlers += r * joint.amplitudes().segment(static_cast<Eigen::Index>(s * block), static_cast<Eigen::Index>(block));
  }
  const double p = idlers.squaredNorm();
  if (p < kImpossibleProbability) return {p, std::nullopt};
  std::vector<std::size_t> keep;
  for (std::size_t j = 1; j < space.size(); ++j) keep.push_back(j);
  return {p, PureState::normalized(space.subspace(keep), std::move(idlers))};
}

namespace {

PatternRow make_row(ClickPattern pattern, Conditioned conditioned) {
  PatternRow row{std::move(pattern), conditioned.probability, std::move(conditioned.state),
                 std::numeric_limits<double>::quiet_NaN()};
  if (row.signal) row.mean_signal_photons = mean_photon_number(*row.signal);
  return row;
}

void check_pattern_count(std::size_t n) {
  if (n >= 8 * sizeof(std::size_t) - 1) throw std::invalid_argument("enumerate_patterns: too many stages");
}

}  // namespace

std::vector<PatternRow> enumerate_patterns(const PureState& joint, const DetectorModel& detector) {
  const std::size_t n = joint.space().size() - 1;
  check_pattern_count(n);
  std::vector<PatternRow> rows;
  for (std::size_t bits = 0; bits < (std::size_t{1} << n); ++bits) {
    auto pattern = ClickPattern::from_bits(bits, n);
    auto conditioned = condition_on_pattern(joint, pattern, detector);
    rows.push_back(make_row(std::move(pattern), std::move(conditioned)));
  }
  return rows;
}

std::vector<PatternRow> enumerate_patterns_sequential(const ChainConfig& config, const DetectorModel& detector) {
  const std::size_t n = config.n_stages();
  check_pattern_count(n);
  std::vector<PatternRow> rows;
  for (std::size_t bits = 0; bits < (std::size_t{1} << n); ++bits) {
    auto pattern = ClickPattern::from_bits(bits, n);
    auto conditioned = run_chain_sequential(config, detector, pattern);
    rows.push_back(make_row(std::move(pattern), std::move(conditioned)));
  }
  return rows;
}

std::vector<double> click_count_distribution(const std::vector<PatternRow>& rows) {
  std::vector<double> out;
  for (const auto& row : rows) {
    const std::size_t k = row.pattern.click_count();
    if (out.size() <= k) out.resize(k + 1, 0.0);
    out[k] += row.probability;
  }
  if (!rows.empty()) out.resize(rows.front().pattern.size() + 1, 0.0);
  return out;
}

}  // namespace pacs
