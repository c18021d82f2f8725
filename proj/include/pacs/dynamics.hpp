#pragma once

// Parametric-amplifier stages acting on (signal, idler) pairs.
//
// One stage applies U = exp(lambda (a_s^dag a_i^dag - a_s a_i)) with the pump
// treated as a classical field absorbed into lambda. A chain applies stage j
// to the signal and idler j, in order, starting from |alpha>|0...0>.

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pacs/detector.hpp"
#include "pacs/fock.hpp"

namespace pacs {

/// Above this lambda the leading-order scaling laws no longer apply.
inline constexpr double kPerturbativeLambda = 0.3;

/// Largest joint state run_chain_full builds unless told otherwise.
inline constexpr std::size_t kDefaultAmplitudeBudget = 20'000'000;

/// Thrown when the joint chain state would exceed the amplitude budget.
class BudgetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct StageParams {
  double lambda = 0.0;
  std::size_t idler_dim = kDefaultIdlerDim;
};

struct ChainConfig {
  complex alpha{};
  std::vector<StageParams> stages;
  std::size_t signal_dim = 0;

  /// N identical stages with the signal cutoff taken from the truncation policy.
  static ChainConfig uniform(complex alpha, double lambda, std::size_t n_stages,
                             std::size_t idler_dim = kDefaultIdlerDim);

  std::size_t n_stages() const noexcept { return stages.size(); }

  /// Throws std::invalid_argument on a malformed chain.
  void validate() const;
  /// Human-readable notes for settings outside the perturbative regime.
  std::vector<std::string> warnings() const;

  /// Signal followed by idler-1 .. idler-N.
  MultiMode space() const;
};

/// lambda (a_s^dag a_i^dag - a_s a_i) as a dense real matrix on signal (x) idler.
Eigen::MatrixXd stage_generator(double lambda, std::size_t signal_dim, std::size_t idler_dim);

/// exp of the stage generator.
///
/// The generator conserves n_s - n_i, so the exponential is stored as one
/// dense block per difference sector; each block is the exponential of a real
/// antisymmetric tridiagonal matrix, computed from a symmetric eigendecomposition.
class StageUnitary {
 public:
  StageUnitary(double lambda, std::size_t signal_dim, std::size_t idler_dim);

  double lambda() const noexcept { return lambda_; }
  std::size_t signal_dim() const noexcept { return signal_dim_; }
  std::size_t idler_dim() const noexcept { return idler_dim_; }
  std::size_t pair_dim() const noexcept { return signal_dim_ * idler_dim_; }

  /// <s', i'| U |s, i>.
  double element(std::size_t s_out, std::size_t i_out, std::size_t s_in, std::size_t i_in) const;

  /// In-place U x on a vector over signal (x) idler, index s * idler_dim + i.
  void apply(Eigen::Ref<Amplitudes> pair) const;

  Eigen::MatrixXd to_dense() const;

  /// max |U^T U - I| over the whole truncated space.
  double unitarity_defect() const;
  /// Same, restricted to rows and columns with n_s + n_i <= signal_dim / 2.
  double low_occupancy_defect() const;

 private:
  struct Sector {
    std::vector<std::size_t> pair_index;  // s * idler_dim + i, ordered by i
    Eigen::MatrixXd block;
  };

  const Sector& sector_of(std::size_t s, std::size_t i) const;

  double lambda_;
  std::size_t signal_dim_;
  std::size_t idler_dim_;
  std::vector<Sector> sectors_;  // indexed by n_s - n_i + idler_dim - 1
};

StageUnitary stage_unitary(double lambda, std::size_t signal_dim, std::size_t idler_dim);

/// Applies a stage to the signal (mode 0) and the given idler mode of a joint state.
PureState apply_stage(const PureState& state, const StageUnitary& stage, std::size_t idler_mode);

/// Taylor expansion of the stage acting on |alpha>|0>, to first or second order, renormalized.
PureState perturbative_output(complex alpha, double lambda, int order, std::size_t signal_dim,
                              std::size_t idler_dim);

/// Joint state over signal and all idlers after every stage.
PureState run_chain_full(const ChainConfig& config, std::size_t amplitude_budget = kDefaultAmplitudeBudget);

/// Outcome of post-selecting on a detection event.
struct Conditioned {
  double probability = 0.0;
  /// Normalized conditional state; empty when the event is impossible.
  std::optional<WeightedEnsemble> state;

  bool possible() const noexcept { return state.has_value(); }
};

/// Probabilities below this are reported as impossible outcomes.
inline constexpr double kImpossibleProbability = 1e-30;

/// Measures idler j right after stage j, keeping only the signal state.
///
/// Each surviving photon-number outcome becomes a weighted pure branch. When
/// the branch count exceeds the signal dimension, the ensemble is compressed
/// to the eigenbasis of its density matrix.
Conditioned run_chain_sequential(const ChainConfig& config, const DetectorModel& detector,
                                 const ClickPattern& pattern);

}  // namespace pacs
