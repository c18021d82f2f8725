#pragma once

// Truncated Fock-space states over several bosonic modes.
//
// Amplitudes are flattened row-major in mode order: mode 0 (the signal)
// varies slowest, the last idler fastest. Every module indexes amplitudes
// through MultiMode::stride, so this convention is fixed.

#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace pacs {

using complex = std::complex<double>;
using Amplitudes = Eigen::VectorXcd;

/// Tolerance on the stored norm of a PureState.
inline constexpr double kNormTolerance = 1e-12;

/// Maximum tail mass a truncated coherent state may discard.
inline constexpr double kTailTolerance = 1e-12;

/// Amplitude pushed past the top Fock level above this is reported as leakage.
inline constexpr double kLeakageTolerance = 1e-10;

/// Thrown when a Fock cutoff is too small for the requested state.
class TruncationError : public std::runtime_error {
 public:
  TruncationError(const std::string& what, std::size_t suggested_dim)
      : std::runtime_error(what), suggested_dim_(suggested_dim) {}

  /// Smallest dimension that satisfies the truncation threshold.
  std::size_t suggested_dim() const noexcept { return suggested_dim_; }

 private:
  std::size_t suggested_dim_;
};

struct ModeSpec {
  std::size_t dim = 2;
  std::string label;

  friend bool operator==(const ModeSpec&, const ModeSpec&) = default;
};

class MultiMode {
 public:
  MultiMode() = default;
  explicit MultiMode(std::vector<ModeSpec> modes);

  /// Single mode of the given cutoff.
  static MultiMode single(std::size_t dim, std::string label = "mode");

  std::size_t size() const noexcept { return modes_.size(); }
  const ModeSpec& operator[](std::size_t i) const { return modes_.at(i); }
  const std::vector<ModeSpec>& modes() const noexcept { return modes_; }
  std::size_t total_dim() const noexcept { return total_dim_; }

  /// Distance in the flattened array between neighbouring Fock levels of mode i.
  std::size_t stride(std::size_t i) const { return strides_.at(i); }

  std::vector<std::size_t> dims() const;

  /// Flattened index of the multi-index (one Fock level per mode).
  std::size_t flat_index(std::span<const std::size_t> levels) const;
  std::vector<std::size_t> levels_of(std::size_t flat) const;

  /// Concatenation of this space's modes followed by other's.
  MultiMode concat(const MultiMode& other) const;

  /// The listed modes, in the listed order.
  MultiMode subspace(std::span<const std::size_t> keep) const;

  friend bool operator==(const MultiMode& a, const MultiMode& b) { return a.modes_ == b.modes_; }

 private:
  std::vector<ModeSpec> modes_;
  std::vector<std::size_t> strides_;
  std::size_t total_dim_ = 0;
};

/// Normalized pure state on a MultiMode. Immutable after construction.
class PureState {
 public:
  /// amplitudes must already be normalized to within kNormTolerance.
  PureState(MultiMode space, Amplitudes amplitudes);

  /// Rescales amplitudes to unit norm. Throws std::domain_error for a zero vector.
  static PureState normalized(MultiMode space, Amplitudes amplitudes);

  const MultiMode& space() const noexcept { return space_; }
  const Amplitudes& amplitudes() const noexcept { return amplitudes_; }
  complex operator[](std::size_t flat) const { return amplitudes_[static_cast<Eigen::Index>(flat)]; }

  /// Same amplitudes with new mode labels, one per mode.
  PureState relabeled(std::vector<std::string> labels) const;

 private:
  MultiMode space_;
  Amplitudes amplitudes_;
};

struct Branch {
  double weight = 0.0;
  PureState state;
};

/// Mixture of pure states, rho = sum_i w_i |psi_i><psi_i|.
struct WeightedEnsemble {
  MultiMode space;
  std::vector<Branch> branches;

  double total_weight() const;
  /// Checks that every branch lives on `space` and that weights are nonnegative.
  void validate() const;
  /// Dense density matrix; only sensible for small spaces.
  Eigen::MatrixXcd density_matrix() const;
};

// Reference states ---------------------------------------------------------

/// Signal cutoff from the truncation policy: max(16, ceil(|a|^2 + 6|a| + 10) + m_max),
/// raised further until both the coherent tail past dim - m_max and the relative
/// tail of a^dag^m_max |alpha> are within kTailTolerance.
std::size_t default_signal_dim(complex alpha, unsigned m_max = 0);

/// Idler cutoff used unless a stage overrides it.
inline constexpr std::size_t kDefaultIdlerDim = 4;

/// Probability mass of a coherent state on levels n >= dim.
double coherent_tail_mass(complex alpha, std::size_t dim);

PureState coherent_state(complex alpha, std::size_t dim, std::string label = "signal");
PureState fock_state(std::size_t n, std::size_t dim, std::string label = "signal");

/// a^dag^m |alpha> on a truncated mode, before normalization.
struct RaisedCoherent {
  Amplitudes amplitudes;
  /// Equals m! L_m(-|alpha|^2) up to the discarded tail.
  double norm_squared = 0.0;
  /// Fraction of the untruncated norm lying above the cutoff.
  double relative_tail = 0.0;
};

RaisedCoherent raised_coherent(complex alpha, unsigned m, std::size_t dim);

/// Photon-added coherent state |alpha, m>.
PureState pacs_state(complex alpha, unsigned m, std::size_t dim, std::string label = "signal");

// Operators ----------------------------------------------------------------

enum class Ladder { raise, lower };

struct LadderResult {
  Amplitudes amplitudes;
  double norm = 0.0;
  /// Input probability on the top level of the mode, lost when raising.
  double leakage = 0.0;

  bool truncation_warning() const noexcept { return leakage > kLeakageTolerance; }
};

/// Applies a or a^dag on one mode. The result is not renormalized.
LadderResult ladder_apply(const MultiMode& space, const Amplitudes& amplitudes, std::size_t mode,
                          Ladder kind);
LadderResult ladder_apply(const PureState& state, std::size_t mode, Ladder kind);

PureState tensor(const PureState& a, const PureState& b);

/// Joint photon-number distribution of the kept modes, flattened in the order of `keep`.
struct Marginal {
  std::vector<std::size_t> dims;
  std::vector<double> probabilities;

  double at(std::span<const std::size_t> levels) const;
};

Marginal partial_trace_to_marginal(const PureState& state, std::span<const std::size_t> keep);

/// Probability of finding mode `mode` in its highest Fock level.
double top_level_occupancy(const PureState& state, std::size_t mode);

complex inner_product(const PureState& bra, const PureState& ket);
double fidelity_pure(const PureState& a, const PureState& b);
double fidelity_ensemble(const WeightedEnsemble& ensemble, const PureState& reference);

}  // namespace pacs
