#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "pacs/fock.hpp"

namespace pacs {

/// p = prefactor * lambda^exponent, fitted by least squares in log-log space.
struct ScalingFit {
  double exponent = 0.0;
  double prefactor = 0.0;
  double r_squared = 0.0;
  std::vector<std::pair<double, double>> samples;
};

/// Needs at least three samples with distinct positive lambda and positive p;
/// throws std::invalid_argument otherwise.
ScalingFit fit_power_law(std::span<const std::pair<double, double>> samples);

struct PhotonStatistics {
  std::vector<double> distribution;
  double mean = 0.0;
  double variance = 0.0;
  /// (<n^2> - <n>^2) / <n> - 1; undefined for the vacuum.
  std::optional<double> mandel_q;
};

PhotonStatistics photon_statistics(const PureState& state, std::size_t mode);

/// Uniform grid min, min + step, ..., count points.
struct GridAxis {
  double min = 0.0;
  double step = 1.0;
  std::size_t count = 1;

  /// Symmetric axis covering [-range, range].
  static GridAxis symmetric(double range, double step);
  double at(std::size_t k) const noexcept { return min + step * static_cast<double>(k); }
  double max() const noexcept { return at(count - 1); }
};

/// W(x, p) sampled on a grid. values(k, l) holds W(x_axis.at(l), p_axis.at(k)).
struct WignerGrid {
  GridAxis x_axis;
  GridAxis p_axis;
  Eigen::MatrixXd values;
  /// Largest probability the parity sum discarded at any grid point.
  double max_parity_tail = 0.0;

  double integral() const;
  double min() const { return values.minCoeff(); }
  bool truncation_warning() const noexcept { return max_parity_tail > 1e-8; }
};

/// Quadratures with x = (a + a^dag)/sqrt(2), so that the vacuum has W(0,0) = 1/pi.
struct WignerPoint {
  double value = 0.0;
  double parity_tail = 0.0;
};

/// W(x, p) = (1/pi) sum_n (-1)^n |<n| D(-beta) |psi>|^2 with beta = (x + i p)/sqrt(2).
WignerPoint wigner_point(const PureState& state, double x, double p);

/// Grid evaluation; points are split across worker threads (see worker_count()).
WignerGrid wigner(const PureState& state, const GridAxis& x_axis, const GridAxis& p_axis);

/// (1/sqrt(N)) sum_j |0..1_j..0> over N modes of the given cutoff.
PureState w_state_reference(std::size_t n_modes, std::size_t dim = 2);

/// Worker threads for parallel maps: PACS_SIM_THREADS if set, else the hardware count.
std::size_t worker_count();

}  // namespace pacs
