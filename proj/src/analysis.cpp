#include "pacs/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <set>
#include <stdexcept>
#include <string>
#include <thread>

namespace pacs {

ScalingFit fit_power_law(std::span<const std::pair<double, double>> samples) {
  if (samples.size() < 3) throw std::invalid_argument("fit_power_law: at least three samples are required");
  std::set<double> distinct;
  for (const auto& [lambda, p] : samples) {
    if (!(lambda > 0.0) || !(p > 0.0) || !std::isfinite(lambda) || !std::isfinite(p)) {
      throw std::invalid_argument("fit_power_law: lambda and p must be positive and finite");
    }
    if (!distinct.insert(lambda).second) throw std::invalid_argument("fit_power_law: repeated lambda value");
  }

  const double n = static_cast<double>(samples.size());
  double mx = 0.0, my = 0.0;
  for (const auto& [lambda, p] : samples) {
    mx += std::log(lambda);
    my += std::log(p);
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& [lambda, p] : samples) {
    const double dx = std::log(lambda) - mx;
    const double dy = std::log(p) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  ScalingFit fit;
  fit.exponent = sxy / sxx;
  fit.prefactor = std::exp(my - fit.exponent * mx);
  const double residual = std::max(0.0, syy - fit.exponent * sxy);
  fit.r_squared = syy > 0.0 ? std::clamp(1.0 - residual / syy, 0.0, 1.0) : 1.0;
  fit.samples.assign(samples.begin(), samples.end());
  return fit;
}

PhotonStatistics photon_statistics(const PureState& state, std::size_t mode) {
  const std::size_t keep[] = {mode};
  PhotonStatistics stats;
  stats.distribution = partial_trace_to_marginal(state, keep).probabilities;
  double m1 = 0.0, m2 = 0.0;
  for (std::size_t n = 0; n < stats.distribution.size(); ++n) {
    const double p = stats.distribution[n];
    m1 += p * static_cast<double>(n);
    m2 += p * static_cast<double>(n * n);
  }
  stats.mean = m1;
  stats.variance = std::max(0.0, m2 - m1 * m1);
  if (m1 > 0.0) stats.mandel_q = stats.variance / m1 - 1.0;
  return stats;
}

GridAxis GridAxis::symmetric(double range, double step) {
  if (!(step > 0.0) || !(range >= 0.0)) throw std::invalid_argument("grid: need step > 0 and range >= 0");
  const auto count = static_cast<std::size_t>(std::llround(2.0 * range / step)) + 1;
  return {0.0 - range, step, count};
}

double WignerGrid::integral() const { return values.sum() * x_axis.step * p_axis.step; }

WignerPoint wigner_point(const PureState& state, double x, double p) {
  if (state.space().size() != 1) throw std::invalid_argument("wigner: single-mode state expected");
  const std::size_t d = state.space()[0].dim;
  const complex gamma = -complex(x, p) / std::numbers::sqrt2;  // D(-beta)
  const double g = std::abs(gamma);
  const double reach = g + std::sqrt(static_cast<double>(d));
  const auto rows = static_cast<std::size_t>(std::ceil(reach * reach + 10.0 * reach + 20.0));

  // column n of <m|D(gamma)|n>, built from column n-1:
  //   D_{m,0} = gamma / sqrt(m) D_{m-1,0}
  //   D_{m,n} = (sqrt(m) D_{m-1,n-1} - conj(gamma) D_{m,n-1}) / sqrt(n)
  std::vector<complex> column(rows), previous(rows);
  std::vector<complex> displaced(rows, complex{});
  column[0] = std::exp(-0.5 * g * g);
  for (std::size_t m = 1; m < rows; ++m) column[m] = column[m - 1] * gamma / std::sqrt(static_cast<double>(m));
  for (std::size_t n = 0; n < d; ++n) {
    if (n > 0) {
      std::swap(column, previous);
      const double inv = 1.0 / std::sqrt(static_cast<double>(n));
      column[0] = -std::conj(gamma) * previous[0] * inv;
      for (std::size_t m = 1; m < rows; ++m) {
        column[m] = (std::sqrt(static_cast<double>(m)) * previous[m - 1] - std::conj(gamma) * previous[m]) * inv;
      }
    }
    const complex psi_n = state[n];
    if (psi_n == complex{}) continue;
    for (std::size_t m = 0; m < rows; ++m) displaced[m] += column[m] * psi_n;
  }

  double parity = 0.0, mass = 0.0;
  for (std::size_t m = 0; m < rows; ++m) {
    const double q = std::norm(displaced[m]);
    parity += (m % 2 == 0) ? q : -q;
    mass += q;
  }
  return {parity / std::numbers::pi, std::max(0.0, 1.0 - mass)};
}

WignerGrid wigner(const PureState& state, const GridAxis& x_axis, const GridAxis& p_axis) {
  if (state.space().size() != 1) throw std::invalid_argument("wigner: single-mode state expected");
  WignerGrid grid{x_axis, p_axis,
                  Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p_axis.count), static_cast<Eigen::Index>(x_axis.count)),
                  0.0};
  const std::size_t workers = std::min(worker_count(), p_axis.count);
  std::vector<double> tails(workers, 0.0);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t k = w; k < p_axis.count; k += workers) {
        for (std::size_t l = 0; l < x_axis.count; ++l) {
          const auto pt = wigner_point(state, x_axis.at(l), p_axis.at(k));
          grid.values(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l)) = pt.value;
          tails[w] = std::max(tails[w], pt.parity_tail);
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (double t : tails) grid.max_parity_tail = std::max(grid.max_parity_tail, t);
  return grid;
}

PureState w_state_reference(std::size_t n_modes, std::size_t dim) {
  if (n_modes == 0) throw std::invalid_argument("w_state_reference: need at least one mode");
  std::vector<ModeSpec> modes;
  for (std::size_t j = 0; j < n_modes; ++j) modes.push_back({dim, "idler-" + std::to_string(j + 1)});
  MultiMode space(std::move(modes));
  Amplitudes amps = Amplitudes::Zero(static_cast<Eigen::Index>(space.total_dim()));
  const double c = 1.0 / std::sqrt(static_cast<double>(n_modes));
  for (std::size_t j = 0; j < n_modes; ++j) amps[static_cast<Eigen::Index>(space.stride(j))] = c;
  return PureState::normalized(std::move(space), std::move(amps));
}

std::size_t worker_count() {
  if (const char* env = std::getenv("PACS_SIM_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  return std::max(1U, std::thread::hardware_concurrency());
}

}  // namespace pacs
