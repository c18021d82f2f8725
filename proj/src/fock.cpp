#include "pacs/fock.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "pacs/laguerre.hpp"

namespace pacs {

// MultiMode ----------------------------------------------------------------

MultiMode::MultiMode(std::vector<ModeSpec> modes) : modes_(std::move(modes)) {
  if (modes_.empty()) {
    throw std::invalid_argument("MultiMode: at least one mode is required");
  }
  std::set<std::string> labels;
  for (const auto& m : modes_) {
    if (m.dim < 2) {
      throw std::invalid_argument("MultiMode: mode '" + m.label + "' has dim < 2");
    }
    if (!labels.insert(m.label).second) {
      throw std::invalid_argument("MultiMode: duplicate mode label '" + m.label + "'");
    }
  }
  strides_.assign(modes_.size(), 1);
  std::size_t total = 1;
  for (std::size_t i = modes_.size(); i-- > 0;) {
    strides_[i] = total;
    if (total > std::numeric_limits<std::size_t>::max() / modes_[i].dim) {
      throw std::overflow_error("MultiMode: total dimension overflows");
    }
    total *= modes_[i].dim;
  }
  total_dim_ = total;
}

MultiMode MultiMode::single(std::size_t dim, std::string label) {
  return MultiMode({ModeSpec{dim, std::move(label)}});
}

std::vector<std::size_t> MultiMode::dims() const {
  std::vector<std::size_t> out;
  out.reserve(modes_.size());
  for (const auto& m : modes_) out.push_back(m.dim);
  return out;
}

std::size_t MultiMode::flat_index(std::span<const std::size_t> levels) const {
  if (levels.size() != modes_.size()) {
    throw std::invalid_argument("MultiMode::flat_index: wrong number of levels");
  }
  std::size_t flat = 0;
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (levels[i] >= modes_[i].dim) throw std::out_of_range("MultiMode::flat_index: level out of range");
    flat += levels[i] * strides_[i];
  }
  return flat;
}

std::vector<std::size_t> MultiMode::levels_of(std::size_t flat) const {
  std::vector<std::size_t> levels(modes_.size());
  for (std::size_t i = 0; i < modes_.size(); ++i) {
    levels[i] = (flat / strides_[i]) % modes_[i].dim;
  }
  return levels;
}

MultiMode MultiMode::concat(const MultiMode& other) const {
  std::vector<ModeSpec> all = modes_;
  all.insert(all.end(), other.modes_.begin(), other.modes_.end());
  return MultiMode(std::move(all));
}

MultiMode MultiMode::subspace(std::span<const std::size_t> keep) const {
  std::vector<ModeSpec> kept;
  for (auto i : keep) kept.push_back(modes_.at(i));
  return MultiMode(std::move(kept));
}

// PureState ----------------------------------------------------------------

PureState::PureState(MultiMode space, Amplitudes amplitudes)
    : space_(std::move(space)), amplitudes_(std::move(amplitudes)) {
  if (static_cast<std::size_t>(amplitudes_.size()) != space_.total_dim()) {
    throw std::invalid_argument("PureState: amplitude count does not match the space");
  }
  if (std::abs(amplitudes_.norm() - 1.0) > kNormTolerance) {
    throw std::invalid_argument("PureState: amplitudes are not normalized");
  }
}

PureState PureState::normalized(MultiMode space, Amplitudes amplitudes) {
  const double norm = amplitudes.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw std::domain_error("PureState::normalized: zero or non-finite vector");
  }
  amplitudes /= norm;
  return PureState(std::move(space), std::move(amplitudes));
}

PureState PureState::relabeled(std::vector<std::string> labels) const {
  if (labels.size() != space_.size()) throw std::invalid_argument("PureState::relabeled: wrong label count");
  std::vector<ModeSpec> modes = space_.modes();
  for (std::size_t i = 0; i < modes.size(); ++i) modes[i].label = std::move(labels[i]);
  return PureState(MultiMode(std::move(modes)), amplitudes_);
}

// WeightedEnsemble ---------------------------------------------------------

double WeightedEnsemble::total_weight() const {
  double sum = 0.0;
  for (const auto& b : branches) sum += b.weight;
  return sum;
}

void WeightedEnsemble::validate() const {
  for (const auto& b : branches) {
    if (!(b.weight >= 0.0)) throw std::invalid_argument("WeightedEnsemble: negative weight");
    if (!(b.state.space() == space)) {
      throw std::invalid_argument("WeightedEnsemble: branch space differs from ensemble space");
    }
  }
}

Eigen::MatrixXcd WeightedEnsemble::density_matrix() const {
  const auto d = static_cast<Eigen::Index>(space.total_dim());
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(d, d);
  for (const auto& b : branches) {
    rho += b.weight * b.state.amplitudes() * b.state.amplitudes().adjoint();
  }
  return rho;
}

// Reference states ---------------------------------------------------------

namespace {

// sum_{n >= first} p_n * w(n) with p_n Poisson(x) and w a positive weight
template <typename Weight>
double poisson_tail(double x, std::size_t first, Weight weight) {
  if (x == 0.0) return first == 0 ? weight(0) : 0.0;
  const double n0 = static_cast<double>(first);
  double log_p = -x + n0 * std::log(x) - std::lgamma(n0 + 1.0);
  double sum = 0.0;
  for (std::size_t n = first;; ++n) {
    const double term = std::exp(log_p) * weight(n);
    sum += term;
    if (static_cast<double>(n) > x && term <= 1e-18 * sum) break;
    if (term == 0.0 && static_cast<double>(n) > x) break;
    log_p += std::log(x) - std::log(static_cast<double>(n) + 1.0);
  }
  return sum;
}

double falling_weight(std::size_t n, unsigned m) {
  double w = 1.0;
  for (unsigned k = 1; k <= m; ++k) w *= static_cast<double>(n + k);
  return w;
}

Amplitudes coherent_amplitudes(complex alpha, std::size_t dim) {
  Amplitudes c(static_cast<Eigen::Index>(dim));
  c[0] = std::exp(-0.5 * std::norm(alpha));
  for (std::size_t n = 1; n < dim; ++n) {
    c[static_cast<Eigen::Index>(n)] =
        c[static_cast<Eigen::Index>(n - 1)] * alpha / std::sqrt(static_cast<double>(n));
  }
  return c;
}

}  // namespace

double coherent_tail_mass(complex alpha, std::size_t dim) {
  return poisson_tail(std::norm(alpha), dim, [](std::size_t) { return 1.0; });
}

std::size_t default_signal_dim(complex alpha, unsigned m_max) {
  const double a = std::abs(alpha);
  const auto base = static_cast<std::size_t>(std::ceil(a * a + 6.0 * a + 10.0));
  std::size_t dim = std::max<std::size_t>(16, base + m_max);
  // the formula runs slightly short for |alpha| >= 2 once photons are added
  while (coherent_tail_mass(alpha, dim - m_max) > kTailTolerance ||
         raised_coherent(alpha, m_max, dim).relative_tail > kTailTolerance) {
    ++dim;
  }
  return dim;
}

PureState coherent_state(complex alpha, std::size_t dim, std::string label) {
  if (dim < 2) throw std::invalid_argument("coherent_state: dim must be >= 2");
  const double tail = coherent_tail_mass(alpha, dim);
  if (tail > kTailTolerance) {
    std::size_t suggested = dim;
    while (coherent_tail_mass(alpha, suggested) > kTailTolerance) ++suggested;
    throw TruncationError("coherent_state: tail mass " + std::to_string(tail) + " above cutoff " +
                              std::to_string(dim) + "; use dim >= " + std::to_string(suggested),
                          suggested);
  }
  return PureState::normalized(MultiMode::single(dim, std::move(label)), coherent_amplitudes(alpha, dim));
}

PureState fock_state(std::size_t n, std::size_t dim, std::string label) {
  if (n >= dim) {
    throw std::out_of_range("fock_state: level " + std::to_string(n) + " outside cutoff " +
                            std::to_string(dim));
  }
  Amplitudes amps = Amplitudes::Zero(static_cast<Eigen::Index>(dim));
  amps[static_cast<Eigen::Index>(n)] = 1.0;
  return PureState(MultiMode::single(dim, std::move(label)), std::move(amps));
}

RaisedCoherent raised_coherent(complex alpha, unsigned m, std::size_t dim) {
  if (dim < 2) throw std::invalid_argument("raised_coherent: dim must be >= 2");
  const double x = std::norm(alpha);
  RaisedCoherent out;
  out.amplitudes = Amplitudes::Zero(static_cast<Eigen::Index>(dim));
  if (dim > m) {
    const Amplitudes c = coherent_amplitudes(alpha, dim - m);
    for (std::size_t n = 0; n + m < dim; ++n) {
      out.amplitudes[static_cast<Eigen::Index>(n + m)] =
          c[static_cast<Eigen::Index>(n)] * std::sqrt(falling_weight(n, m));
    }
  }
  out.norm_squared = out.amplitudes.squaredNorm();
  const std::size_t first_lost = dim > m ? dim - m : 0;
  const double tail = poisson_tail(x, first_lost, [m](std::size_t n) { return falling_weight(n, m); });
  double full = 1.0;
  for (unsigned k = 1; k <= m; ++k) full *= k;
  full *= laguerre(m, -x);
  out.relative_tail = tail / full;
  return out;
}

PureState pacs_state(complex alpha, unsigned m, std::size_t dim, std::string label) {
  RaisedCoherent raised = raised_coherent(alpha, m, dim);
  if (raised.relative_tail > kTailTolerance) {
    std::size_t suggested = dim;
    while (raised_coherent(alpha, m, suggested).relative_tail > kTailTolerance) ++suggested;
    throw TruncationError("pacs_state: tail " + std::to_string(raised.relative_tail) +
                              " above cutoff " + std::to_string(dim) + "; use dim >= " +
                              std::to_string(suggested),
                          suggested);
  }
  return PureState::normalized(MultiMode::single(dim, std::move(label)), std::move(raised.amplitudes));
}

// Operators ----------------------------------------------------------------

LadderResult ladder_apply(const MultiMode& space, const Amplitudes& amplitudes, std::size_t mode,
                          Ladder kind) {
  if (mode >= space.size()) throw std::out_of_range("ladder_apply: mode index out of range");
  const std::size_t dim = space[mode].dim;
  const std::size_t stride = space.stride(mode);
  LadderResult out;
  out.amplitudes = Amplitudes::Zero(amplitudes.size());
  for (Eigen::Index flat = 0; flat < amplitudes.size(); ++flat) {
    const complex a = amplitudes[flat];
    if (a == complex{}) continue;
    const std::size_t level = (static_cast<std::size_t>(flat) / stride) % dim;
    if (kind == Ladder::raise) {
      if (level + 1 < dim) {
        out.amplitudes[flat + static_cast<Eigen::Index>(stride)] +=
            std::sqrt(static_cast<double>(level + 1)) * a;
      } else {
        out.leakage += std::norm(a);
      }
    } else if (level > 0) {
      out.amplitudes[flat - static_cast<Eigen::Index>(stride)] += std::sqrt(static_cast<double>(level)) * a;
    }
  }
  out.norm = out.amplitudes.norm();
  return out;
}

LadderResult ladder_apply(const PureState& state, std::size_t mode, Ladder kind) {
  return ladder_apply(state.space(), state.amplitudes(), mode, kind);
}

PureState tensor(const PureState& a, const PureState& b) {
  const Eigen::Index da = a.amplitudes().size();
  const Eigen::Index db = b.amplitudes().size();
  Amplitudes out(da * db);
  for (Eigen::Index i = 0; i < da; ++i) {
    out.segment(i * db, db) = a.amplitudes()[i] * b.amplitudes();
  }
  return PureState::normalized(a.space().concat(b.space()), std::move(out));
}

double Marginal::at(std::span<const std::size_t> levels) const {
  if (levels.size() != dims.size()) throw std::invalid_argument("Marginal::at: wrong number of levels");
  std::size_t flat = 0;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (levels[i] >= dims[i]) throw std::out_of_range("Marginal::at: level out of range");
    flat = flat * dims[i] + levels[i];
  }
  return probabilities[flat];
}

Marginal partial_trace_to_marginal(const PureState& state, std::span<const std::size_t> keep) {
  const MultiMode& space = state.space();
  std::set<std::size_t> seen;
  for (auto k : keep) {
    if (k >= space.size()) throw std::out_of_range("partial_trace_to_marginal: mode index out of range");
    if (!seen.insert(k).second) throw std::invalid_argument("partial_trace_to_marginal: repeated mode");
  }
  Marginal out;
  std::size_t total = 1;
  for (auto k : keep) {
    out.dims.push_back(space[k].dim);
    total *= space[k].dim;
  }
  out.probabilities.assign(total, 0.0);
  const Amplitudes& amps = state.amplitudes();
  for (std::size_t flat = 0; flat < space.total_dim(); ++flat) {
    std::size_t kept = 0;
    for (auto k : keep) kept = kept * space[k].dim + (flat / space.stride(k)) % space[k].dim;
    out.probabilities[kept] += std::norm(amps[static_cast<Eigen::Index>(flat)]);
  }
  return out;
}

double top_level_occupancy(const PureState& state, std::size_t mode) {
  const std::size_t keep[] = {mode};
  return partial_trace_to_marginal(state, keep).probabilities.back();
}

complex inner_product(const PureState& bra, const PureState& ket) {
  if (!(bra.space().dims() == ket.space().dims())) {
    throw std::invalid_argument("inner_product: states live on different spaces");
  }
  return bra.amplitudes().dot(ket.amplitudes());
}

double fidelity_pure(const PureState& a, const PureState& b) {
  return std::min(1.0, std::norm(inner_product(a, b)));
}

double fidelity_ensemble(const WeightedEnsemble& ensemble, const PureState& reference) {
  double f = 0.0;
  for (const auto& b : ensemble.branches) f += b.weight * std::norm(inner_product(reference, b.state));
  return std::clamp(f, 0.0, 1.0);
}

}  // namespace pacs
