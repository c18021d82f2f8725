#include "pacs/dynamics.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace pacs {

// ChainConfig --------------------------------------------------------------

ChainConfig ChainConfig::uniform(complex alpha, double lambda, std::size_t n_stages, std::size_t idler_dim) {
  ChainConfig config;
  config.alpha = alpha;
  config.stages.assign(n_stages, StageParams{lambda, idler_dim});
  config.signal_dim = default_signal_dim(alpha, static_cast<unsigned>(n_stages));
  return config;
}

void ChainConfig::validate() const {
  if (stages.empty()) throw std::invalid_argument("chain: at least one stage is required");
  if (signal_dim < 2) throw std::invalid_argument("chain: signal_dim must be >= 2");
  if (!std::isfinite(alpha.real()) || !std::isfinite(alpha.imag())) {
    throw std::invalid_argument("chain: alpha must be finite");
  }
  for (std::size_t j = 0; j < stages.size(); ++j) {
    const auto& st = stages[j];
    if (!std::isfinite(st.lambda) || st.lambda < 0.0) {
      throw std::invalid_argument("chain: stage " + std::to_string(j + 1) + " lambda must be finite and >= 0");
    }
    if (st.idler_dim < 2) {
      throw std::invalid_argument("chain: stage " + std::to_string(j + 1) + " idler_dim must be >= 2");
    }
  }
}

std::vector<std::string> ChainConfig::warnings() const {
  std::vector<std::string> out;
  for (std::size_t j = 0; j < stages.size(); ++j) {
    if (stages[j].lambda > kPerturbativeLambda) {
      std::ostringstream msg;
      msg << "stage " << j + 1 << ": lambda = " << stages[j].lambda
          << " is outside the perturbative regime (> " << kPerturbativeLambda << ")";
      out.push_back(msg.str());
    }
  }
  const std::size_t policy = default_signal_dim(alpha, static_cast<unsigned>(stages.size()));
  if (signal_dim < policy) {
    out.push_back("signal_dim " + std::to_string(signal_dim) + " is below the truncation policy value " +
                  std::to_string(policy));
  }
  return out;
}

MultiMode ChainConfig::space() const {
  std::vector<ModeSpec> modes{{signal_dim, "signal"}};
  for (std::size_t j = 0; j < stages.size(); ++j) {
    modes.push_back({stages[j].idler_dim, "idler-" + std::to_string(j + 1)});
  }
  return MultiMode(std::move(modes));
}

// Generator and unitary ----------------------------------------------------

Eigen::MatrixXd stage_generator(double lambda, std::size_t signal_dim, std::size_t idler_dim) {
  if (signal_dim < 2 || idler_dim < 2) throw std::invalid_argument("stage_generator: dims must be >= 2");
  const auto d = static_cast<Eigen::Index>(signal_dim * idler_dim);
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(d, d);
  for (std::size_t s = 0; s + 1 < signal_dim; ++s) {
    for (std::size_t i = 0; i + 1 < idler_dim; ++i) {
      const auto lo = static_cast<Eigen::Index>(s * idler_dim + i);
      const auto hi = static_cast<Eigen::Index>((s + 1) * idler_dim + i + 1);
      const double x = lambda * std::sqrt(static_cast<double>((s + 1) * (i + 1)));
      g(hi, lo) = x;   // a_s^dag a_i^dag
      g(lo, hi) = -x;  // -a_s a_i
    }
  }
  return g;
}

StageUnitary::StageUnitary(double lambda, std::size_t signal_dim, std::size_t idler_dim)
    : lambda_(lambda), signal_dim_(signal_dim), idler_dim_(idler_dim) {
  if (signal_dim < 2 || idler_dim < 2) throw std::invalid_argument("stage_unitary: dims must be >= 2");
  if (!std::isfinite(lambda)) throw std::invalid_argument("stage_unitary: lambda must be finite");

  const auto ds = static_cast<long>(signal_dim);
  const auto di = static_cast<long>(idler_dim);
  sectors_.reserve(signal_dim + idler_dim - 1);
  for (long diff = -(di - 1); diff <= ds - 1; ++diff) {
    Sector sector;
    std::vector<double> couplings;
    for (long i = std::max(0L, -diff); i < di && i + diff < ds; ++i) {
      const long s = i + diff;
      sector.pair_index.push_back(static_cast<std::size_t>(s * di + i));
      if (i + 1 < di && s + 1 < ds) couplings.push_back(lambda * std::sqrt(static_cast<double>((s + 1) * (i + 1))));
    }
    const auto n = static_cast<Eigen::Index>(sector.pair_index.size());
    if (n == 1) {
      sector.block = Eigen::MatrixXd::Identity(1, 1);
      sectors_.push_back(std::move(sector));
      continue;
    }
    // With Q = diag(i^k), Q^dag G Q = -i T where T is real symmetric tridiagonal
    // with the same couplings, so exp(G)_{jk} = Re[i^(j-k) (W e^{-i mu} W^T)_{jk}].
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd sub = Eigen::Map<const Eigen::VectorXd>(couplings.data(), n - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
    eig.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    if (eig.info() != Eigen::Success) throw std::runtime_error("stage_unitary: eigensolver failed");
    const Eigen::MatrixXd& w = eig.eigenvectors();
    const Eigen::ArrayXd mu = eig.eigenvalues().array();
    const Eigen::MatrixXd cos_part = w * mu.cos().matrix().asDiagonal() * w.transpose();
    const Eigen::MatrixXd sin_part = w * mu.sin().matrix().asDiagonal() * w.transpose();
    sector.block.resize(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index k = 0; k < n; ++k) {
        switch (((j - k) % 4 + 4) % 4) {
          case 0: sector.block(j, k) = cos_part(j, k); break;
          case 1: sector.block(j, k) = sin_part(j, k); break;
          case 2: sector.block(j, k) = -cos_part(j, k); break;
          default: sector.block(j, k) = -sin_part(j, k); break;
        }
      }
    }
    sectors_.push_back(std::move(sector));
  }
}

const StageUnitary::Sector& StageUnitary::sector_of(std::size_t s, std::size_t i) const {
  return sectors_[s + idler_dim_ - 1 - i];
}

double StageUnitary::element(std::size_t s_out, std::size_t i_out, std::size_t s_in, std::size_t i_in) const {
  if (s_out >= signal_dim_ || s_in >= signal_dim_ || i_out >= idler_dim_ || i_in >= idler_dim_) {
    throw std::out_of_range("StageUnitary::element: level out of range");
  }
  if (s_out + i_in != s_in + i_out) return 0.0;
  const Sector& sector = sector_of(s_in, i_in);
  const std::size_t first_i = s_in >= i_in ? 0 : i_in - s_in;
  return sector.block(static_cast<Eigen::Index>(i_out - first_i), static_cast<Eigen::Index>(i_in - first_i));
}

void StageUnitary::apply(Eigen::Ref<Amplitudes> pair) const {
  if (static_cast<std::size_t>(pair.size()) != pair_dim()) {
    throw std::invalid_argument("StageUnitary::apply: vector size does not match signal x idler");
  }
  Eigen::VectorXd re, im;
  for (const auto& sector : sectors_) {
    const auto n = static_cast<Eigen::Index>(sector.pair_index.size());
    re.resize(n);
    im.resize(n);
    for (Eigen::Index k = 0; k < n; ++k) {
      const complex v = pair[static_cast<Eigen::Index>(sector.pair_index[static_cast<std::size_t>(k)])];
      re[k] = v.real();
      im[k] = v.imag();
    }
    const Eigen::VectorXd out_re = sector.block * re;
    const Eigen::VectorXd out_im = sector.block * im;
    for (Eigen::Index k = 0; k < n; ++k) {
      pair[static_cast<Eigen::Index>(sector.pair_index[static_cast<std::size_t>(k)])] = complex(out_re[k], out_im[k]);
    }
  }
}

Eigen::MatrixXd StageUnitary::to_dense() const {
  const auto d = static_cast<Eigen::Index>(pair_dim());
  Eigen::MatrixXd u = Eigen::MatrixXd::Zero(d, d);
  for (const auto& sector : sectors_) {
    const std::size_t n = sector.pair_index.size();
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k = 0; k < n; ++k) {
        u(static_cast<Eigen::Index>(sector.pair_index[j]), static_cast<Eigen::Index>(sector.pair_index[k])) =
            sector.block(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k));
      }
    }
  }
  return u;
}

namespace {

double block_defect(const Eigen::MatrixXd& block, Eigen::Index keep) {
  if (keep <= 0) return 0.0;
  // columns outside the kept range still contribute to the kept rows of U^T U
  const Eigen::MatrixXd gram = block.leftCols(keep).transpose() * block.leftCols(keep);
  return (gram - Eigen::MatrixXd::Identity(keep, keep)).cwiseAbs().maxCoeff();
}

}  // namespace

double StageUnitary::unitarity_defect() const {
  double worst = 0.0;
  for (const auto& sector : sectors_) worst = std::max(worst, block_defect(sector.block, sector.block.cols()));
  return worst;
}

double StageUnitary::low_occupancy_defect() const {
  double worst = 0.0;
  const std::size_t limit = signal_dim_ / 2;
  for (const auto& sector : sectors_) {
    // pair_index is ordered by increasing i, hence increasing n_s + n_i
    Eigen::Index keep = 0;
    for (auto p : sector.pair_index) {
      if (p / idler_dim_ + p % idler_dim_ <= limit) ++keep;
    }
    worst = std::max(worst, block_defect(sector.block, keep));
  }
  return worst;
}

StageUnitary stage_unitary(double lambda, std::size_t signal_dim, std::size_t idler_dim) {
  return StageUnitary(lambda, signal_dim, idler_dim);
}

PureState apply_stage(const PureState& state, const StageUnitary& stage, std::size_t idler_mode) {
  const MultiMode& space = state.space();
  if (idler_mode == 0 || idler_mode >= space.size()) {
    throw std::out_of_range("apply_stage: idler mode must be one of modes 1..N");
  }
  const std::size_t ds = space[0].dim;
  const std::size_t di = space[idler_mode].dim;
  if (ds != stage.signal_dim() || di != stage.idler_dim()) {
    throw std::invalid_argument("apply_stage: stage dims do not match the state");
  }
  const std::size_t s_stride = space.stride(0);
  const std::size_t i_stride = space.stride(idler_mode);

  Amplitudes amps = state.amplitudes();
  Amplitudes pair(static_cast<Eigen::Index>(ds * di));
  for (std::size_t base = 0; base < s_stride; ++base) {
    // base ranges over offsets with the signal at |0>; skip those with the idler off |0>
    if ((base / i_stride) % di != 0) continue;
    for (std::size_t s = 0; s < ds; ++s) {
      for (std::size_t i = 0; i < di; ++i) {
        pair[static_cast<Eigen::Index>(s * di + i)] = amps[static_cast<Eigen::Index>(base + s * s_stride + i * i_stride)];
      }
    }
    stage.apply(pair);
    for (std::size_t s = 0; s < ds; ++s) {
      for (std::size_t i = 0; i < di; ++i) {
        amps[static_cast<Eigen::Index>(base + s * s_stride + i * i_stride)] = pair[static_cast<Eigen::Index>(s * di + i)];
      }
    }
  }
  return PureState::normalized(space, std::move(amps));
}

PureState perturbative_output(complex alpha, double lambda, int order, std::size_t signal_dim,
                              std::size_t idler_dim) {
  if (order != 1 && order != 2) throw std::invalid_argument("perturbative_output: order must be 1 or 2");
  if (!(lambda >= 0.0) || lambda >= kPerturbativeLambda) {
    throw std::invalid_argument("perturbative_output: lambda must lie in [0, 0.3)");
  }
  const PureState input = tensor(coherent_state(alpha, signal_dim, "signal"), fock_state(0, idler_dim, "idler"));
  const MultiMode& space = input.space();

  // K = a_s^dag a_i^dag - a_s a_i
  auto pair_operator = [&space](const Amplitudes& x) {
    const auto up = ladder_apply(space, ladder_apply(space, x, 1, Ladder::raise).amplitudes, 0, Ladder::raise);
    const auto down = ladder_apply(space, ladder_apply(space, x, 1, Ladder::lower).amplitudes, 0, Ladder::lower);
    return Amplitudes(up.amplitudes - down.amplitudes);
  };

  const Amplitudes k1 = pair_operator(input.amplitudes());
  Amplitudes out = input.amplitudes() + lambda * k1;
  if (order == 2) out += 0.5 * lambda * lambda * pair_operator(k1);
  return PureState::normalized(space, std::move(out));
}

PureState run_chain_full(const ChainConfig& config, std::size_t amplitude_budget) {
  config.validate();
  std::size_t total = config.signal_dim;
  for (const auto& st : config.stages) {
    if (total > amplitude_budget / st.idler_dim) {
      throw BudgetError("run_chain_full: joint state exceeds the budget of " + std::to_string(amplitude_budget) +
                        " amplitudes; use run_chain_sequential");
    }
    total *= st.idler_dim;
  }
  const MultiMode space = config.space();
  const PureState seed = coherent_state(config.alpha, config.signal_dim);
  Amplitudes amps = Amplitudes::Zero(static_cast<Eigen::Index>(total));
  for (std::size_t s = 0; s < config.signal_dim; ++s) {
    amps[static_cast<Eigen::Index>(s * space.stride(0))] = seed[s];
  }
  PureState state(space, std::move(amps));
  for (std::size_t j = 0; j < config.stages.size(); ++j) {
    const StageUnitary u(config.stages[j].lambda, config.signal_dim, config.stages[j].idler_dim);
    state = apply_stage(state, u, j + 1);
  }
  return state;
}

namespace {

struct SignalBranch {
  double weight;
  Amplitudes amplitudes;
};

std::vector<SignalBranch> compress(const std::vector<SignalBranch>& branches, Eigen::Index dim) {
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(dim, dim);
  double trace = 0.0;
  for (const auto& b : branches) {
    rho += b.weight * b.amplitudes * b.amplitudes.adjoint();
    trace += b.weight;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(rho);
  if (eig.info() != Eigen::Success) throw std::runtime_error("run_chain_sequential: eigensolver failed");
  std::vector<SignalBranch> out;
  for (Eigen::Index k = dim; k-- > 0;) {
    const double w = eig.eigenvalues()[k];
    if (w <= 1e-16 * trace) break;
    out.push_back({w, eig.eigenvectors().col(k)});
  }
  return out;
}

}  // namespace

Conditioned run_chain_sequential(const ChainConfig& config, const DetectorModel& detector,
                                 const ClickPattern& pattern) {
  config.validate();
  detector.validate();
  if (pattern.size() != config.n_stages()) {
    throw std::invalid_argument("run_chain_sequential: pattern length " + std::to_string(pattern.size()) +
                                " does not match " + std::to_string(config.n_stages()) + " stages");
  }
  const std::size_t ds = config.signal_dim;
  const MultiMode signal_space = MultiMode::single(ds, "signal");

  std::vector<SignalBranch> branches{{1.0, coherent_state(config.alpha, ds).amplitudes()}};
  for (std::size_t j = 0; j < config.stages.size(); ++j) {
    const std::size_t di = config.stages[j].idler_dim;
    const StageUnitary u(config.stages[j].lambda, ds, di);
    std::vector<double> povm(di);
    for (std::size_t n = 0; n < di; ++n) povm[n] = outcome_probability(detector, pattern.clicks[j], n);

    std::vector<SignalBranch> next;
    Amplitudes pair(static_cast<Eigen::Index>(ds * di));
    for (const auto& b : branches) {
      pair.setZero();
      for (std::size_t s = 0; s < ds; ++s) pair[static_cast<Eigen::Index>(s * di)] = b.amplitudes[static_cast<Eigen::Index>(s)];
      u.apply(pair);
      for (std::size_t n = 0; n < di; ++n) {
        if (povm[n] == 0.0) continue;
        Amplitudes signal(static_cast<Eigen::Index>(ds));
        for (std::size_t s = 0; s < ds; ++s) signal[static_cast<Eigen::Index>(s)] = pair[static_cast<Eigen::Index>(s * di + n)];
        const double p = signal.squaredNorm();
        if (p == 0.0) continue;
        next.push_back({b.weight * povm[n] * p, signal / std::sqrt(p)});
      }
    }
    if (next.size() > ds) next = compress(next, static_cast<Eigen::Index>(ds));
    branches = std::move(next);
    if (branches.empty()) break;
  }

  double probability = 0.0;
  for (const auto& b : branches) probability += b.weight;
  if (probability < kImpossibleProbability) return {probability, std::nullopt};

  WeightedEnsemble ensemble{signal_space, {}};
  ensemble.branches.reserve(branches.size());
  for (auto& b : branches) {
    ensemble.branches.push_back({b.weight / probability, PureState::normalized(signal_space, std::move(b.amplitudes))});
  }
  return {probability, std::move(ensemble)};
}

}  // namespace pacs
