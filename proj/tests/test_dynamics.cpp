#include <array>
#include <cmath>
#include <random>
#include <stdexcept>

#include "doctest.h"
#include "pacs/detection.hpp"
#include "pacs/dynamics.hpp"

using namespace pacs;

namespace {

// Independent oracle: Taylor series with scaling and squaring.
Eigen::MatrixXd expm_taylor(const Eigen::MatrixXd& g) {
  const double norm = g.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  while (norm / std::ldexp(1.0, squarings) > 0.25) ++squarings;
  const Eigen::MatrixXd a = g / std::ldexp(1.0, squarings);
  Eigen::MatrixXd term = Eigen::MatrixXd::Identity(g.rows(), g.cols());
  Eigen::MatrixXd sum = term;
  for (int k = 1; k <= 24; ++k) {
    term = term * a / k;
    sum += term;
  }
  for (int s = 0; s < squarings; ++s) sum = sum * sum;
  return sum;
}

// Signal amplitudes of a joint (signal, idler-1, ..., idler-N) state at fixed idler levels.
Amplitudes signal_component(const PureState& joint, const std::vector<std::size_t>& idlers) {
  const MultiMode& space = joint.space();
  const std::size_t ds = space[0].dim;
  Amplitudes v(static_cast<Eigen::Index>(ds));
  std::vector<std::size_t> levels(space.size());
  for (std::size_t j = 0; j < idlers.size(); ++j) levels[j + 1] = idlers[j];
  for (std::size_t s = 0; s < ds; ++s) {
    levels[0] = s;
    v[static_cast<Eigen::Index>(s)] = joint[space.flat_index(levels)];
  }
  return v;
}

Amplitudes raise_times(const PureState& s, unsigned m) {
  Amplitudes v = s.amplitudes();
  for (unsigned k = 0; k < m; ++k) v = ladder_apply(s.space(), v, 0, Ladder::raise).amplitudes;
  return v;
}

ChainConfig chain(complex alpha, std::vector<double> lambdas, std::size_t idler_dim = kDefaultIdlerDim) {
  ChainConfig c;
  c.alpha = alpha;
  for (double l : lambdas) c.stages.push_back({l, idler_dim});
  c.signal_dim = default_signal_dim(alpha, static_cast<unsigned>(lambdas.size()));
  return c;
}

}  // namespace

TEST_CASE("stage generator") {
  CHECK(stage_generator(0.0, 5, 3).isZero());
  const Eigen::MatrixXd g = stage_generator(0.07, 6, 4);
  CHECK((g + g.transpose()).cwiseAbs().maxCoeff() == 0.0);
  // <1,1|G|0,0> with index s * idler_dim + i
  CHECK(g(1 * 4 + 1, 0) == doctest::Approx(0.07));
  // <3,2|G|2,1> = lambda sqrt(3) sqrt(2)
  CHECK(g(3 * 4 + 2, 2 * 4 + 1) == doctest::Approx(0.07 * std::sqrt(6.0)));
  CHECK_THROWS_AS(stage_generator(0.1, 1, 4), std::invalid_argument);
}

TEST_CASE("stage unitary matches a Taylor-series exponential") {
  for (double lambda : {0.0, 0.05, 0.3, 1.0}) {
    for (auto [ds, di] : {std::pair<std::size_t, std::size_t>{6, 3}, {12, 4}, {9, 9}}) {
      const Eigen::MatrixXd oracle = expm_taylor(stage_generator(lambda, ds, di));
      const Eigen::MatrixXd u = stage_unitary(lambda, ds, di).to_dense();
      CHECK((u - oracle).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
  CHECK(stage_unitary(0.0, 5, 3).to_dense().isIdentity(0.0));
}

TEST_CASE("stage unitary on the vacuum is two-mode squeezed") {
  const double lambda = 1.0;
  const StageUnitary u(lambda, 60, 60);
  CHECK(u.low_occupancy_defect() < 1e-10);
  for (std::size_t k = 0; k < 12; ++k) {
    const double expected = std::pow(std::tanh(lambda), k) / std::cosh(lambda);
    CHECK(u.element(k, k, 0, 0) == doctest::Approx(expected).epsilon(1e-10));
  }
  CHECK(std::abs(u.element(1, 0, 0, 0)) == 0.0);
}

TEST_CASE("unitarity on the low-occupancy block") {
  for (double lambda : {0.01, 0.05, 0.2, 0.5}) {
    const StageUnitary u(lambda, 24, 4);
    CHECK(u.low_occupancy_defect() < 1e-10);
    CHECK(u.unitarity_defect() >= u.low_occupancy_defect());
  }
}

TEST_CASE("photon-number difference is conserved") {
  const StageUnitary u(0.2, 20, 5);
  for (std::size_t n = 0; n < 8; ++n) {
    Amplitudes pair = Amplitudes::Zero(static_cast<Eigen::Index>(u.pair_dim()));
    pair[static_cast<Eigen::Index>(n * 5)] = 1.0;
    u.apply(pair);
    for (std::size_t s = 0; s < 20; ++s) {
      for (std::size_t i = 0; i < 5; ++i) {
        if (s == n + i) continue;
        CHECK(std::abs(pair[static_cast<Eigen::Index>(s * 5 + i)]) < 1e-12);
      }
    }
  }
}

TEST_CASE("apply agrees with the dense matrix") {
  std::mt19937 rng(17);
  std::normal_distribution<double> g;
  const StageUnitary u(0.15, 10, 3);
  const Eigen::MatrixXd dense = u.to_dense();
  for (int trial = 0; trial < 10; ++trial) {
    Amplitudes v(30);
    for (auto& x : v) x = complex(g(rng), g(rng));
    Amplitudes w = v;
    u.apply(w);
    CHECK((w - dense.cast<complex>() * v).cwiseAbs().maxCoeff() < 1e-13);
  }
}

TEST_CASE("perturbative expansion") {
  SUBCASE("lambda = 0") {
    const PureState p = perturbative_output(1.0, 0.0, 2, 20, 4);
    const PureState c = tensor(coherent_state(1.0, 20), fock_state(0, 4, "idler-1"));
    CHECK(fidelity_pure(p, c) == doctest::Approx(1.0).epsilon(1e-14));
  }
  SUBCASE("first order idler ratio") {
    for (complex alpha : {complex(0.0), complex(0.5), complex(1.0, 1.0), complex(2.0)}) {
      const double lambda = 0.05;
      const PureState p = perturbative_output(alpha, lambda, 1, default_signal_dim(alpha, 1), 4);
      const std::size_t keep[] = {1};
      const Marginal m = partial_trace_to_marginal(p, keep);
      CHECK(m.probabilities[1] / m.probabilities[0] ==
            doctest::Approx(lambda * lambda * (1.0 + std::norm(alpha))).epsilon(1e-10));
    }
  }
  SUBCASE("second order error is third order in lambda") {
    for (double alpha : {0.5, 1.0, 2.0}) {
      const std::size_t ds = default_signal_dim(alpha, 2);
      auto error = [&](double lambda) {
        const PureState exact = apply_stage(tensor(coherent_state(alpha, ds), fock_state(0, 4, "idler-1")),
                                            stage_unitary(lambda, ds, 4), 1);
        return (exact.amplitudes() - perturbative_output(alpha, lambda, 2, ds, 4).amplitudes()).norm();
      };
      const double ratio = error(0.02) / error(0.01);
      CHECK(ratio >= 6.0);
      CHECK(ratio <= 10.0);
    }
  }
  CHECK_THROWS_AS(perturbative_output(1.0, 0.3, 1, 20, 4), std::invalid_argument);
  CHECK_THROWS_AS(perturbative_output(1.0, 0.1, 3, 20, 4), std::invalid_argument);
}

TEST_CASE("chain configuration") {
  CHECK_THROWS_AS(chain(1.0, {}).validate(), std::invalid_argument);
  CHECK_THROWS_AS(chain(1.0, {-0.1}).validate(), std::invalid_argument);
  CHECK(chain(1.0, {0.05, 0.05}).warnings().empty());
  CHECK(chain(1.0, {0.05, 0.5}).warnings().size() == 1);
  ChainConfig small = chain(1.0, {0.05});
  small.signal_dim = 8;
  CHECK_FALSE(small.warnings().empty());

  const MultiMode space = chain(1.0, {0.1, 0.1, 0.1}).space();
  CHECK(space.size() == 4);
  CHECK(space[0].label == "signal");
  CHECK(space[3].label == "idler-3");
}

TEST_CASE("full chain") {
  SUBCASE("one stage is the stage unitary on |alpha>|0>") {
    const ChainConfig c = chain(1.0, {0.1});
    const PureState expected = apply_stage(tensor(coherent_state(1.0, c.signal_dim), fock_state(0, 4, "idler-1")),
                                           stage_unitary(0.1, c.signal_dim, 4), 1);
    CHECK((run_chain_full(c).amplitudes() - expected.amplitudes()).norm() < 1e-14);
  }
  SUBCASE("norm is preserved") {
    for (complex alpha : {complex(0.5), complex(1.0, -0.5), complex(2.0)}) {
      const PureState s = run_chain_full(chain(alpha, {0.05, 0.1, 0.2}));
      CHECK(s.amplitudes().norm() == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
  SUBCASE("two stages follow the product expansion term by term") {
    // |alpha>|00> + l1 a^dag|alpha>|10> + l2 a^dag|alpha>|01> + l1 l2 a^dag^2|alpha>|11> + ...
    const complex alpha(1.0, 0.3);
    auto errors = [&](double scale) {
      const double l1 = 0.8 * scale, l2 = 1.3 * scale;
      const ChainConfig c = chain(alpha, {l1, l2});
      const PureState s = run_chain_full(c);
      const PureState coh = coherent_state(alpha, c.signal_dim);
      const double e10 = (signal_component(s, {1, 0}) - l1 * raise_times(coh, 1)).norm();
      const double e01 = (signal_component(s, {0, 1}) - l2 * raise_times(coh, 1)).norm();
      const double e11 = (signal_component(s, {1, 1}) - l1 * l2 * raise_times(coh, 2)).norm();
      return std::array<double, 3>{e10, e01, e11};
    };
    const auto a = errors(0.02), b = errors(0.01);
    for (int k = 0; k < 2; ++k) {
      CHECK(a[k] / b[k] >= 6.0);
      CHECK(a[k] / b[k] <= 10.0);
    }
    CHECK(a[2] / b[2] >= 12.0);
    CHECK(a[2] / b[2] <= 20.0);
  }
  SUBCASE("three equal stages: first-order terms are symmetric") {
    const double lambda = 0.01;
    const ChainConfig c = chain(1.0, {lambda, lambda, lambda});
    const PureState s = run_chain_full(c);
    const Amplitudes first = signal_component(s, {1, 0, 0});
    for (const auto& idlers : {std::vector<std::size_t>{0, 1, 0}, std::vector<std::size_t>{0, 0, 1}}) {
      const double diff = (signal_component(s, idlers) - first).norm();
      CHECK(diff < 1e-2 * first.norm());  // equal up to O(lambda^2) relative corrections
    }
    const Amplitudes triple = signal_component(s, {1, 1, 1});
    const Amplitudes expected = lambda * lambda * lambda * raise_times(coherent_state(1.0, c.signal_dim), 3);
    CHECK((triple - expected).norm() < 1e-2 * expected.norm());
  }
  SUBCASE("budget") {
    const ChainConfig c = chain(1.0, std::vector<double>(10, 0.05));
    CHECK_THROWS_AS(run_chain_full(c), BudgetError);
    CHECK_THROWS_AS(run_chain_full(chain(1.0, {0.05, 0.05}), 100), BudgetError);
    try {
      run_chain_full(c);
    } catch (const BudgetError& e) {
      CHECK(std::string(e.what()).find("sequential") != std::string::npos);
    }
  }
}

TEST_CASE("sequential chain") {
  SUBCASE("no clicks at lambda = 0") {
    const ChainConfig c = chain(1.0, {0.0, 0.0});
    const Conditioned r = run_chain_sequential(c, DetectorModel::ideal(), ClickPattern::none(2));
    CHECK(r.probability == doctest::Approx(1.0).epsilon(1e-14));
    REQUIRE(r.possible());
    CHECK(fidelity_ensemble(*r.state, coherent_state(1.0, c.signal_dim)) == doctest::Approx(1.0).epsilon(1e-14));
  }
  SUBCASE("impossible outcome") {
    const Conditioned r = run_chain_sequential(chain(1.0, {0.0}), DetectorModel::ideal(), ClickPattern::parse("1"));
    CHECK_FALSE(r.possible());
    CHECK(r.probability < kImpossibleProbability);
  }
  SUBCASE("agrees with conditioning the full chain") {
    std::mt19937 rng(23);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 12; ++trial) {
      const std::size_t n = 1 + trial % 3;
      std::vector<double> lambdas;
      for (std::size_t j = 0; j < n; ++j) lambdas.push_back(0.02 + 0.2 * u(rng));
      const ChainConfig c = chain(std::polar(2.0 * u(rng), 6.0 * u(rng)), lambdas);
      const DetectorModel det = trial % 2 == 0 ? DetectorModel::ideal() : DetectorModel{0.3 + 0.7 * u(rng), 0.1 * u(rng)};
      const ClickPattern pattern = ClickPattern::from_bits(static_cast<std::size_t>(u(rng) * (1 << n)), n);
      const Conditioned full = condition_on_pattern(run_chain_full(c), pattern, det);
      const Conditioned seq = run_chain_sequential(c, det, pattern);
      CHECK(seq.probability == doctest::Approx(full.probability).epsilon(1e-10));
      REQUIRE(full.possible() == seq.possible());
      if (full.possible()) {
        CHECK((full.state->density_matrix() - seq.state->density_matrix()).cwiseAbs().maxCoeff() < 1e-10);
      }
    }
  }
  SUBCASE("ten stages stay within budget") {
    const ChainConfig c = chain(1.0, std::vector<double>(10, 0.05));
    const Conditioned r = run_chain_sequential(c, DetectorModel::ideal(), ClickPattern::parse("1000000000"));
    REQUIRE(r.possible());
    CHECK(r.probability > 0.0);
    CHECK(r.state->total_weight() == doctest::Approx(1.0).epsilon(1e-12));
    // compressed: never more branches than signal levels
    CHECK(r.state->branches.size() <= c.signal_dim);
    const auto rows = enumerate_patterns_sequential(chain(1.0, std::vector<double>(6, 0.05)), DetectorModel{0.6, 0.01});
    double total = 0.0;
    for (const auto& row : rows) total += row.probability;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-10));
  }
}
