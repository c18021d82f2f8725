#include <cmath>
#include <stdexcept>
#include <random>

#include "doctest.h"
#include "pacs/fock.hpp"
#include "pacs/laguerre.hpp"

using namespace pacs;

namespace {

double factorial(unsigned m) {
  double f = 1.0;
  for (unsigned k = 2; k <= m; ++k) f *= k;
  return f;
}

// |<psi|psi>|^2 of m successive raising operators, via ladder_apply only
double raised_norm_squared(const PureState& s, unsigned m) {
  Amplitudes v = s.amplitudes();
  for (unsigned k = 0; k < m; ++k) v = ladder_apply(s.space(), v, 0, Ladder::raise).amplitudes;
  return v.squaredNorm();
}

PureState random_state(const MultiMode& space, std::mt19937& rng) {
  std::normal_distribution<double> g;
  Amplitudes a(static_cast<Eigen::Index>(space.total_dim()));
  for (auto& x : a) x = complex(g(rng), g(rng));
  return PureState::normalized(space, a);
}

}  // namespace

TEST_CASE("MultiMode invariants") {
  CHECK_THROWS_AS(MultiMode({{1, "a"}}), std::invalid_argument);
  CHECK_THROWS_AS(MultiMode({{2, "a"}, {3, "a"}}), std::invalid_argument);
  CHECK_THROWS_AS(MultiMode(std::vector<ModeSpec>{}), std::invalid_argument);
  CHECK_THROWS_AS(MultiMode(std::vector<ModeSpec>(70, ModeSpec{}) ), std::invalid_argument);  // duplicate labels first
  std::vector<ModeSpec> huge;
  for (int k = 0; k < 70; ++k) huge.push_back({4, "m" + std::to_string(k)});
  CHECK_THROWS_AS(MultiMode{huge}, std::overflow_error);

  const MultiMode space({{3, "signal"}, {2, "idler-1"}, {4, "idler-2"}});
  CHECK(space.total_dim() == 24);
  CHECK(space.stride(0) == 8);
  CHECK(space.stride(1) == 4);
  CHECK(space.stride(2) == 1);
  const std::size_t levels[] = {2, 1, 3};
  CHECK(space.flat_index(levels) == 23);
  CHECK(space.levels_of(23) == std::vector<std::size_t>{2, 1, 3});
}

TEST_CASE("PureState must be normalized") {
  Amplitudes a = Amplitudes::Zero(3);
  a[0] = 2.0;
  CHECK_THROWS_AS(PureState(MultiMode::single(3), a), std::invalid_argument);
  CHECK(PureState::normalized(MultiMode::single(3), a)[0] == complex(1.0));
  CHECK_THROWS_AS(PureState::normalized(MultiMode::single(3), Amplitudes::Zero(3)), std::domain_error);
}

TEST_CASE("coherent states") {
  SUBCASE("vacuum") {
    const PureState c = coherent_state(0.0, 8);
    CHECK(c[0] == complex(1.0));
    CHECK(c.amplitudes().tail(7).norm() == 0.0);
  }
  SUBCASE("mean photon number") {
    const PureState c = coherent_state(1.0, 32);
    double mean = 0.0;
    for (std::size_t n = 0; n < 32; ++n) mean += n * std::norm(c[n]);
    CHECK(mean == doctest::Approx(1.0).epsilon(1e-10));
  }
  SUBCASE("truncation error with suggested dimension") {
    try {
      coherent_state(2.0, 4);
      FAIL("expected TruncationError");
    } catch (const TruncationError& e) {
      CHECK(e.suggested_dim() > 4);
      CHECK(coherent_tail_mass(2.0, e.suggested_dim()) <= kTailTolerance);
      CHECK(coherent_tail_mass(2.0, e.suggested_dim() - 1) > kTailTolerance);
      CHECK_NOTHROW(coherent_state(2.0, e.suggested_dim()));
    }
  }
  SUBCASE("tail mass against direct Poisson sum") {
    const double x = 3.0;
    double head = 0.0, p = std::exp(-x);
    for (int n = 0; n < 10; ++n) {
      head += p;
      p *= x / (n + 1);
    }
    CHECK(coherent_tail_mass(std::sqrt(x), 10) == doctest::Approx(1.0 - head).epsilon(1e-9));
  }
  SUBCASE("truncation policy keeps the tail small") {
    for (double a : {0.0, 0.5, 1.0, 2.0, 3.0, 5.0}) CHECK(coherent_tail_mass(a, default_signal_dim(a)) < kTailTolerance);
    CHECK(default_signal_dim(0.0) == 16);
    CHECK(default_signal_dim(1.0, 3) == 20);
    CHECK(default_signal_dim(2.0, 3) == 31);  // formula alone gives 29
    CHECK(default_signal_dim(3.0) > 37);  // formula alone gives 37
  }
}

TEST_CASE("Fock states") {
  CHECK(fock_state(0, 2)[0] == complex(1.0));
  CHECK(fock_state(1, 2)[1] == complex(1.0));
  CHECK(fock_state(1, 2)[0] == complex(0.0));
  CHECK_THROWS_AS(fock_state(3, 2), std::out_of_range);
}

TEST_CASE("photon-added coherent states") {
  SUBCASE("m = 0 is the coherent state") {
    for (complex a : {complex(0.5), complex(1.0), complex(0.3, -1.1)}) {
      const std::size_t dim = default_signal_dim(a);
      CHECK((pacs_state(a, 0, dim).amplitudes() - coherent_state(a, dim).amplitudes()).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }
  SUBCASE("alpha = 0 is the Fock state") {
    for (unsigned m = 0; m <= 5; ++m) CHECK(pacs_state(0.0, m, 16).amplitudes() == fock_state(m, 16).amplitudes());
  }
  SUBCASE("normalization of a single added photon") {
    // 1! L_1(-1) = 2
    CHECK(raised_coherent(1.0, 1, 32).norm_squared == doctest::Approx(2.0).epsilon(1e-10));
  }
  SUBCASE("norm matches m! L_m(-|alpha|^2) via ladder operators") {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const std::size_t dim = 64;
    for (int trial = 0; trial < 40; ++trial) {
      const double r = std::sqrt(u(rng) * dim / 4.0);
      const complex a = std::polar(r, 2.0 * M_PI * u(rng));
      const PureState c = coherent_state(a, dim);
      for (unsigned m = 0; m <= 4; ++m) {
        const double expected = factorial(m) * laguerre(m, -std::norm(a));
        CHECK(raised_norm_squared(c, m) == doctest::Approx(expected).epsilon(1e-8));
      }
    }
  }
  SUBCASE("tail check") {
    CHECK_THROWS_AS(pacs_state(2.0, 3, 12), TruncationError);
    CHECK(raised_coherent(1.0, 2, 2).relative_tail > 0.99);
  }
}

TEST_CASE("ladder operators") {
  SUBCASE("raise vacuum") {
    const auto r = ladder_apply(fock_state(0, 4), 0, Ladder::raise);
    CHECK(r.norm == doctest::Approx(1.0));
    CHECK(r.amplitudes[1] == complex(1.0));
    CHECK(r.leakage == 0.0);
  }
  SUBCASE("lower vacuum") {
    const auto r = ladder_apply(fock_state(0, 4), 0, Ladder::lower);
    CHECK(r.norm == 0.0);
  }
  SUBCASE("raise the top level") {
    const auto r = ladder_apply(fock_state(3, 4), 0, Ladder::raise);
    CHECK(r.norm == 0.0);
    CHECK(r.leakage == doctest::Approx(1.0));
    CHECK(r.truncation_warning());
  }
  SUBCASE("acts on the requested mode only") {
    const PureState s = tensor(fock_state(1, 3, "a"), fock_state(2, 4, "b"));
    const auto r = ladder_apply(s, 1, Ladder::lower);
    const std::size_t levels[] = {1, 1};
    CHECK(r.amplitudes[static_cast<Eigen::Index>(s.space().flat_index(levels))].real() == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  }
  SUBCASE("commutator expectation is one") {
    std::mt19937 rng(3);
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 20; ++trial) {
      Amplitudes v = Amplitudes::Zero(20);
      for (int n = 0; n < 12; ++n) v[n] = complex(g(rng), g(rng));
      const PureState s = PureState::normalized(MultiMode::single(20), v);
      const double up = ladder_apply(s, 0, Ladder::raise).amplitudes.squaredNorm();    // <a a^dag>
      const double down = ladder_apply(s, 0, Ladder::lower).amplitudes.squaredNorm();  // <a^dag a>
      CHECK(up - down == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("tensor products") {
  const PureState vac = tensor(fock_state(0, 3, "a"), fock_state(0, 2, "b"));
  CHECK(vac[0] == complex(1.0));
  CHECK(vac.amplitudes().norm() == doctest::Approx(1.0));

  // |1>_a |0>_b sits at index 1 * dim_b + 0
  const PureState e = tensor(fock_state(1, 3, "a"), fock_state(0, 2, "b"));
  CHECK(e[2] == complex(1.0));
  const PureState f = tensor(fock_state(0, 3, "a"), fock_state(1, 2, "b"));
  CHECK(f[1] == complex(1.0));

  CHECK_THROWS_AS(tensor(fock_state(0, 3), fock_state(0, 3)), std::invalid_argument);  // same label
}

TEST_CASE("photon-number marginals") {
  std::mt19937 rng(5);
  SUBCASE("product state marginal is the factor's distribution") {
    for (int trial = 0; trial < 10; ++trial) {
      const PureState a = random_state(MultiMode::single(4, "a"), rng);
      const PureState b = random_state(MultiMode::single(3, "b"), rng);
      const PureState ab = tensor(a, b);
      const std::size_t first[] = {0};
      const std::size_t second[] = {1};
      const Marginal ma = partial_trace_to_marginal(ab, first);
      const Marginal mb = partial_trace_to_marginal(ab, second);
      for (std::size_t n = 0; n < 4; ++n) CHECK(ma.probabilities[n] == doctest::Approx(std::norm(a[n])).epsilon(1e-14));
      for (std::size_t n = 0; n < 3; ++n) CHECK(mb.probabilities[n] == doctest::Approx(std::norm(b[n])).epsilon(1e-14));
    }
  }
  SUBCASE("keep all modes") {
    const PureState s = random_state(MultiMode({{3, "a"}, {2, "b"}}), rng);
    const std::size_t all[] = {0, 1};
    const Marginal m = partial_trace_to_marginal(s, all);
    double total = 0.0;
    for (std::size_t k = 0; k < 6; ++k) {
      CHECK(m.probabilities[k] == doctest::Approx(std::norm(s[k])));
      total += m.probabilities[k];
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    const std::size_t reversed[] = {1, 0};
    const std::size_t lv[] = {1, 2};
    CHECK(partial_trace_to_marginal(s, reversed).at(lv) == doctest::Approx(std::norm(s[2 * 2 + 1])));
  }
  SUBCASE("two-mode squeezed vacuum is thermal on each side") {
    const double t = std::tanh(0.4);
    const std::size_t d = 40;
    const MultiMode space({{d, "a"}, {d, "b"}});
    Amplitudes amps = Amplitudes::Zero(static_cast<Eigen::Index>(d * d));
    for (std::size_t k = 0; k < d; ++k) amps[static_cast<Eigen::Index>(k * d + k)] = std::pow(t, k);
    const PureState tmsv = PureState::normalized(space, amps);
    const std::size_t keep[] = {1};
    const Marginal m = partial_trace_to_marginal(tmsv, keep);
    for (std::size_t k = 0; k < 10; ++k) {
      CHECK(m.probabilities[k] == doctest::Approx((1.0 - t * t) * std::pow(t * t, k)).epsilon(1e-12));
    }
  }
  CHECK_THROWS_AS(partial_trace_to_marginal(fock_state(0, 3), std::vector<std::size_t>{0, 0}), std::invalid_argument);
  CHECK_THROWS_AS(partial_trace_to_marginal(fock_state(0, 3), std::vector<std::size_t>{1}), std::out_of_range);
}

TEST_CASE("pure-state fidelity") {
  const PureState s = coherent_state(complex(0.7, 0.2), 20);
  CHECK(fidelity_pure(s, s) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(fidelity_pure(fock_state(1, 5), fock_state(2, 5)) == 0.0);
  // |<1|alpha,1>|^2 = |e^{-1/2} * sqrt(1)|^2 / (1! L_1(-1)) = e^{-1} / 2 for alpha = 1
  CHECK(fidelity_pure(pacs_state(1.0, 1, 24), fock_state(1, 24)) == doctest::Approx(std::exp(-1.0) / 2.0).epsilon(1e-12));
  CHECK_THROWS_AS(fidelity_pure(fock_state(0, 4), fock_state(0, 5)), std::invalid_argument);
}

TEST_CASE("ensemble fidelity") {
  const PureState ref = fock_state(1, 4);
  SUBCASE("single branch") {
    const PureState s = coherent_state(0.5, 4 + 12);
    const PureState r = pacs_state(0.5, 1, 16);
    const WeightedEnsemble e{s.space(), {{1.0, s}}};
    CHECK(fidelity_ensemble(e, r) == doctest::Approx(fidelity_pure(s, r)).epsilon(1e-15));
  }
  SUBCASE("equal mixture with an orthogonal state") {
    const WeightedEnsemble e{ref.space(), {{0.5, ref}, {0.5, fock_state(3, 4)}}};
    CHECK(fidelity_ensemble(e, ref) == doctest::Approx(0.5));
  }
  SUBCASE("density-matrix cross-check on two modes") {
    std::mt19937 rng(9);
    const MultiMode space({{3, "a"}, {3, "b"}});
    for (int trial = 0; trial < 10; ++trial) {
      WeightedEnsemble e{space, {}};
      std::uniform_real_distribution<double> u(0.1, 1.0);
      double total = 0.0;
      for (int k = 0; k < 4; ++k) {
        const double w = u(rng);
        total += w;
        e.branches.push_back({w, random_state(space, rng)});
      }
      for (auto& b : e.branches) b.weight /= total;
      e.validate();
      const PureState r = random_state(space, rng);
      Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(9, 9);
      for (const auto& b : e.branches) {
        for (int i = 0; i < 9; ++i)
          for (int j = 0; j < 9; ++j) rho(i, j) += b.weight * b.state[i] * std::conj(b.state[j]);
      }
      complex expectation{};
      for (int i = 0; i < 9; ++i)
        for (int j = 0; j < 9; ++j) expectation += std::conj(r[i]) * rho(i, j) * r[j];
      CHECK(fidelity_ensemble(e, r) == doctest::Approx(expectation.real()).epsilon(1e-13));
      CHECK((e.density_matrix() - rho).cwiseAbs().maxCoeff() < 1e-14);
    }
  }
}
