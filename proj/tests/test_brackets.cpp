#include <doctest.h>

#include <cmath>
#include <sstream>

#include "oracles.hpp"
#include "qclimit/brackets.hpp"
#include "qclimit/errors.hpp"

using namespace qcl;

namespace {

std::vector<cplx> amps_of(const FieldState& s) { return {s.amplitudes().begin(), s.amplitudes().end()}; }

double oracle_bracket(const ClassicalObservable& F, const ClassicalObservable& G, const FieldState& s) {
  auto f = [&](const std::vector<cplx>& x) { return evaluate(F, FieldState(x)); };
  auto g = [&](const std::vector<cplx>& x) { return evaluate(G, FieldState(x)); };
  return oracle::real_bracket(f, g, amps_of(s));
}

}  // namespace

TEST_SUITE("brackets") {
  TEST_CASE("bosonic bracket equals the commutator form") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 30; ++trial) {
      const int L = 1 + trial % 5;
      const CMatrix A = oracle::random_hermitian(L, rng), B = oracle::random_hermitian(L, rng);
      const auto s = oracle::random_state(L, rng);
      Eigen::VectorXcd psi(L);
      for (int i = 0; i < L; ++i) psi(i) = s[i];
      const cplx expect = cplx(0.0, -1.0) * (psi.adjoint() * (A * B - B * A) * psi)(0, 0);
      const cplx got =
          poisson_bracket(ClassicalObservable(A, Statistics::Bosonic), ClassicalObservable(B, Statistics::Bosonic), s);
      CHECK(std::abs(got - expect) < 1e-12);
      CHECK(std::abs(got.imag()) < 1e-13);
    }
  }

  TEST_CASE("fermionic bracket matches real-coordinate finite differences") {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 60; ++trial) {
      const int L = 2 + trial % 4;
      const CMatrix A = oracle::random_hermitian(L, rng), B = oracle::random_hermitian(L, rng);
      const auto sat = trial % 2 ? SaturationFunction::square_root() : SaturationFunction::exponential();
      const ClassicalObservable F(A, Statistics::Fermionic, sat), G(B, Statistics::Fermionic, sat);
      const auto s = oracle::random_state(L, rng);
      const cplx got = poisson_bracket(F, G, s);
      const double expect = oracle_bracket(F, G, s);
      CHECK(got.real() == doctest::Approx(expect).epsilon(1e-7).scale(1.0));
      CHECK(std::abs(got.imag()) < 1e-12);
    }
  }

  TEST_CASE("algebraic identities") {
    std::mt19937_64 rng(13);
    const int L = 4;
    const ClassicalObservable F(oracle::random_hermitian(L, rng), Statistics::Fermionic);
    const ClassicalObservable G(oracle::random_hermitian(L, rng), Statistics::Fermionic);
    const ClassicalObservable K(oracle::random_hermitian(L, rng), Statistics::Fermionic);
    const auto s = oracle::random_state(L, rng);
    CHECK(std::abs(poisson_bracket(F, G, s) + poisson_bracket(G, F, s)) < 1e-14);
    CHECK(std::abs(poisson_bracket(F, F, s)) < 1e-14);

    const ClassicalObservable FG(2.0 * F.coeffs() + 3.0 * G.coeffs(), Statistics::Fermionic);
    const cplx lin = 2.0 * poisson_bracket(F, K, s) + 3.0 * poisson_bracket(G, K, s);
    CHECK(std::abs(poisson_bracket(FG, K, s) - lin) < 1e-12);

    // Leibniz: {F G, K} = F {G, K} + G {F, K}, with the product gradient built by hand.
    const auto gF = wirtinger_gradient(F, s), gG = wirtinger_gradient(G, s);
    const double vF = evaluate(F, s), vG = evaluate(G, s);
    WirtingerGradient prod{std::vector<cplx>(L), std::vector<cplx>(L)};
    for (int i = 0; i < L; ++i) {
      prod.d_psi[i] = vF * gG.d_psi[i] + vG * gF.d_psi[i];
      prod.d_psistar[i] = vF * gG.d_psistar[i] + vG * gF.d_psistar[i];
    }
    const auto gK = wirtinger_gradient(K, s);
    const cplx lhs = poisson_bracket(prod, gK);
    const cplx rhs = vF * poisson_bracket(gG, gK) + vG * poisson_bracket(gF, gK);
    CHECK(std::abs(lhs - rhs) < 1e-13);

    // The scale enters linearly.
    const cplx a = poisson_bracket(F, G, s, BracketConvention{cplx(0.0, 1.0)});
    CHECK(std::abs(a + poisson_bracket(F, G, s)) < 1e-14);
  }

  TEST_CASE("Jacobi identity for bosonic quadratics") {
    std::mt19937_64 rng(14);
    const int L = 3;
    const CMatrix A = oracle::random_hermitian(L, rng), B = oracle::random_hermitian(L, rng),
                  C = oracle::random_hermitian(L, rng);
    // {A,B} is the quadratic form of -i[A,B]; nest once more.
    const cplx I(0.0, 1.0);
    const CMatrix AB = -I * (A * B - B * A), BC = -I * (B * C - C * B), CA = -I * (C * A - A * C);
    const auto s = oracle::random_state(L, rng);
    auto q = [](const CMatrix& m) { return ClassicalObservable(m, Statistics::Bosonic); };
    const cplx sum = poisson_bracket(q(AB), q(C), s) + poisson_bracket(q(BC), q(A), s) + poisson_bracket(q(CA), q(B), s);
    CHECK(std::abs(sum) < 1e-12);
  }

  TEST_CASE("Hamiltonian generates the flow of psi") {
    std::mt19937_64 rng(15);
    const ClassicalObservable H(oracle::random_hermitian(3, rng), Statistics::Fermionic);
    const auto s = oracle::random_state(3, rng);
    const auto gH = wirtinger_gradient(H, s);
    for (int k = 0; k < 3; ++k) {
      // psi_k as an observable: d psi_k / d psi_k = 1.
      WirtingerGradient e{std::vector<cplx>(3), std::vector<cplx>(3)};
      e.d_psi[k] = 1.0;
      CHECK(std::abs(poisson_bracket(e, gH) - cplx(0.0, -1.0) * gH.d_psistar[k]) < 1e-15);
    }
  }

  TEST_CASE("fermionic ring: nonzero bracket at a fixed state") {
    const double eps[] = {1.0, 1.0, 1.0};
    const auto h = HoppingMatrix::cyclic(eps, 0.6);
    const auto sat = SaturationFunction::exponential();
    const auto H = hamiltonian_observable(h, Statistics::Fermionic, sat);
    const auto Ns = candidate_constants(diagonalize(h), Statistics::Fermionic, sat);
    const FieldState s({cplx(0.5, 0.1), cplx(0.4, -0.2), cplx(0.3, 0.3)});
    const double b = poisson_bracket(H, Ns[0], s).real();
    CHECK(std::abs(b) > 1e-3);
    CHECK(b == doctest::Approx(oracle_bracket(H, Ns[0], s)).epsilon(1e-7));
  }

  TEST_CASE("cases where every bracket vanishes") {
    std::mt19937_64 rng(16);
    auto all_small = [&](const HoppingMatrix& h, Statistics stat, const SaturationFunction& sat) {
      const auto H = hamiltonian_observable(h, stat, sat);
      const auto Ns = candidate_constants(diagonalize(h), stat, sat);
      double worst = 0.0;
      for (int t = 0; t < 50; ++t) {
        const auto s = oracle::random_state(h.dim(), rng);
        for (const auto& n : Ns) worst = std::max(worst, std::abs(poisson_bracket(H, n, s)));
        for (std::size_t a = 0; a < Ns.size(); ++a)
          for (std::size_t b = a + 1; b < Ns.size(); ++b)
            worst = std::max(worst, std::abs(poisson_bracket(Ns[a], Ns[b], s)));
      }
      return worst;
    };
    // bosonic, any h
    CHECK(all_small(HoppingMatrix(oracle::random_hermitian(4, rng)), Statistics::Bosonic,
                    SaturationFunction::exponential()) < kVanishThreshold);
    // two fermionic sites
    CHECK(all_small(HoppingMatrix(oracle::random_hermitian(2, rng)), Statistics::Fermionic,
                    SaturationFunction::exponential()) < kVanishThreshold);
    CHECK(all_small(HoppingMatrix(oracle::random_hermitian(2, rng)), Statistics::Fermionic,
                    SaturationFunction::square_root()) < kVanishThreshold);
    // no hopping
    CMatrix d = CMatrix::Zero(3, 3);
    d.diagonal() << 0.3, 1.0, -0.2;
    CHECK(all_small(HoppingMatrix(d), Statistics::Fermionic, SaturationFunction::exponential()) < kVanishThreshold);
  }

  TEST_CASE("H commutes with the total number") {
    std::mt19937_64 rng(17);
    const HoppingMatrix h(oracle::random_hermitian(4, rng));
    for (auto stat : {Statistics::Bosonic, Statistics::Fermionic}) {
      const auto sat = SaturationFunction::exponential();
      const auto H = hamiltonian_observable(h, stat, sat);
      const auto Ns = candidate_constants(diagonalize(h), stat, sat);
      const auto Ntot = sum_observables(Ns, "N_total");
      for (int t = 0; t < 20; ++t) CHECK(std::abs(poisson_bracket(H, Ntot, oracle::random_state(4, rng))) < 1e-12);
    }
  }

  TEST_CASE("sampler") {
    SamplerSpec spec;
    spec.sites = 3;
    spec.radius = 0.95;
    spec.min_modulus = 0.1;
    spec.max_total = 2.0;
    spec.seed = 4;
    const auto sat = SaturationFunction::square_root();
    const auto a = sample_states(spec, &sat, 100);
    const auto b = sample_states(spec, &sat, 100);
    REQUIRE(a.size() == 100);
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].total_occupation() <= 2.0);
      for (std::size_t k = 0; k < 3; ++k) {
        CHECK(std::abs(a[i][k]) >= 0.1);
        CHECK(a[i].occupation(k) < 1.0);
        CHECK(a[i][k] == b[i][k]);
      }
    }
    spec.min_modulus = 2.0;
    CHECK_THROWS_AS(sample_states(spec, &sat, 1), SamplingError);
    spec.min_modulus = 0.9;
    spec.max_total = 0.1;
    spec.max_attempts_per_point = 50;
    CHECK_THROWS_AS(sample_states(spec, &sat, 1), SamplingError);
  }

  TEST_CASE("scan is independent of the worker count and round-trips") {
    const double eps[] = {1.0, 1.0, 1.0};
    const auto h = HoppingMatrix::cyclic(eps, 0.6);
    const auto sat = SaturationFunction::exponential();
    const auto H = hamiltonian_observable(h, Statistics::Fermionic, sat).with_label("H");
    const auto Ns = candidate_constants(diagonalize(h), Statistics::Fermionic, sat);
    SamplerSpec spec;
    spec.sites = 3;
    spec.seed = 21;
    const auto r1 = bracket_scan(H, Ns[0], spec, 97, {}, 1);
    const auto r4 = bracket_scan(H, Ns[0], spec, 97, {}, 4);
    REQUIRE(r1.values.size() == 97);
    CHECK(r1.values == r4.values);
    CHECK(r1.argmax_index == r4.argmax_index);
    CHECK(r1.max_abs == std::abs(r1.values[r1.argmax_index]));
    CHECK(r1.f_label == "H");
    CHECK(r1.g_label == "N_1");

    std::stringstream ss;
    write_bracket_report(ss, r1);
    const auto back = read_bracket_report(ss);
    CHECK(back.values == r1.values);
    CHECK(back.max_abs == r1.max_abs);
    CHECK(back.argmax_index == r1.argmax_index);
    CHECK(back.f_label == "H");
    CHECK(back.argmax_state[2] == r1.argmax_state[2]);

    std::istringstream broken("bracket-report 1\npair H N_1\nsamples 2\n");
    CHECK_THROWS_AS(read_bracket_report(broken), ValidationError);
  }

  TEST_CASE("phase probe on the chain reproduces the closed-form amplitude") {
    const double eps[] = {1.0, 1.0, 1.0};
    const double J = 0.6;
    const auto h = HoppingMatrix::linear_chain(eps, J);
    const auto sat = SaturationFunction::exponential();
    const auto spec = diagonalize(h);
    const auto H = hamiltonian_observable(h, Statistics::Fermionic, sat);
    const auto Ns = candidate_constants(spec, Statistics::Fermionic, sat);
    std::mt19937_64 rng(18);
    for (int trial = 0; trial < 6; ++trial) {
      const auto s = oracle::random_state(3, rng, 0.3, 0.8);
      const double f1 = sat.value(s.occupation(0)), f2 = sat.value(s.occupation(1)), f3 = sat.value(s.occupation(2));
      for (int k = 0; k < 3; ++k) {
        const auto rec = phase_probe(H, Ns[k], s);
        const cplx expect = J * spec.unitary(0, k) * std::conj(spec.unitary(2, k)) * std::conj(s[0]) *
                            std::conj(s[0]) * s[2] * s[1] * f1 * f1 * f3 * f2;
        CHECK(std::abs(rec.t1 - expect) < 1e-6);
        CHECK(rec.richardson_error < 1e-5);
      }
    }
  }

  TEST_CASE("phase probe: general hopping and zero coupling") {
    std::mt19937_64 rng(19);
    const auto sat = SaturationFunction::exponential();
    const HoppingMatrix h(oracle::random_hermitian(3, rng));
    const auto H = hamiltonian_observable(h, Statistics::Fermionic, sat);
    const auto Ns = candidate_constants(diagonalize(h), Statistics::Fermionic, sat);
    const auto s = oracle::random_state(3, rng, 0.3, 0.8);
    const double f1 = sat.value(s.occupation(0)), f2 = sat.value(s.occupation(1)), f3 = sat.value(s.occupation(2));
    for (int k = 0; k < 3; ++k) {
      const CMatrix& C = Ns[k].coeffs();
      const cplx expect = (h(0, 1) * C(0, 2) - h(0, 2) * C(0, 1)) * std::conj(s[0]) * std::conj(s[0]) * s[1] * s[2] *
                          f1 * f1 * f2 * f3;
      CHECK(std::abs(phase_probe(H, Ns[k], s).t1 - expect) < 1e-6);
    }

    CMatrix d = CMatrix::Zero(3, 3);
    d.diagonal() << 1.0, 2.0, 3.0;
    const HoppingMatrix h0(d);
    const auto H0 = hamiltonian_observable(h0, Statistics::Fermionic, sat);
    const auto N0 = candidate_constants(diagonalize(h0), Statistics::Fermionic, sat);
    const auto rec = phase_probe(H0, N0[1], s);
    CHECK(std::abs(rec.t1) < 1e-12);
    CHECK(std::abs(rec.t2) < 1e-12);
  }

  TEST_CASE("phase probe input checks") {
    const auto sat = SaturationFunction::square_root();
    const double eps[] = {1.0, 1.0, 1.0};
    const auto h = HoppingMatrix::linear_chain(eps, 0.6);
    const auto H = hamiltonian_observable(h, Statistics::Fermionic, sat);
    const auto Ns = candidate_constants(diagonalize(h), Statistics::Fermionic, sat);
    CHECK_THROWS_AS(phase_probe(H, Ns[0], FieldState({0.5, 0.0, 0.5})), ValidationError);
    CHECK_THROWS_AS(phase_probe(H, Ns[0], FieldState({0.5, 0.5, 0.5}), -1.0), ValidationError);
    CHECK_THROWS_AS(phase_probe(H, Ns[0], FieldState({1.0, 0.5, 0.5})), DomainError);
    const double eps2[] = {1.0, 1.0};
    const auto h2 = HoppingMatrix::linear_chain(eps2, 0.6);
    CHECK_THROWS_AS(phase_probe(hamiltonian_observable(h2, Statistics::Fermionic, sat),
                                   candidate_constants(diagonalize(h2), Statistics::Fermionic, sat)[0],
                                   FieldState({0.5, 0.5})),
                    ValidationError);
  }
}
