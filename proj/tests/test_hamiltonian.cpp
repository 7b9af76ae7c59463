#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "qclimit/errors.hpp"
#include "qclimit/hamiltonian.hpp"

using namespace qcl;

namespace {

double max_abs(const CMatrix& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_SUITE("hamiltonian") {
  TEST_CASE("hopping matrix validation") {
    CMatrix bad(2, 2);
    bad << 1.0, cplx(0.5, 0.1), cplx(0.5, 0.1), 2.0;
    try {
      HoppingMatrix h(bad);
      FAIL("non-hermitian matrix accepted");
    } catch (const ValidationError& e) {
      CHECK(e.code() == "E_NONHERMITIAN");
    }
    CHECK_THROWS_AS(HoppingMatrix(CMatrix(2, 3)), ValidationError);
    CMatrix nan = CMatrix::Identity(2, 2);
    nan(0, 0) = std::nan("");
    CHECK_THROWS_AS(HoppingMatrix{nan}, ValidationError);
  }

  TEST_CASE("chain and ring shorthands") {
    const double eps[] = {1.0, 2.0, 3.0};
    const auto lin = HoppingMatrix::linear_chain(eps, cplx(0.6, 0.2));
    CHECK(lin(0, 1) == cplx(0.6, 0.2));
    CHECK(lin(1, 0) == cplx(0.6, -0.2));
    CHECK(lin(0, 2) == cplx(0.0));
    CHECK(lin(2, 2) == cplx(3.0));
    const auto ring = HoppingMatrix::cyclic(eps, cplx(0.6, 0.2));
    CHECK(ring(0, 2) == cplx(0.6, 0.2));
    CHECK(ring(2, 0) == cplx(0.6, -0.2));
    const double eps2[] = {0.0, 0.0};
    CHECK(HoppingMatrix::cyclic(eps2, 1.0)(0, 1) == cplx(1.0));
  }

  TEST_CASE("diagonalize: identity and Pauli x") {
    const auto id = diagonalize(HoppingMatrix(CMatrix::Identity(3, 3)));
    for (int k = 0; k < 3; ++k) CHECK(id.eigenvalues(k) == doctest::Approx(1.0));
    CHECK(max_abs(id.unitary.adjoint() * id.unitary - CMatrix::Identity(3, 3)) < 1e-12);

    CMatrix px(2, 2);
    px << 0, 1, 1, 0;
    const auto s = diagonalize(HoppingMatrix(px));
    CHECK(s.eigenvalues(0) == doctest::Approx(-1.0));
    CHECK(s.eigenvalues(1) == doctest::Approx(1.0));
  }

  TEST_CASE("diagonalize: ring spectrum against circulant formula") {
    const double eps[] = {1.0, 1.0, 1.0};
    const auto h = HoppingMatrix::cyclic(eps, 0.6);
    const auto s = diagonalize(h);
    std::vector<double> expect;
    for (int k = 0; k < 3; ++k) expect.push_back(1.0 + 2 * 0.6 * std::cos(2 * std::numbers::pi * k / 3));
    std::sort(expect.begin(), expect.end());
    for (int k = 0; k < 3; ++k) CHECK(s.eigenvalues(k) == doctest::Approx(expect[k]).epsilon(1e-12));
    CHECK(s.eigenvalues(0) == doctest::Approx(0.4));
    CHECK(s.eigenvalues(2) == doctest::Approx(2.2));
    const CMatrix D = s.unitary.adjoint() * h.entries() * s.unitary;
    CHECK(max_abs(D - CMatrix(s.eigenvalues.cast<cplx>().asDiagonal())) < 1e-10);
  }

  TEST_CASE("diagonalize: chain spectrum against tridiagonal Toeplitz formula") {
    const int L = 5;
    std::vector<double> eps(L, 0.3);
    const auto s = diagonalize(HoppingMatrix::linear_chain(eps, -0.7));
    std::vector<double> expect;
    for (int k = 1; k <= L; ++k) expect.push_back(0.3 + 2 * 0.7 * std::cos(std::numbers::pi * k / (L + 1)));
    std::sort(expect.begin(), expect.end());
    for (int k = 0; k < L; ++k) CHECK(s.eigenvalues(k) == doctest::Approx(expect[k]).epsilon(1e-12));
  }

  TEST_CASE("diagonalize: unitary, ascending, phase fixed") {
    std::mt19937_64 rng(5);
    for (int L = 1; L <= 6; ++L) {
      const HoppingMatrix h(oracle::random_hermitian(L, rng));
      const auto s = diagonalize(h);
      CHECK(max_abs(s.unitary.adjoint() * s.unitary - CMatrix::Identity(L, L)) < 1e-10);
      const CMatrix D = s.unitary.adjoint() * h.entries() * s.unitary;
      CHECK(max_abs(D - CMatrix(s.eigenvalues.cast<cplx>().asDiagonal())) < 1e-10);
      for (int k = 1; k < L; ++k) CHECK(s.eigenvalues(k) >= s.eigenvalues(k - 1));
      for (int k = 0; k < L; ++k) {
        int arg = 0;
        s.unitary.col(k).cwiseAbs().maxCoeff(&arg);
        CHECK(std::abs(s.unitary(arg, k).imag()) < 1e-14);
        CHECK(s.unitary(arg, k).real() > 0.0);
      }
    }
  }

  TEST_CASE("candidate constants") {
    SUBCASE("diagonal h gives site occupations") {
      CMatrix d = CMatrix::Zero(3, 3);
      d.diagonal() << 0.5, -1.0, 2.0;
      const auto Ns = candidate_constants(diagonalize(HoppingMatrix(d)), Statistics::Fermionic,
                                          SaturationFunction::exponential());
      // ascending eigenvalues: site 2, site 1, site 3
      const int site[] = {1, 0, 2};
      for (int k = 0; k < 3; ++k) {
        CMatrix e = CMatrix::Zero(3, 3);
        e(site[k], site[k]) = 1.0;
        CHECK(max_abs(Ns[k].coeffs() - e) < 1e-14);
        CHECK(Ns[k].label() == "N_" + std::to_string(k + 1));
      }
    }
    SUBCASE("Pauli x") {
      CMatrix px(2, 2);
      px << 0, 1, 1, 0;
      const auto Ns = candidate_constants(diagonalize(HoppingMatrix(px)), Statistics::Bosonic,
                                          SaturationFunction::exponential());
      CMatrix c1(2, 2), c2(2, 2);
      c1 << 0.5, -0.5, -0.5, 0.5;
      c2 << 0.5, 0.5, 0.5, 0.5;
      CHECK(max_abs(Ns[0].coeffs() - c1) < 1e-14);
      CHECK(max_abs(Ns[1].coeffs() - c2) < 1e-14);
    }
    SUBCASE("rank one, unit trace, complete") {
      std::mt19937_64 rng(9);
      const HoppingMatrix h(oracle::random_hermitian(4, rng));
      const auto Ns = candidate_constants(diagonalize(h), Statistics::Bosonic, SaturationFunction::exponential());
      CMatrix sum = CMatrix::Zero(4, 4);
      for (const auto& n : Ns) {
        CHECK(std::abs(n.coeffs().trace() - 1.0) < 1e-12);
        CHECK(max_abs(n.coeffs() * n.coeffs() - n.coeffs()) < 1e-12);  // projector
        CHECK(hermitian_defect(n.coeffs()) < 1e-15);
        sum += n.coeffs();
      }
      CHECK(max_abs(sum - CMatrix::Identity(4, 4)) < 1e-12);
    }
  }

  TEST_CASE("evaluate: hand-computed values") {
    CMatrix d = CMatrix::Zero(3, 3);
    d.diagonal() << 1.5, 2.0, 3.0;
    const ClassicalObservable b(d, Statistics::Bosonic);
    CHECK(evaluate(b, FieldState({1.0, 0.0, 0.0})) == doctest::Approx(1.5));

    CMatrix h2(2, 2);
    h2 << 0, 1, 1, 0;
    const ClassicalObservable f2(h2, Statistics::Fermionic, SaturationFunction::exponential());
    const double a = std::sqrt(0.5);
    CHECK(evaluate(f2, FieldState({a, a})) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
  }

  TEST_CASE("evaluate: square root boundary keeps only the diagonal") {
    std::mt19937_64 rng(2);
    const CMatrix C = oracle::random_hermitian(3, rng);
    const ClassicalObservable obs(C, Statistics::Fermionic, SaturationFunction::square_root());
    const FieldState s({cplx(1.0, 0.0), std::polar(1.0, 0.4), std::polar(1.0, -2.0)});
    CHECK(evaluate(obs, s) == doctest::Approx(C.trace().real()).epsilon(1e-14));
    CHECK_THROWS_AS(evaluate(obs, FieldState({1.01, 0.0, 0.0})), DomainError);
  }

  TEST_CASE("evaluate: matches the naive replacement formula") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 200; ++trial) {
      const int L = 1 + trial % 6;
      const CMatrix C = oracle::random_hermitian(L, rng);
      const auto s = oracle::random_state(L, rng);
      std::vector<cplx> psi(s.amplitudes().begin(), s.amplitudes().end());
      const bool ferm = trial % 2 == 1;
      const bool use_sqrt = trial % 4 == 3;
      const auto sat = use_sqrt ? SaturationFunction::square_root() : SaturationFunction::exponential();
      const ClassicalObservable obs(C, ferm ? Statistics::Fermionic : Statistics::Bosonic, sat);
      const double expect =
          use_sqrt ? oracle::naive_value(C, ferm, oracle::fsqrt, psi) : oracle::naive_value(C, ferm, oracle::fexp, psi);
      CHECK(evaluate(obs, s) == doctest::Approx(expect).epsilon(1e-12));
      CHECK(std::abs(evaluate_complex(obs, s).imag()) < 1e-12 * (1.0 + std::abs(expect)));
    }
  }

  TEST_CASE("evaluate: global phase invariance and total number") {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 50; ++trial) {
      const int L = 2 + trial % 4;
      const HoppingMatrix h(oracle::random_hermitian(L, rng));
      const auto s = oracle::random_state(L, rng);
      for (auto stat : {Statistics::Bosonic, Statistics::Fermionic}) {
        const auto H = hamiltonian_observable(h, stat, SaturationFunction::exponential());
        CHECK(evaluate(H, s.with_global_phase(1.1)) == doctest::Approx(evaluate(H, s)).epsilon(1e-12));
        const auto Ns = candidate_constants(diagonalize(h), stat, SaturationFunction::exponential());
        double sum = 0.0;
        for (const auto& n : Ns) sum += evaluate(n, s);
        CHECK(sum == doctest::Approx(s.total_occupation()).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("wirtinger gradient: closed forms") {
    std::mt19937_64 rng(6);
    const CMatrix C = oracle::random_hermitian(4, rng);
    const auto s = oracle::random_state(4, rng);
    const auto g = wirtinger_gradient(ClassicalObservable(C, Statistics::Bosonic), s);
    for (int i = 0; i < 4; ++i) {
      cplx expect = 0.0;
      for (int j = 0; j < 4; ++j) expect += C(i, j) * s[j];
      CHECK(std::abs(g.d_psistar[i] - expect) < 1e-14);
      CHECK(std::abs(g.d_psi[i] - std::conj(g.d_psistar[i])) < 1e-14);
    }
    CMatrix d = CMatrix::Zero(4, 4);
    d.diagonal() << 0.1, -0.2, 0.3, 0.7;
    const auto gd = wirtinger_gradient(ClassicalObservable(d, Statistics::Fermionic, SaturationFunction::square_root()), s);
    for (int i = 0; i < 4; ++i) CHECK(std::abs(gd.d_psistar[i] - d(i, i) * s[i]) < 1e-15);
  }

  TEST_CASE("wirtinger gradient: finite differences") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 100; ++trial) {
      const int L = 1 + trial % 5;
      const CMatrix C = oracle::random_hermitian(L, rng);
      const auto s = oracle::random_state(L, rng);
      const auto sat = trial % 2 ? SaturationFunction::square_root() : SaturationFunction::exponential();
      const ClassicalObservable obs(C, trial % 3 ? Statistics::Fermionic : Statistics::Bosonic, sat);
      const auto g = wirtinger_gradient(obs, s);
      std::vector<cplx> psi(s.amplitudes().begin(), s.amplitudes().end());
      auto fn = [&](const std::vector<cplx>& x) { return evaluate(obs, FieldState(x)); };
      for (int k = 0; k < L; ++k) {
        double dq, dp;
        oracle::real_partials(fn, psi, k, 1e-4, dq, dp);
        const cplx d_psi = 0.5 * cplx(dq, -dp), d_psistar = 0.5 * cplx(dq, dp);
        const double scale = std::max(1.0, std::abs(d_psi));
        CHECK(std::abs(g.d_psi[k] - d_psi) < 1e-8 * scale);
        CHECK(std::abs(g.d_psistar[k] - d_psistar) < 1e-8 * scale);
      }
    }
  }

  TEST_CASE("wirtinger gradient: square root at saturation") {
    CMatrix C(2, 2);
    C << 0, 1, 1, 0;
    const ClassicalObservable obs(C, Statistics::Fermionic, SaturationFunction::square_root());
    CHECK_THROWS_AS(wirtinger_gradient(obs, FieldState({1.0, 0.5})), DerivativeDomainError);
  }

  TEST_CASE("observable algebra") {
    std::mt19937_64 rng(8);
    const CMatrix A = oracle::random_hermitian(3, rng), B = oracle::random_hermitian(3, rng);
    const ClassicalObservable a(A, Statistics::Fermionic), b(B, Statistics::Fermionic);
    const ClassicalObservable terms[] = {a, b};
    const auto s = oracle::random_state(3, rng);
    CHECK(evaluate(sum_observables(terms, "A+B"), s) == doctest::Approx(evaluate(a, s) + evaluate(b, s)));
    CHECK(a.with_label("X").label() == "X");
    CHECK_THROWS_AS(ClassicalObservable(CMatrix::Ones(2, 3), Statistics::Bosonic), ValidationError);
  }
}
