#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "nhq/evolution.hpp"
#include "nhq/tls.hpp"
#include "reference.hpp"

using namespace nhq;
using namespace nhq::pauli;
using tls::InitFamily;
using tls::Model;
using tls::TlsScenario;

namespace {

const PropagationConfig kExact{};
const PropagationConfig kRk4{Method::rk4, 1e-3, 1};

ComplexMatrix random_hermitian(std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  ComplexMatrix m(2);
  for (std::size_t r = 0; r < 2; ++r)
    for (std::size_t c = 0; c < 2; ++c) m(r, c) = cplx(u(rng), u(rng)) * scale;
  return 0.5 * (m + m.adjoint());
}

// Random unit-trace Hermitian matrix (not necessarily PSD).
StateMatrix random_unit_trace(std::mt19937_64& rng) {
  auto m = random_hermitian(rng, 1.0);
  m += (1.0 - m.trace().real()) / 2.0 * identity();
  return StateMatrix(m, true);
}

}  // namespace

TEST(SplitHamiltonian, Examples) {
  const auto herm = split_hamiltonian(-sigma_x() + 0.3 * sigma_z());
  EXPECT_EQ(herm.gamma, ComplexMatrix::zero(2));

  const auto anti = split_hamiltonian(cplx(0, -1) * sigma_z());
  EXPECT_LE(anti.h_plus.max_abs(), 1e-16);
  EXPECT_LE(max_abs_diff(anti.gamma, sigma_z()), 1e-16);

  const auto pd = split_hamiltonian(-sigma_x() - cplx(0, 1) * (sigma_z() + identity()));
  EXPECT_LE(max_abs_diff(pd.h_plus, -sigma_x()), 1e-16);
  EXPECT_LE(max_abs_diff(pd.gamma, sigma_z() + identity()), 1e-16);
}

TEST(SplitHamiltonian, ReconstructsRandomInput) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int i = 0; i < 100; ++i) {
    ComplexMatrix h(2);
    for (std::size_t r = 0; r < 2; ++r)
      for (std::size_t c = 0; c < 2; ++c) h(r, c) = cplx(u(rng), u(rng));
    const auto split = split_hamiltonian(h);
    EXPECT_TRUE(is_hermitian(split.h_plus));
    EXPECT_TRUE(is_hermitian(split.gamma));
    EXPECT_LE(max_abs_diff(split.full(), h), 1e-12 * h.max_abs());
  }
}

TEST(HamiltonianSplit, RejectsNonHermitianParts) {
  EXPECT_THROW(HamiltonianSplit(sigma_x() * sigma_z(), sigma_z()), InputError);
  EXPECT_THROW(HamiltonianSplit(sigma_x(), ComplexMatrix::identity(3)), InputError);
}

TEST(LinearRhs, Examples) {
  std::mt19937_64 rng(2);
  const HamiltonianSplit unitary(random_hermitian(rng, 2.0), ComplexMatrix::zero(2));
  EXPECT_LE(linear_rhs(StateMatrix(0.5 * identity(), true), unitary).max_abs(), 1e-15);

  // pd model, Delta = 1, gamma = 0, Omega = rho_x(0) -> -sigma_z
  const auto pd = tls::build_model({Model::pd, 1.0, 0.0, 0.0, 0.0, InitFamily::x});
  const auto rhs = linear_rhs(tls::initial_state(InitFamily::x, 0.0), pd);
  EXPECT_LE(max_abs_diff(rhs, -sigma_z()), 1e-15);
}

TEST(LinearRhs, TraceLaw) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 100; ++i) {
    const HamiltonianSplit ham(random_hermitian(rng, 2.0), random_hermitian(rng, 2.0));
    ComplexMatrix omega = random_hermitian(rng, 1.0) + cplx(0, 0.3) * random_hermitian(rng, 1.0);
    const cplx lhs = linear_rhs(omega, ham).trace();
    const cplx rhs = -2.0 * (omega * ham.gamma).trace();
    EXPECT_LE(std::abs(lhs - rhs), 1e-13);
  }
}

TEST(NonlinearRhs, Examples) {
  std::mt19937_64 rng(4);
  const HamiltonianSplit unitary(random_hermitian(rng, 2.0), ComplexMatrix::zero(2));
  const auto rho = random_unit_trace(rng);
  EXPECT_EQ(nonlinear_rhs(rho, unitary), cplx(0, -1) * commutator(unitary.h_plus, rho.matrix()));

  for (int i = 0; i < 50; ++i) {
    const HamiltonianSplit ham(random_hermitian(rng, 2.0), random_hermitian(rng, 2.0));
    EXPECT_LE(std::abs(nonlinear_rhs(random_unit_trace(rng), ham).trace()), 1e-13);
  }

  const HamiltonianSplit ham(random_hermitian(rng, 1.0), sigma_z());
  EXPECT_LE(max_abs_diff(nonlinear_rhs(StateMatrix(0.5 * identity(), true), ham), -sigma_z()), 1e-15);
}

TEST(PropagateLinear, IdentityAndBackward) {
  const auto ham = tls::build_model({Model::ed, 1.0, 1.0, 0.0, 0.0, InitFamily::x});
  const auto rho = tls::initial_state(InitFamily::x, 0.0);
  EXPECT_EQ(propagate_linear(rho, ham, 0.7, 0.7).matrix(), rho.matrix());
  EXPECT_FALSE(propagate_linear(rho, ham, 0.0, 0.5).normalized());
  EXPECT_THROW(propagate_linear(rho, ham, 1.0, 0.5), ContractError);
  EXPECT_THROW(propagate_nonlinear(rho, ham, 1.0, 0.5), ContractError);
}

TEST(PropagateLinear, ClosedFormPoints) {
  // dph, gamma = 1, Delta = 1: (Omega)_11 = e^{-2 Gamma t}/2, Gamma = 2
  const auto dph = tls::build_model({Model::dph, 1.0, 0.0, 1.0, 0.0, InitFamily::x});
  const auto omega = propagate_linear(tls::initial_state(InitFamily::x, 0.0), dph, 0.0, 0.5);
  EXPECT_NEAR(omega.matrix()(0, 0).real(), 0.067667641618306346, 1e-15);

  // ed, a2 = 1: tr Omega(0.5) = 2 cosh(1) - 1
  const auto ed = tls::build_model({Model::ed, 1.0, 1.0, 0.0, 0.0, InitFamily::x});
  const auto omega_ed = propagate_linear(tls::initial_state(InitFamily::x, 0.0), ed, 0.0, 0.5);
  EXPECT_NEAR(omega_ed.trace().real(), 2.0861612696304876, 1e-14);
  EXPECT_NEAR(omega_ed.trace().imag(), 0.0, 1e-15);
}

TEST(PropagateLinear, MatchesIndependentExponential) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 50; ++i) {
    const HamiltonianSplit ham(random_hermitian(rng, 2.0), random_hermitian(rng, 1.0));
    const auto omega0 = random_unit_trace(rng);
    const double t = 0.1 * (i % 20);
    const auto ours = propagate_linear(omega0, ham, 0.0, t);
    const auto ref = reference::linear(omega0.matrix(), ham.full(), t);
    EXPECT_LE(max_abs_diff(ours.matrix(), ref), 1e-12 * std::max(1.0, ref.max_abs()));
  }
}

TEST(PropagateLinear, Rk4AgreesWithExact) {
  const auto ham = tls::build_model({Model::ed, 1.0, 0.5, 0.3, 0.0, InitFamily::z});
  const auto rho = tls::initial_state(InitFamily::z, 0.5);
  const auto exact = propagate_linear(rho, ham, 0.0, 2.0, kExact);
  const auto rk4 = propagate_linear(rho, ham, 0.0, 2.0, kRk4);
  EXPECT_LE(max_abs_diff(exact.matrix(), rk4.matrix()), 1e-10);
}

TEST(PropagateLinear, TraceLawResidualAlongTrajectory) {
  const auto ham = tls::build_model({Model::dph, 1.0, 0.0, 1.0, 0.0, InitFamily::x});
  const auto rho = tls::initial_state(InitFamily::x, 0.0);
  for (const auto& [cfg, tol] : {std::pair{kRk4, 1e-6}, std::pair{PropagationConfig{Method::exact_exponential, 1e-4, 1}, 1e-9}}) {
    const auto traj = linear_trajectory(rho, ham, 0.0, 1.0, cfg);
    double worst = 0.0;
    // five-point stencil, O(h^4)
    for (std::size_t i = 2; i + 2 < traj.size(); ++i) {
      const double h = traj[i + 1].t - traj[i].t;
      const cplx derivative = (-traj[i + 2].state.trace() + 8.0 * traj[i + 1].state.trace() -
                               8.0 * traj[i - 1].state.trace() + traj[i - 2].state.trace()) /
                              (12.0 * h);
      const cplx law = -2.0 * (traj[i].state.matrix() * ham.gamma).trace();
      worst = std::max(worst, std::abs(derivative - law));
    }
    EXPECT_LE(worst, tol) << to_string(cfg.method);
  }
}

TEST(PropagateLinear, HermiticityAndRankPreserved) {
  for (auto model : {Model::ed, Model::pd, Model::dph}) {
    const auto ham = tls::build_model({model, 1.0, 0.5, 1.0, 0.0, InitFamily::x});
    for (auto fam : {InitFamily::x, InitFamily::z}) {
      const auto rho = tls::initial_state(fam, 0.0);
      for (int k = 0; k <= 50; ++k) {
        const double t = 0.1 * k;
        const auto omega = propagate_linear(rho, ham, 0.0, t);
        EXPECT_LE((omega.matrix() - omega.matrix().adjoint()).max_abs(), 1e-10 * omega.matrix().max_abs());
        const auto normalized = normalize(omega);
        const auto herm = 0.5 * (normalized.matrix() + normalized.matrix().adjoint());
        EXPECT_LE(hermitian_eigenvalues(herm).front(), 1e-8);
      }
    }
  }
}

TEST(PropagateNonlinear, HermitianLimitIsUnitaryConjugation) {
  std::mt19937_64 rng(6);
  const HamiltonianSplit ham(random_hermitian(rng, 2.0), ComplexMatrix::zero(2));
  const auto rho = tls::initial_state(InitFamily::x, 0.0);
  for (double t : {0.0, 0.3, 1.7}) {
    const auto u = reference::expm(cplx(0, -t) * ham.h_plus);
    const auto expected = u * rho.matrix() * u.adjoint();
    const auto got = propagate_nonlinear(rho, ham, 0.0, t);
    EXPECT_TRUE(got.normalized());
    EXPECT_LE(max_abs_diff(got.matrix(), expected), 1e-13);
    // purity and trace constant
    EXPECT_NEAR((got.matrix() * got.matrix()).trace().real(), 1.0, 1e-10);
    EXPECT_NEAR(propagate_linear(rho, ham, 0.0, t).trace().real(), 1.0, 1e-10);
  }
}

TEST(PropagateNonlinear, EdAverageAtHalf) {
  const auto ed = tls::build_model({Model::ed, 1.0, 1.0, 0.0, 0.0, InitFamily::x});
  const auto rho = propagate_nonlinear(tls::initial_state(InitFamily::x, 0.0), ed, 0.0, 0.5);
  EXPECT_NEAR(expectation(rho, sigma_x()).real(), 0.47934932670719438, 1e-14);
  EXPECT_NEAR(expectation(rho, sigma_y()).real(), -0.8236572375650502, 1e-14);
  EXPECT_NEAR(expectation(rho, sigma_z()).real(), -0.30300656427224458, 1e-14);
  EXPECT_NEAR(expectation(rho, identity()).real(), 1.0, 1e-15);
}

TEST(PropagateNonlinear, AnsatzMatchesDirectIntegration) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 20; ++i) {
    const HamiltonianSplit ham(random_hermitian(rng, 1.5), random_hermitian(rng, 1.0));
    const auto x0 = random_unit_trace(rng);
    const auto ansatz = propagate_nonlinear(x0, ham, 0.0, 1.0, kExact);
    const auto direct = detail::rk4_integrate(x0.matrix(), 0.0, 1.0, 1e-3,
                                              [&](const ComplexMatrix& m) { return nonlinear_rhs(m, ham); });
    EXPECT_LE(max_abs_diff(ansatz.matrix(), direct), 1e-6);
    // normalized-linear equivalence
    EXPECT_LE(max_abs_diff(ansatz.matrix(), normalize(propagate_linear(x0, ham, 0.0, 1.0)).matrix()), 1e-10);
  }
}

TEST(PropagateNonlinear, NonUnitTraceRoutes) {
  // Shifted normalization (exact) against direct rk4 integration of the same equation.
  std::mt19937_64 rng(8);
  for (int i = 0; i < 20; ++i) {
    const HamiltonianSplit ham(random_hermitian(rng, 1.5), 0.5 * random_hermitian(rng, 1.0));
    const auto x0 = StateMatrix(sigma_y() * random_unit_trace(rng).matrix());
    ASSERT_FALSE(x0.has_unit_trace());
    EXPECT_EQ(nonlinear_path(x0, kExact), NonlinearPath::shifted_normalization);
    EXPECT_EQ(nonlinear_path(x0, kRk4), NonlinearPath::direct_rk4);
    const auto exact = propagate_nonlinear(x0, ham, 0.2, 1.0, kExact);
    const auto rk4 = propagate_nonlinear(x0, ham, 0.2, 1.0, kRk4);
    EXPECT_FALSE(exact.normalized());
    EXPECT_LE(max_abs_diff(exact.matrix(), rk4.matrix()), 1e-9 * std::max(1.0, exact.matrix().max_abs()));
  }
}

TEST(PropagateNonlinear, TraceSingularity) {
  // tr(Omega) decays like e^{-2 g t}; at g t ~ 20 it underflows the singularity threshold
  const HamiltonianSplit ham(ComplexMatrix::zero(2), 10.0 * identity());
  const auto rho = StateMatrix(0.5 * identity(), true);
  try {
    propagate_nonlinear(rho, ham, 0.0, 2.0);
    FAIL() << "expected SingularityError";
  } catch (const SingularityError& e) {
    EXPECT_DOUBLE_EQ(e.time(), 2.0);
  }
}

TEST(Normalize, Examples) {
  const auto rho = tls::initial_state(InitFamily::x, 0.0);
  EXPECT_EQ(normalize(rho).matrix(), rho.matrix());
  EXPECT_LE(max_abs_diff(normalize(StateMatrix(3.0 * rho.matrix())).matrix(), rho.matrix()), 1e-16);
  EXPECT_EQ(normalize(StateMatrix(2.0 * identity())).matrix(), 0.5 * identity());
  EXPECT_THROW(normalize(StateMatrix(sigma_z())), SingularityError);
}

TEST(Expectation, Examples) {
  EXPECT_DOUBLE_EQ(expectation(tls::initial_state(InitFamily::z, 0.0), sigma_z()).real(), 1.0);
  // unflagged states are normalized first
  EXPECT_DOUBLE_EQ(expectation(StateMatrix(4.0 * tls::initial_state(InitFamily::z, 0.0).matrix()), sigma_z()).real(), 1.0);
  EXPECT_THROW(expectation(StateMatrix(sigma_x()), sigma_z()), SingularityError);
  EXPECT_THROW(expectation(StateMatrix(identity()), ComplexMatrix::identity(3)), InputError);
}

TEST(StateMatrix, NormalizedFlagIsChecked) {
  EXPECT_THROW(StateMatrix(identity(), true), ContractError);
  EXPECT_NO_THROW(StateMatrix(identity(), false));
}

TEST(PropagationConfig, Validation) {
  const auto ham = tls::build_model({});
  const auto rho = tls::initial_state(InitFamily::x, 0.0);
  EXPECT_THROW(propagate_linear(rho, ham, 0.0, 1.0, {Method::rk4, 0.0, 1}), InputError);
  EXPECT_THROW(propagate_linear(rho, ham, 0.0, 1.0, {Method::rk4, 1e-3, 0}), InputError);
}
