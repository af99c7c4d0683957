#include "powercap/cell_model.hpp"
#include "powercap/error.hpp"
#include "powercap/expm.hpp"
#include "powercap/hybrid_model.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>
#include <unsupported/Eigen/MatrixFunctions>

#include <random>

using namespace powercap;
using powercap::test::default_params;

namespace {

OcvCurve small_curve() { return OcvCurve({{0.0, 3.0}, {0.5, 3.6}, {1.0, 4.2}}); }

CellState random_state(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> charge(0.05, 1.0), pol(-0.15, 0.05), temp(15.0, 45.0);
    return make_state(charge(rng), charge(rng), pol(rng), temp(rng), temp(rng));
}

} // namespace

TEST(Ocv, BreakpointsAreExact)
{
    const auto c = small_curve();
    EXPECT_EQ(c(0.0), 3.0);
    EXPECT_EQ(c(0.5), 3.6);
    EXPECT_EQ(c(1.0), 4.2);
    EXPECT_EQ(ocv(c, 0.5), 3.6);
}

TEST(Ocv, ClampsOutsideDomain)
{
    const auto c = small_curve();
    EXPECT_EQ(c(-0.3), 3.0);
    EXPECT_EQ(c(1.7), 4.2);
}

TEST(Ocv, MidpointIsMeanOfNeighbours)
{
    const auto c = small_curve();
    EXPECT_NEAR(c(0.25), 0.5 * (3.0 + 3.6), 1e-15);
    EXPECT_NEAR(c(0.75), 0.5 * (3.6 + 4.2), 1e-15);
}

TEST(Ocv, StrictlyIncreasingOverDefaultDomain)
{
    const auto& c = default_params().ndc.ocv;
    double prev = c(c.domain_low());
    for (int k = 1; k <= 1000; ++k) {
        const double v = c(c.domain_low() + (c.domain_high() - c.domain_low()) * k / 1000.0);
        EXPECT_GT(v, prev);
        prev = v;
    }
}

TEST(Ocv, InverseRoundTrips)
{
    const auto& c = default_params().ndc.ocv;
    for (double v = 0.0; v <= 1.0; v += 0.037)
        EXPECT_NEAR(c.inverse(c(v)), v, 1e-12);
}

TEST(Ocv, RejectsInvalidTables)
{
    EXPECT_THROW(OcvCurve({{0.0, 3.0}}), InvalidArgument);
    EXPECT_THROW(OcvCurve({{0.0, 3.0}, {0.5, 2.9}}), InvalidArgument);
    EXPECT_THROW(OcvCurve({{0.0, 3.0}, {0.0, 3.5}}), InvalidArgument);
}

TEST(ModelParams, ValidationRejectsNonPositiveConstants)
{
    auto p = default_params();
    p.ndc.r_b = 0;
    EXPECT_THROW(validate(p), InvalidArgument);
    p = default_params();
    p.thermal.c_surf = -1;
    EXPECT_THROW(PhysicsModel{p}, InvalidArgument);
    p = default_params();
    p.capacity_ah = std::nan("");
    EXPECT_THROW(validate(p), InvalidArgument);
}

TEST(LinearSystem, NdcEigenvaluesMatchClosedForm)
{
    const auto& p = default_params();
    const auto& n = p.ndc;
    Eigen::Vector3d ev = linear_system(p).a_ndc.eigenvalues().real();
    std::sort(ev.data(), ev.data() + 3);
    Eigen::Vector3d expected(-(1 / n.c_b + 1 / n.c_s) / n.r_b, -1 / (n.r_1 * n.c_1), 0.0);
    std::sort(expected.data(), expected.data() + 3);
    for (int k = 0; k < 3; ++k)
        EXPECT_NEAR(ev[k], expected[k], 1e-12 * std::max(1.0, std::abs(expected[k])));
}

TEST(LinearSystem, ThermalMatrixIsHurwitz)
{
    const Eigen::Vector2cd ev = linear_system(default_params()).a_therm.eigenvalues();
    EXPECT_LT(ev[0].real(), 0);
    EXPECT_LT(ev[1].real(), 0);
}

TEST(StateDerivative, EquilibriumIsStationary)
{
    const PhysicsModel m(default_params());
    const CellStateDerivative d = state_derivative(m, rest_state(0.7, 25.0), 0.0, 25.0);
    EXPECT_LT(d.cwiseAbs().maxCoeff(), 1e-14);
}

TEST(StateDerivative, RestExchangeConservesCharge)
{
    const auto& p = default_params();
    const PhysicsModel m(p);
    const CellStateDerivative d = state_derivative(m, make_state(0.8, 0.6, 0, 25, 25), 0.0, 25.0);
    EXPECT_LT(d[kVb], 0);
    EXPECT_GT(d[kVs], 0);
    EXPECT_NEAR(p.ndc.c_b * d[kVb] + p.ndc.c_s * d[kVs], 0.0, 1e-12);
}

TEST(StateDerivative, ChargeIdentityHoldsForAnyInput)
{
    const auto& p = default_params();
    const PhysicsModel m(p);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> current(-10, 25);
    for (int trial = 0; trial < 100; ++trial) {
        const double i = current(rng);
        const CellStateDerivative d = state_derivative(m, random_state(rng), i, 25.0);
        EXPECT_NEAR(p.ndc.c_b * d[kVb] + p.ndc.c_s * d[kVs], -i, 1e-9 * std::max(1.0, std::abs(i)));
    }
}

TEST(StateDerivative, MatchesTermByTermRhs)
{
    const auto& p = default_params();
    const PhysicsModel m(p);
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 50; ++trial) {
        const CellState x = random_state(rng);
        const CellStateDerivative a = state_derivative(m, x, 7.3, 21.0);
        const CellStateDerivative b = test::linear_rhs(p, x, 7.3, 21.0);
        EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(Expm, AgreesWithEigenMatrixFunctions)
{
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g;
    // Norms spanning every Pade degree and the scaling branch.
    for (const double scale : {1e-3, 0.1, 0.5, 1.5, 4.0, 30.0, 400.0}) {
        Eigen::Matrix4d a;
        for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 4; ++c)
                a(r, c) = scale * g(rng) / 4.0;
        const Eigen::Matrix4d ours = expm(a);
        const Eigen::Matrix4d ref = a.exp();
        EXPECT_LT((ours - ref).norm(), 1e-12 * std::max(1.0, ref.norm())) << "scale " << scale;
    }
}

TEST(Expm, NilpotentIsExactPolynomial)
{
    Eigen::Matrix3d n = Eigen::Matrix3d::Zero();
    n(0, 1) = 2.0;
    n(1, 2) = 3.0;
    Eigen::Matrix3d expected = Eigen::Matrix3d::Identity() + n + 0.5 * n * n;
    EXPECT_LT((expm(n) - expected).norm(), 1e-14);
}

TEST(Propagate, ZeroStepIsIdentity)
{
    const PhysicsModel m(default_params());
    const CellState x = make_state(0.6, 0.55, -0.02, 31, 29);
    EXPECT_EQ(propagate(m, x, 12.0, 25.0, 0.0), x);
}

TEST(Propagate, EquilibriumIsFixedPoint)
{
    const PhysicsModel m(default_params());
    const CellState x = rest_state(0.4, 25.0);
    for (const double dt : {1.0, 60.0, 3600.0})
        EXPECT_LT(test::scaled_error(propagate(m, x, 0.0, 25.0, dt), x), 1e-12);
}

TEST(Propagate, MatchesFineStepRk4At2C)
{
    const auto& p = default_params();
    const PhysicsModel m(p);
    const double i = 2.0 * p.capacity_ah;
    const CellState x0 = make_state(0.9, 0.85, -0.03, 30.0, 28.0);
    const CellState exact = propagate(m, x0, i, 25.0, 10.0);
    const CellState ref = test::rk4([&](const CellState& x) { return test::linear_rhs(p, x, i, 25.0); }, x0, 10.0,
                                    1e-3);
    EXPECT_LT(test::scaled_error(exact, ref), 1e-8);
}

TEST(Propagate, RejectsInvalidInput)
{
    const PhysicsModel m(default_params());
    const CellState x = rest_state(1.0, 25.0);
    EXPECT_THROW(propagate(m, x, 1.0, 25.0, -1.0), InvalidArgument);
    EXPECT_THROW(propagate(m, x, std::nan(""), 25.0, 1.0), InvalidArgument);
    EXPECT_THROW(propagate(m, x, 1.0, INFINITY, 1.0), InvalidArgument);
    CellState bad = x;
    bad[kV1] = NAN;
    EXPECT_THROW(propagate(m, bad, 1.0, 25.0, 1.0), InvalidArgument);
}

TEST(Propagate, IsBitwiseDeterministic)
{
    const PhysicsModel m(default_params());
    const CellState x = make_state(0.7, 0.66, -0.04, 33, 31);
    const CellState a = propagate(m, x, 9.1, 25.0, 17.3);
    const CellState b = propagate(m, x, 9.1, 25.0, 17.3);
    for (int k = 0; k < kStateDim; ++k)
        EXPECT_EQ(std::bit_cast<std::uint64_t>(a[k]), std::bit_cast<std::uint64_t>(b[k]));
}

TEST(Propagate, SemigroupProperty)
{
    const PhysicsModel m(default_params());
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> dt(0.1, 400), current(0, 20);
    for (int trial = 0; trial < 30; ++trial) {
        const CellState x = random_state(rng);
        const double i = current(rng), a = dt(rng), b = dt(rng);
        const CellState two = propagate(m, propagate(m, x, i, 25.0, a), i, 25.0, b);
        const CellState one = propagate(m, x, i, 25.0, a + b);
        EXPECT_LT((two - one).cwiseAbs().maxCoeff(), 1e-10);
    }
}

TEST(Propagate, AcceptsChargingCurrent)
{
    const auto& p = default_params();
    const PhysicsModel m(p);
    const CellState x = propagate(m, rest_state(0.5, 25.0), -2.5, 25.0, 100.0);
    EXPECT_NEAR(p.ndc.c_b * (x[kVb] - 0.5) + p.ndc.c_s * (x[kVs] - 0.5), 250.0, 1e-9 * 250.0);
}

TEST(Transition, ReproducesPropagate)
{
    const PhysicsModel m(default_params());
    const Transition tr = make_transition(m, 11.0, 25.0, 1.0);
    CellState x = rest_state(0.95, 25.0);
    CellState y = x;
    for (int k = 0; k < 50; ++k) {
        x = tr.apply(x);
        y = propagate(m, y, 11.0, 25.0, 1.0);
    }
    EXPECT_LT((x - y).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Invariants, ChargeBookkeepingAlongProfile)
{
    const auto& p = default_params();
    const HybridModel m = HybridModel::physics_only(p);
    const CurrentProfile profile{{12.5, 75}, {3.7, 900}, {12.5, 105}, {0.0, 60}, {-2.0, 30.5}};
    const CellState x0 = rest_state(1.0, 25.0);
    const Trajectory traj = simulate(m, x0, profile);
    const auto charge = [&](const CellState& x) { return p.ndc.c_b * x[kVb] + p.ndc.c_s * x[kVs]; };
    const double delta = charge(traj.back().state) - charge(x0);
    EXPECT_LT(std::abs(delta + profile_charge(profile)), 1e-9 * profile_charge(profile));
}

// The distance to ambient contracts in the heat-capacity-weighted norm, for
// which C * A_therm is symmetric negative definite. The unweighted norm can
// grow while the core warms the surface.
TEST(Invariants, ThermalContractionAtRest)
{
    const auto& t = default_params().thermal;
    const PhysicsModel m(default_params());
    const auto energy = [&](const CellState& x) {
        return std::sqrt(t.c_core * std::pow(x[kTcore] - 25.0, 2) + t.c_surf * std::pow(x[kTsurf] - 25.0, 2));
    };
    for (const auto& [core, surf] : {std::pair{47.0, 38.0}, {25.0, 40.0}, {10.0, 30.0}, {45.0, 25.0}}) {
        CellState x = make_state(0.5, 0.5, 0, core, surf);
        double prev = energy(x);
        for (int k = 0; k < 2000; ++k) {
            x = propagate(m, x, 0.0, 25.0, 1.0);
            EXPECT_LE(energy(x), prev * (1 + 1e-12));
            prev = energy(x);
        }
        EXPECT_LT(prev, 0.05 * energy(make_state(0.5, 0.5, 0, core, surf)) + 1e-9);
    }
}

TEST(Invariants, FallbackVoltageFallsUnderSustainedDischarge)
{
    const auto& p = default_params();
    const HybridModel m = HybridModel::physics_only(p);
    for (double c_rate = 1; c_rate <= 8; c_rate += 1) {
        const double i = c_rate * p.capacity_ah;
        const double transient = 5 * p.ndc.r_1 * p.ndc.c_1;
        const Trajectory traj = simulate(m, rest_state(1.0, 25.0), {{i, 3600.0 / c_rate}});
        for (std::size_t k = 1; k < traj.size(); ++k) {
            if (traj[k - 1].time < transient || traj[k].state[kVs] <= p.ndc.ocv.domain_low())
                continue;
            EXPECT_LT(traj[k].voltage, traj[k - 1].voltage) << c_rate << "C at t = " << traj[k].time;
        }
    }
}

TEST(Calibration, OneCDischargeLastsAboutAnHour)
{
    const auto& p = default_params();
    const HybridModel m = HybridModel::physics_only(p);
    const Trajectory traj = simulate(m, rest_state(1.0, 25.0), {{p.capacity_ah, 4000.0}});
    EXPECT_NEAR(traj.front().voltage + p.ndc.r_0 * p.capacity_ah, 4.2, 1e-12);
    double cutoff = -1;
    for (const auto& pt : traj)
        if (pt.voltage < 3.0) {
            cutoff = pt.time;
            break;
        }
    EXPECT_GT(cutoff, 0.95 * 3600);
    EXPECT_LT(cutoff, 1.05 * 3600);
}

TEST(Calibration, FiveCDischargeRaisesSurfaceBy15To25K)
{
    const auto& p = default_params();
    const HybridModel m = HybridModel::physics_only(p);
    const Trajectory traj = simulate(m, rest_state(1.0, 25.0), {{5 * p.capacity_ah, 720.0}});
    double rise = 0;
    for (const auto& pt : traj) {
        if (pt.voltage < 3.0)
            break;
        rise = std::max(rise, pt.temperature - 25.0);
    }
    EXPECT_GE(rise, 15.0);
    EXPECT_LE(rise, 25.0);
}
