#include "powercap/error.hpp"
#include "powercap/hybrid_model.hpp"
#include "powercap/datasets.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace powercap;
using powercap::test::default_params;

namespace {

// Single linear layer with zero output.
NeuralNet zero_head(int inputs)
{
    DenseLayer layer{Eigen::MatrixXd::Zero(1, inputs), Eigen::VectorXd::Zero(1), Activation::kIdentity};
    return NeuralNet({layer}, Normalization::identity(inputs), Normalization::identity(1));
}

// Linear head returning `weight` times one input feature.
NeuralNet feature_head(int inputs, int feature, double weight)
{
    DenseLayer layer{Eigen::MatrixXd::Zero(1, inputs), Eigen::VectorXd::Zero(1), Activation::kIdentity};
    layer.weights(0, feature) = weight;
    return NeuralNet({layer}, Normalization::identity(inputs), Normalization::identity(1));
}

const HybridModel& shipped()
{
    static const HybridModel m(default_params(), load(test::data_dir() / "artifacts" / "h_v.net"),
                               load(test::data_dir() / "artifacts" / "h_t.net"));
    return m;
}

} // namespace

TEST(HybridVoltage, FallbackAtRestIsOcv)
{
    const HybridModel m = HybridModel::physics_only(default_params());
    const CellState x = make_state(0.63, 0.41, 0.0, 25, 25);
    EXPECT_EQ(hybrid_voltage(m, x, 0.0), default_params().ndc.ocv(0.41));
}

TEST(HybridVoltage, FallbackIsCircuitOutput)
{
    const auto& p = default_params();
    const HybridModel m = HybridModel::physics_only(p);
    const CellState x = make_state(0.8, 0.7, -0.05, 30, 28);
    EXPECT_DOUBLE_EQ(hybrid_voltage(m, x, 10.0), p.ndc.ocv(0.7) - 0.05 - p.ndc.r_0 * 10.0);
}

TEST(HybridVoltage, ZeroHeadEqualsCircuitOutput)
{
    const HybridModel m(default_params(), zero_head(kVoltageNetInputs), zero_head(3));
    const CellState x = make_state(0.8, 0.7, -0.05, 30, 28);
    EXPECT_EQ(hybrid_voltage(m, x, 10.0), physics_voltage(m, x, 10.0));
    EXPECT_EQ(hybrid_temperature(m, x), 28.0);
}

TEST(HybridVoltage, HeadAddsItsOutput)
{
    // Head returns -0.01 * i, an extra ohmic drop.
    const HybridModel m(default_params(), feature_head(kVoltageNetInputs, 5, -0.01), zero_head(3));
    const CellState x = make_state(0.8, 0.7, -0.05, 30, 28);
    EXPECT_NEAR(hybrid_voltage(m, x, 10.0), physics_voltage(m, x, 10.0) - 0.1, 1e-15);
}

TEST(HybridTemperature, MaskSelectsFeatures)
{
    // Default mask (v_b, t_core, t_surf): feature 1 is t_core.
    const HybridModel m(default_params(), zero_head(kVoltageNetInputs), feature_head(3, 1, 0.5));
    const CellState x = make_state(0.8, 0.7, -0.05, 30, 28);
    EXPECT_DOUBLE_EQ(hybrid_temperature(m, x), 28.0 + 15.0);
    const HybridModel full(default_params(), zero_head(kVoltageNetInputs), feature_head(5, 1, 2.0),
                           TemperatureMask::full());
    EXPECT_DOUBLE_EQ(hybrid_temperature(full, x), 28.0 + 1.4);
}

TEST(HybridTemperature, FallbackReturnsSurfaceTemperature)
{
    const HybridModel m = HybridModel::physics_only(default_params());
    EXPECT_EQ(hybrid_temperature(m, rest_state(0.5, default_params().t_amb)), default_params().t_amb);
    EXPECT_EQ(hybrid_temperature(m, make_state(0.3, 0.2, -0.1, 41.5, 37.25)), 37.25);
}

TEST(HybridModel, MissingHeadsRefuseWithoutFallback)
{
    const HybridModel m(default_params(), std::nullopt, std::nullopt);
    const CellState x = rest_state(1.0, 25);
    EXPECT_THROW(hybrid_voltage(m, x, 1.0), InvalidArgument);
    EXPECT_THROW(hybrid_temperature(m, x), InvalidArgument);
    EXPECT_NO_THROW(physics_voltage(m, x, 1.0));
}

TEST(HybridModel, RejectsMismatchedHeads)
{
    EXPECT_THROW(HybridModel(default_params(), zero_head(5), zero_head(3)), InvalidArgument);
    EXPECT_THROW(HybridModel(default_params(), zero_head(6), zero_head(5)), InvalidArgument);
    EXPECT_THROW(HybridModel(default_params(), zero_head(6), zero_head(3), TemperatureMask{{0, 9}}),
                 InvalidArgument);
    auto p = default_params();
    p.capacity_ah = 0;
    EXPECT_THROW(HybridModel::physics_only(p), InvalidArgument);
}

TEST(HybridModel, ShippedHeadsTrackReferenceCell)
{
    const ReferenceCell cell = load_reference_cell(test::data_dir() / "reference_cell.json");
    const auto samples = build_fit_dataset(cell, default_params(), {0.5, 2.0, 5.0, 8.0});
    double sv_h = 0, sv_p = 0, st_h = 0, st_p = 0;
    for (const auto& s : samples) {
        sv_h += std::pow(hybrid_voltage(shipped(), s.physics_state, s.current) - s.v_true, 2);
        sv_p += std::pow(physics_voltage(shipped(), s.physics_state, s.current) - s.v_true, 2);
        st_h += std::pow(hybrid_temperature(shipped(), s.physics_state) - s.t_true, 2);
        st_p += std::pow(physics_temperature(shipped(), s.physics_state) - s.t_true, 2);
    }
    const auto n = static_cast<double>(samples.size());
    EXPECT_LT(std::sqrt(sv_h / n), 2e-3);
    EXPECT_LT(std::sqrt(sv_h / n), 0.2 * std::sqrt(sv_p / n));
    EXPECT_LT(std::sqrt(st_h / n), 0.1);
    EXPECT_LT(std::sqrt(st_h / n), 0.2 * std::sqrt(st_p / n));
}

TEST(Simulate, EmptyProfileKeepsInitialRecord)
{
    const HybridModel m = HybridModel::physics_only(default_params());
    const Trajectory t = simulate(m, rest_state(1.0, 25), {});
    ASSERT_EQ(t.size(), 1u);
    EXPECT_EQ(t[0].time, 0.0);
}

TEST(Simulate, RecordsEveryStep)
{
    const HybridModel m = HybridModel::physics_only(default_params());
    const Trajectory t = simulate(m, rest_state(1.0, 25), {{5.0, 6.0}}, 2.0);
    ASSERT_EQ(t.size(), 4u);
    for (std::size_t k = 1; k < t.size(); ++k)
        EXPECT_GT(t[k].time, t[k - 1].time);
    EXPECT_EQ(t.back().time, 6.0);
}

TEST(Simulate, FractionalSegmentEndIsRecorded)
{
    const HybridModel m = HybridModel::physics_only(default_params());
    const Trajectory t = simulate(m, rest_state(1.0, 25), {{5.0, 2.5}, {1.0, 1.0}});
    std::vector<double> times;
    for (const auto& p : t)
        times.push_back(p.time);
    EXPECT_EQ(times, (std::vector<double>{0, 1, 2, 2.5, 3.5}));
}

TEST(Simulate, ComposesSegmentPropagation)
{
    const auto& p = default_params();
    const HybridModel m = HybridModel::physics_only(p);
    const CellState x0 = rest_state(0.9, 25);
    const CurrentProfile profile{{12.5, 75.0}, {3.7, 120.0}};
    const CellState chained = propagate(m.physics(), propagate(m.physics(), x0, 12.5, p.t_amb, 75.0), 3.7, p.t_amb,
                                        120.0);
    // One record per segment: the same single transitions.
    const Trajectory coarse = simulate(m, x0, {{12.5, 75.0}}, 75.0);
    EXPECT_EQ(coarse.back().state, propagate(m.physics(), x0, 12.5, p.t_amb, 75.0));
    const Trajectory fine = simulate(m, x0, profile);
    EXPECT_LT(test::scaled_error(fine.back().state, chained), 1e-10);
}

TEST(Simulate, RejectsBadStep)
{
    const HybridModel m = HybridModel::physics_only(default_params());
    EXPECT_THROW(simulate(m, rest_state(1.0, 25), {{1, 1}}, 0.0), InvalidArgument);
    EXPECT_THROW(simulate(m, rest_state(1.0, 25), {{1, -1}}), InvalidArgument);
}
