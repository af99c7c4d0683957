#ifndef POWERCAP_HYBRID_MODEL_HPP
#define POWERCAP_HYBRID_MODEL_HPP

#include "powercap/cell_model.hpp"
#include "powercap/mlp.hpp"

#include <array>
#include <optional>
#include <span>
#include <vector>

namespace powercap {

/// State components fed to the temperature head.
struct TemperatureMask
{
    std::vector<int> indices{kVb, kTcore, kTsurf};

    static TemperatureMask full() { return {{kVb, kVs, kV1, kTcore, kTsurf}}; }
};

/// Linear electro-thermal physics cascaded with two neural heads.
///
/// The heads predict corrections on top of the physics outputs:
///   V = h(v_s) + v_1 - r_0 i + net_v(x, i)
///   T = t_surf + net_t(mask(x))
/// A model built with `physics_only` evaluates the physics outputs alone; a
/// model missing a head otherwise refuses to evaluate it.
class HybridModel
{
public:
    HybridModel(ModelParams params, std::optional<NeuralNet> net_v, std::optional<NeuralNet> net_t,
                TemperatureMask mask = {});

    static HybridModel physics_only(ModelParams params);

    const PhysicsModel& physics() const { return physics_; }
    const ModelParams& params() const { return physics_.params(); }
    double capacity_ah() const { return physics_.params().capacity_ah; }
    double t_amb() const { return physics_.params().t_amb; }
    const TemperatureMask& temperature_mask() const { return mask_; }

    const std::optional<NeuralNet>& voltage_net() const { return net_v_; }
    const std::optional<NeuralNet>& temperature_net() const { return net_t_; }
    bool fallback_allowed() const { return fallback_; }

    HybridModel with_nets(std::optional<NeuralNet> net_v, std::optional<NeuralNet> net_t) const;

private:
    PhysicsModel physics_;
    std::optional<NeuralNet> net_v_;
    std::optional<NeuralNet> net_t_;
    TemperatureMask mask_;
    bool fallback_ = false;
};

inline constexpr int kVoltageNetInputs = kStateDim + 1;

/// Feature vector of the voltage head: [x, i].
std::array<double, kVoltageNetInputs> voltage_features(const CellState& x, double current);
std::vector<double> temperature_features(const TemperatureMask& mask, const CellState& x);

double hybrid_voltage(const HybridModel& m, const CellState& x, double current);
double hybrid_temperature(const HybridModel& m, const CellState& x);

/// Physics-only outputs regardless of the heads.
double physics_voltage(const HybridModel& m, const CellState& x, double current);
double physics_temperature(const HybridModel& m, const CellState& x);

struct TrajectoryPoint
{
    double time = 0;
    CellState state;
    double current = 0; ///< current flowing at this instant (the segment being entered/continued)
    double voltage = 0;
    double temperature = 0;
};

using Trajectory = std::vector<TrajectoryPoint>;

/// Exact propagation along a piecewise-constant profile, recording every
/// `step` seconds (and at segment ends that are not a multiple of `step`).
Trajectory simulate(const HybridModel& m, const CellState& x0, const CurrentProfile& profile, double step = 1.0);

} // namespace powercap

#endif // POWERCAP_HYBRID_MODEL_HPP
