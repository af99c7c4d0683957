#include "powercap/hybrid_model.hpp"

#include "powercap/error.hpp"

#include <cmath>

namespace powercap {

HybridModel::HybridModel(ModelParams params, std::optional<NeuralNet> net_v, std::optional<NeuralNet> net_t,
                         TemperatureMask mask)
    : physics_(std::move(params)), net_v_(std::move(net_v)), net_t_(std::move(net_t)), mask_(std::move(mask))
{
    if (mask_.indices.empty())
        throw InvalidArgument("temperature mask is empty");
    for (int idx : mask_.indices)
        if (idx < 0 || idx >= kStateDim)
            throw InvalidArgument("temperature mask index out of range");
    if (net_v_ && (net_v_->input_dim() != kVoltageNetInputs || net_v_->output_dim() != 1))
        throw InvalidArgument("voltage head must map 6 inputs to 1 output");
    if (net_t_ && (net_t_->input_dim() != static_cast<int>(mask_.indices.size()) || net_t_->output_dim() != 1))
        throw InvalidArgument("temperature head input width must match the mask (" +
                              std::to_string(mask_.indices.size()) + ")");
}

HybridModel HybridModel::physics_only(ModelParams params)
{
    HybridModel m(std::move(params), std::nullopt, std::nullopt);
    m.fallback_ = true;
    return m;
}

HybridModel HybridModel::with_nets(std::optional<NeuralNet> net_v, std::optional<NeuralNet> net_t) const
{
    HybridModel m(params(), std::move(net_v), std::move(net_t), mask_);
    m.fallback_ = fallback_;
    return m;
}

std::array<double, kVoltageNetInputs> voltage_features(const CellState& x, double current)
{
    return {x[0], x[1], x[2], x[3], x[4], current};
}

std::vector<double> temperature_features(const TemperatureMask& mask, const CellState& x)
{
    std::vector<double> f;
    f.reserve(mask.indices.size());
    for (int idx : mask.indices)
        f.push_back(x[idx]);
    return f;
}

double physics_voltage(const HybridModel& m, const CellState& x, double current)
{
    return m.physics().ndc_voltage(x, current);
}

double physics_temperature(const HybridModel&, const CellState& x) { return x[kTsurf]; }

double hybrid_voltage(const HybridModel& m, const CellState& x, double current)
{
    const double base = m.physics().ndc_voltage(x, current);
    if (m.voltage_net()) {
        const auto f = voltage_features(x, current);
        return base + m.voltage_net()->forward_scalar(f);
    }
    if (!m.fallback_allowed())
        throw InvalidArgument("voltage head is untrained and physics-only fallback was not requested");
    return base;
}

double hybrid_temperature(const HybridModel& m, const CellState& x)
{
    if (m.temperature_net()) {
        std::array<double, kStateDim> f{};
        const auto& idx = m.temperature_mask().indices;
        for (std::size_t k = 0; k < idx.size(); ++k)
            f[k] = x[idx[k]];
        return x[kTsurf] + m.temperature_net()->forward_scalar(std::span<const double>(f.data(), idx.size()));
    }
    if (!m.fallback_allowed())
        throw InvalidArgument("temperature head is untrained and physics-only fallback was not requested");
    return x[kTsurf];
}

Trajectory simulate(const HybridModel& m, const CellState& x0, const CurrentProfile& profile, double step)
{
    if (!(step > 0) || !std::isfinite(step))
        throw InvalidArgument("simulation step must be positive");
    if (!x0.allFinite())
        throw InvalidArgument("initial state is not finite");
    const double t_amb = m.t_amb();
    Trajectory out;
    const double i0 = profile.empty() ? 0.0 : profile.front().current;
    out.push_back({0.0, x0, i0, hybrid_voltage(m, x0, i0), hybrid_temperature(m, x0)});

    CellState x = x0;
    double t = 0;
    for (const auto& seg : profile) {
        if (!(seg.duration >= 0))
            throw InvalidArgument("profile segment durations must be >= 0");
        const double ratio = seg.duration / step;
        auto n_full = static_cast<long>(std::floor(ratio + 1e-9));
        double remainder = seg.duration - static_cast<double>(n_full) * step;
        if (remainder < 1e-9 * step)
            remainder = 0;
        const Transition tr = make_transition(m.physics(), seg.current, t_amb, step);
        const double t_start = t;
        for (long k = 1; k <= n_full; ++k) {
            x = tr.apply(x);
            t = t_start + static_cast<double>(k) * step;
            out.push_back({t, x, seg.current, hybrid_voltage(m, x, seg.current), hybrid_temperature(m, x)});
        }
        if (remainder > 0) {
            x = propagate(m.physics(), x, seg.current, t_amb, remainder);
            t = t_start + seg.duration;
            out.push_back({t, x, seg.current, hybrid_voltage(m, x, seg.current), hybrid_temperature(m, x)});
        }
        if (!x.allFinite())
            throw NumericalError("simulation produced a non-finite state");
    }
    return out;
}

} // namespace powercap
