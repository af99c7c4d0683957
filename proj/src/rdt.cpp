#include "powercap/rdt.hpp"

#include "powercap/error.hpp"

#include <cmath>
#include <limits>

namespace powercap {

void RdtSettings::validate() const
{
    if (checkpoints < 2)
        throw InvalidArgument("RDT checkpoint count must be >= 2");
    if (!(temp_tolerance > 0) || !(time_tolerance > 0))
        throw InvalidArgument("RDT bisection tolerances must be > 0");
    if (!(horizon_cap > 0) || !(time_offset > 0))
        throw InvalidArgument("RDT horizon cap and time offset must be > 0");
    if (!std::isfinite(v_min) || std::isnan(t_max))
        throw InvalidArgument("RDT limits must be numbers");
}

std::array<double, kRdtNetInputs> rdt_features(const CellState& x, double current, double t_amb)
{
    return {x[0], x[1], x[2], x[3], x[4], current, t_amb};
}

namespace {

// Bisection on [lo, hi] for the first time a monotone predicate flips, starting
// from x_lo at time lo. Returns the bracket midpoint once narrower than `width`.
template <typename Violated>
double refine_crossing(const HybridModel& m, const CellState& x_lo, double current, double t_amb, double width,
                       Violated violated)
{
    double lo = 0.0;
    double hi = 1.0;
    while (hi - lo > width) {
        const double mid = 0.5 * (lo + hi);
        if (violated(propagate(m.physics(), x_lo, current, t_amb, mid)))
            hi = mid;
        else
            lo = mid;
    }
    return 0.5 * (lo + hi);
}

template <typename Violated>
std::optional<double> step_until(const HybridModel& m, const CellState& x0, double current, double t_amb,
                                 double cap, Violated violated)
{
    if (violated(x0))
        return 0.0;
    const Transition tr = make_transition(m.physics(), current, t_amb, 1.0);
    CellState x = x0;
    const auto steps = static_cast<long>(std::ceil(cap));
    for (long k = 1; k <= steps; ++k) {
        const CellState next = tr.apply(x);
        if (violated(next))
            return static_cast<double>(k - 1) + refine_crossing(m, x, current, t_amb, 1e-6, violated);
        x = next;
    }
    return std::nullopt;
}

} // namespace

std::optional<double> rdt_vmin_search(const HybridModel& m, const CellState& x, double current, double t_amb,
                                      double v_min, double cap)
{
    if (!x.allFinite())
        throw InvalidArgument("cell state is not finite");
    return step_until(m, x, current, t_amb, cap,
                      [&](const CellState& s) { return hybrid_voltage(m, s, current) < v_min; });
}

double rdt_vmin_oracle(const HybridModel& m, const CellState& x, double current, double t_amb, double v_min, double cap)
{
    if (!(current > 0))
        throw InvalidArgument("RDT oracle needs a positive discharge current");
    const auto t = rdt_vmin_search(m, x, current, t_amb, v_min, cap);
    if (!t)
        throw NumericalError("RDT oracle cap exceeded (" + std::to_string(cap) + " s)");
    return *t;
}

std::optional<double> rdt_tmax_oracle(const HybridModel& m, const CellState& x, double current, double t_amb,
                                      double t_max, double limit)
{
    if (!std::isfinite(t_max))
        return std::nullopt;
    const auto t = step_until(m, x, current, t_amb, std::ceil(limit),
                              [&](const CellState& s) { return hybrid_temperature(m, s) > t_max; });
    if (t && *t <= limit)
        return t;
    return std::nullopt;
}

RdtPredictor::RdtPredictor(HybridModel model, std::optional<NeuralNet> net, RdtSettings settings)
    : model_(std::move(model)), net_(std::move(net)), settings_(settings)
{
    settings_.validate();
    if (net_ && (net_->input_dim() != kRdtNetInputs || net_->output_dim() != 1))
        throw InvalidArgument("RDT net must map 7 inputs to 1 output");
}

RdtPredictor RdtPredictor::oracle(HybridModel model, RdtSettings settings)
{
    RdtPredictor p(std::move(model), std::nullopt, settings);
    p.oracle_ = true;
    return p;
}

RdtPredictor RdtPredictor::with_t_max(double t_max) const
{
    RdtPredictor p = *this;
    p.settings_.t_max = t_max;
    return p;
}

double rdt_to_target(const RdtSettings& s, double seconds) { return std::log(std::max(seconds, 0.0) + s.time_offset); }

double target_to_rdt(const RdtSettings& s, double target) { return std::max(0.0, std::exp(target) - s.time_offset); }

double predict_rdt_vmin(const RdtPredictor& p, const CellState& x, double current, double t_amb)
{
    const auto& s = p.settings();
    if (p.uses_oracle()) {
        const auto t = rdt_vmin_search(p.model(), x, current, t_amb, s.v_min, s.horizon_cap);
        return t ? *t : s.horizon_cap;
    }
    if (!p.net())
        throw InvalidArgument("RDT net is untrained");
    const auto f = rdt_features(x, current, t_amb);
    return target_to_rdt(s, p.net()->forward_scalar(f));
}

TmaxResult find_rdt_tmax(const RdtPredictor& p, const CellState& x, double current, double t_amb, double upper)
{
    const auto& s = p.settings();
    const HybridModel& m = p.model();
    TmaxResult result;
    if (!std::isfinite(s.t_max) || !(upper > 0))
        return result;
    if (hybrid_temperature(m, x) > s.t_max) {
        result.reached = true;
        return result;
    }

    const double interval = upper / s.checkpoints;
    const Transition tr = make_transition(m.physics(), current, t_amb, interval);
    CellState xk = x;
    int first = 0;
    for (int k = 1; k <= s.checkpoints; ++k) {
        xk = tr.apply(xk);
        if (hybrid_temperature(m, xk) > s.t_max) {
            first = k;
            break;
        }
    }
    if (first == 0)
        return result;

    // A single crossing inside the bracketing interval is assumed.
    double lo = (first - 1) * interval;
    double hi = first * interval;
    result.reached = true;
    for (;;) {
        const double tau = 0.5 * (lo + hi);
        ++result.iterations;
        const double temp = hybrid_temperature(m, propagate(m.physics(), x, current, t_amb, tau));
        if (std::abs(temp - s.t_max) < s.temp_tolerance) {
            result.time = tau;
            return result;
        }
        if (temp < s.t_max)
            lo = tau;
        else
            hi = tau;
        if (hi - lo < s.time_tolerance) {
            result.time = 0.5 * (lo + hi);
            return result;
        }
    }
}

RdtEstimate predict_rdt(const RdtPredictor& p, const CellState& x, double current, double t_amb)
{
    if (!(current >= 0))
        throw InvalidArgument("RDT prediction needs a non-negative discharge current");
    // Without load the terminal voltage only relaxes upward.
    const double t_v = current > 0 ? predict_rdt_vmin(p, x, current, t_amb)
                       : hybrid_voltage(p.model(), x, 0.0) < p.settings().v_min ? 0.0
                                                                                 : p.settings().horizon_cap;
    if (t_v <= 0)
        return {0.0, RdtBranch::kVoltage};
    const TmaxResult t_t = find_rdt_tmax(p, x, current, t_amb, t_v);
    if (t_t.reached && t_t.time < t_v)
        return {t_t.time, RdtBranch::kTemperature};
    return {t_v, RdtBranch::kVoltage};
}

} // namespace powercap
