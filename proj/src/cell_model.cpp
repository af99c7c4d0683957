#include "powercap/cell_model.hpp"

#include "powercap/error.hpp"
#include "powercap/expm.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace powercap {

CellState make_state(double v_b, double v_s, double v_1, double t_core, double t_surf)
{
    CellState x;
    x << v_b, v_s, v_1, t_core, t_surf;
    return x;
}

CellState rest_state(double charge_level, double temperature)
{
    return make_state(charge_level, charge_level, 0.0, temperature, temperature);
}

OcvCurve::OcvCurve(std::vector<std::pair<double, double>> breakpoints) : points_(std::move(breakpoints))
{
    if (points_.size() < 2)
        throw InvalidArgument("OCV curve needs at least two breakpoints");
    for (std::size_t k = 0; k < points_.size(); ++k) {
        if (!std::isfinite(points_[k].first) || !std::isfinite(points_[k].second))
            throw InvalidArgument("OCV breakpoint " + std::to_string(k) + " is not finite");
        if (k > 0 && (points_[k].first <= points_[k - 1].first || points_[k].second <= points_[k - 1].second))
            throw InvalidArgument("OCV breakpoints must be strictly increasing (index " + std::to_string(k) + ")");
    }
}

double OcvCurve::operator()(double v_s) const
{
    if (v_s <= points_.front().first)
        return points_.front().second;
    if (v_s >= points_.back().first)
        return points_.back().second;
    const auto upper = std::upper_bound(points_.begin(), points_.end(), v_s,
                                        [](double v, const auto& p) { return v < p.first; });
    const auto& [x1, y1] = *upper;
    const auto& [x0, y0] = *(upper - 1);
    if (v_s == x0)
        return y0;
    return y0 + (y1 - y0) * (v_s - x0) / (x1 - x0);
}

double OcvCurve::inverse(double u) const
{
    if (u <= points_.front().second)
        return points_.front().first;
    if (u >= points_.back().second)
        return points_.back().first;
    const auto upper = std::upper_bound(points_.begin(), points_.end(), u,
                                        [](double v, const auto& p) { return v < p.second; });
    const auto& [x1, y1] = *upper;
    const auto& [x0, y0] = *(upper - 1);
    return x0 + (x1 - x0) * (u - y0) / (y1 - y0);
}

double ocv(const OcvCurve& curve, double v_s) { return curve(v_s); }

void validate(const ModelParams& p)
{
    const auto positive = [](double value, const char* name) {
        if (!(std::isfinite(value) && value > 0))
            throw InvalidArgument(std::string("parameter ") + name + " must be finite and > 0");
    };
    positive(p.ndc.r_b, "ndc.r_b");
    positive(p.ndc.c_b, "ndc.c_b");
    positive(p.ndc.c_s, "ndc.c_s");
    positive(p.ndc.r_0, "ndc.r_0");
    positive(p.ndc.r_1, "ndc.r_1");
    positive(p.ndc.c_1, "ndc.c_1");
    positive(p.thermal.r_core, "thermal.r_core");
    positive(p.thermal.r_surf, "thermal.r_surf");
    positive(p.thermal.c_core, "thermal.c_core");
    positive(p.thermal.c_surf, "thermal.c_surf");
    positive(p.capacity_ah, "capacity_ah");
    if (!std::isfinite(p.t_amb))
        throw InvalidArgument("t_amb must be finite");
    if (p.ndc.ocv.breakpoints().size() < 2)
        throw InvalidArgument("OCV curve is missing");
}

LinearSystem linear_system(const ModelParams& p)
{
    const auto& n = p.ndc;
    const auto& t = p.thermal;
    LinearSystem s;
    s.a_ndc << -1.0 / (n.c_b * n.r_b), 1.0 / (n.c_b * n.r_b), 0.0,
               1.0 / (n.c_s * n.r_b), -1.0 / (n.c_s * n.r_b), 0.0,
               0.0, 0.0, -1.0 / (n.r_1 * n.c_1);
    s.b_ndc << 0.0, -1.0 / n.c_s, -1.0 / n.c_1;
    s.a_therm << -1.0 / (t.r_core * t.c_core), 1.0 / (t.r_core * t.c_core),
                 1.0 / (t.r_core * t.c_surf), -1.0 / (t.r_surf * t.c_surf) - 1.0 / (t.r_core * t.c_surf);
    s.b_therm << n.r_0 / t.c_core, 0.0,
                 0.0, 1.0 / (t.r_surf * t.c_surf);
    return s;
}

PhysicsModel::PhysicsModel(ModelParams params) : params_(std::move(params))
{
    validate(params_);
    system_ = linear_system(params_);
}

double PhysicsModel::ndc_voltage(const CellState& x, double current) const
{
    return params_.ndc.ocv(x[kVs]) + x[kV1] - params_.ndc.r_0 * current;
}

CellStateDerivative state_derivative(const PhysicsModel& model, const CellState& x, double current, double t_amb)
{
    const auto& s = model.system();
    CellStateDerivative dx;
    dx.head<3>() = s.a_ndc * x.head<3>() + s.b_ndc * current;
    dx.tail<2>() = s.a_therm * x.tail<2>() + s.b_therm * Eigen::Vector2d(current * current, t_amb);
    return dx;
}

Transition make_transition(const PhysicsModel& model, double current, double t_amb, double dt)
{
    if (!(dt >= 0) || !std::isfinite(dt))
        throw InvalidArgument("propagation step must be finite and >= 0");
    if (!std::isfinite(current) || !std::isfinite(t_amb))
        throw InvalidArgument("propagation inputs must be finite");
    const auto& s = model.system();

    // The electrical block has a zero eigenvalue, so the constant input is
    // folded into an augmented generator instead of inverting A.
    Eigen::Matrix4d electrical = Eigen::Matrix4d::Zero();
    electrical.topLeftCorner<3, 3>() = s.a_ndc * dt;
    electrical.topRightCorner<3, 1>() = s.b_ndc * (current * dt);
    const Eigen::Matrix4d e_el = expm(electrical);

    Eigen::Matrix3d thermal = Eigen::Matrix3d::Zero();
    thermal.topLeftCorner<2, 2>() = s.a_therm * dt;
    thermal.topRightCorner<2, 1>() = s.b_therm * Eigen::Vector2d(current * current, t_amb) * dt;
    const Eigen::Matrix3d e_th = expm(thermal);

    Transition tr;
    tr.phi.setZero();
    tr.phi.topLeftCorner<3, 3>() = e_el.topLeftCorner<3, 3>();
    tr.phi.bottomRightCorner<2, 2>() = e_th.topLeftCorner<2, 2>();
    tr.gamma.head<3>() = e_el.topRightCorner<3, 1>();
    tr.gamma.tail<2>() = e_th.topRightCorner<2, 1>();
    return tr;
}

CellState propagate(const PhysicsModel& model, const CellState& x, double current, double t_amb, double dt)
{
    if (!x.allFinite())
        throw InvalidArgument("cell state is not finite");
    if (dt == 0)
        return x;
    return make_transition(model, current, t_amb, dt).apply(x);
}

double profile_duration(const CurrentProfile& profile)
{
    double total = 0;
    for (const auto& seg : profile)
        total += seg.duration;
    return total;
}

double profile_charge(const CurrentProfile& profile)
{
    double total = 0;
    for (const auto& seg : profile)
        total += seg.current * seg.duration;
    return total;
}

} // namespace powercap
