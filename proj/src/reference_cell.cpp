#include "powercap/reference_cell.hpp"

#include "powercap/error.hpp"
#include "powercap/params_io.hpp"

#include <algorithm>
#include <cmath>

namespace powercap {

void ReferenceCell::validate() const
{
    powercap::validate(base);
    if (!std::isfinite(r0_temp_coeff) || !std::isfinite(r0_ref_temp) || !std::isfinite(polarization_gain))
        throw InvalidArgument("reference-cell perturbations must be finite");
    if (!(r0_min_factor > 0))
        throw InvalidArgument("r0_min_factor must be > 0");
    for (std::size_t k = 0; k < r0_soc_table.size(); ++k) {
        if (!(r0_soc_table[k].second > 0))
            throw InvalidArgument("r0_soc_table factors must be > 0");
        if (k > 0 && !(r0_soc_table[k].first > r0_soc_table[k - 1].first))
            throw InvalidArgument("r0_soc_table depths must be strictly increasing");
    }
}

namespace {

double table_factor(const std::vector<std::pair<double, double>>& table, double depth)
{
    if (table.empty())
        return 1.0;
    if (depth <= table.front().first)
        return table.front().second;
    if (depth >= table.back().first)
        return table.back().second;
    const auto upper = std::upper_bound(table.begin(), table.end(), depth,
                                        [](double d, const auto& p) { return d < p.first; });
    const auto& [x1, y1] = *upper;
    const auto& [x0, y0] = *(upper - 1);
    return y0 + (y1 - y0) * (depth - x0) / (x1 - x0);
}

} // namespace

double effective_r0(const ReferenceCell& cell, const CellState& x)
{
    const double r0 = cell.base.ndc.r_0;
    const auto& ocv = cell.base.ndc.ocv;
    const double span = ocv.domain_high() - ocv.domain_low();
    const double depth = std::clamp((ocv.domain_high() - x[kVs]) / span, 0.0, 1.0);
    const double value = r0 * table_factor(cell.r0_soc_table, depth) + cell.r0_temp_coeff * (cell.r0_ref_temp - x[kTcore]);
    return std::max(value, cell.r0_min_factor * r0);
}

CellStateDerivative reference_derivative(const ReferenceCell& cell, const CellState& x, double current, double t_amb)
{
    const auto& n = cell.base.ndc;
    const auto& t = cell.base.thermal;
    const double c_rate = std::abs(current) / cell.base.capacity_ah;
    const double drive = current * (1.0 + cell.polarization_gain * c_rate);
    const double heat = effective_r0(cell, x) * current * current;

    CellStateDerivative dx;
    const double exchange = (x[kVb] - x[kVs]) / n.r_b;
    dx[kVb] = -exchange / n.c_b;
    dx[kVs] = (exchange - current) / n.c_s;
    dx[kV1] = -x[kV1] / (n.r_1 * n.c_1) - drive / n.c_1;
    const double conduction = (x[kTcore] - x[kTsurf]) / t.r_core;
    dx[kTcore] = (heat - conduction) / t.c_core;
    dx[kTsurf] = (conduction - (x[kTsurf] - t_amb) / t.r_surf) / t.c_surf;
    return dx;
}

double reference_voltage(const ReferenceCell& cell, const CellState& x, double current)
{
    return cell.base.ndc.ocv(x[kVs]) + x[kV1] - effective_r0(cell, x) * current;
}

Trajectory reference_simulate(const ReferenceCell& cell, const CellState& x0, const CurrentProfile& profile,
                              double step, const ReferenceRunOptions& options)
{
    if (!(step > 0) || step > 0.1 + 1e-12)
        throw InvalidArgument("reference integration step must lie in (0, 0.1] s");
    const double ratio = options.record_interval / step;
    const auto per_record = static_cast<long>(std::llround(ratio));
    if (per_record < 1 || std::abs(ratio - static_cast<double>(per_record)) > 1e-9 * ratio)
        throw InvalidArgument("record interval must be a multiple of the integration step");
    if (!x0.allFinite())
        throw InvalidArgument("initial state is not finite");

    const double t_amb = cell.base.t_amb;
    Trajectory out;
    const double i0 = profile.empty() ? 0.0 : profile.front().current;
    out.push_back({0.0, x0, i0, reference_voltage(cell, x0, i0), x0[kTsurf]});
    if (out.back().voltage < options.stop_voltage)
        return out;

    CellState x = x0;
    double t_start = 0;
    for (const auto& seg : profile) {
        const auto n_steps = static_cast<long>(std::llround(seg.duration / step));
        if (std::abs(static_cast<double>(n_steps) * step - seg.duration) > 1e-9 * std::max(1.0, seg.duration))
            throw InvalidArgument("segment duration must be a multiple of the integration step");
        const double i = seg.current;
        for (long k = 1; k <= n_steps; ++k) {
            const CellStateDerivative k1 = reference_derivative(cell, x, i, t_amb);
            const CellStateDerivative k2 = reference_derivative(cell, x + 0.5 * step * k1, i, t_amb);
            const CellStateDerivative k3 = reference_derivative(cell, x + 0.5 * step * k2, i, t_amb);
            const CellStateDerivative k4 = reference_derivative(cell, x + step * k3, i, t_amb);
            x += (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            if (!x.allFinite())
                throw NumericalError("reference integration produced a non-finite state");
            if (k % per_record == 0 || k == n_steps) {
                const double t = t_start + static_cast<double>(k) * step;
                out.push_back({t, x, i, reference_voltage(cell, x, i), x[kTsurf]});
                if (out.back().voltage < options.stop_voltage)
                    return out;
            }
        }
        t_start += static_cast<double>(n_steps) * step;
    }
    return out;
}

ReferenceCell load_reference_cell(const std::filesystem::path& path)
{
    const auto j = read_json(path);
    ReferenceCell cell;
    try {
        nlohmann::json base_json;
        if (j.contains("extends"))
            base_json = read_json(path.parent_path() / j.at("extends").get<std::string>());
        for (const char* key : {"ndc", "thermal", "ocv", "capacity_ah", "t_amb"})
            if (j.contains(key))
                base_json[key] = j.at(key);
        cell.base = model_params_from_json(base_json);

        if (j.contains("perturbation")) {
            const auto& pj = j.at("perturbation");
            cell.r0_temp_coeff = pj.value("r0_temp_coeff", 0.0);
            cell.r0_ref_temp = pj.value("r0_ref_temp", cell.base.t_amb);
            cell.r0_min_factor = pj.value("r0_min_factor", 0.5);
            cell.polarization_gain = pj.value("polarization_gain", 0.0);
            if (pj.contains("r0_soc_table"))
                for (const auto& row : pj.at("r0_soc_table"))
                    cell.r0_soc_table.emplace_back(row.at(0).get<double>(), row.at(1).get<double>());
        }
        cell.validate();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    } catch (const InvalidArgument& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    return cell;
}

} // namespace powercap
