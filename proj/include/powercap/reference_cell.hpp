#ifndef POWERCAP_REFERENCE_CELL_HPP
#define POWERCAP_REFERENCE_CELL_HPP

#include "powercap/hybrid_model.hpp"

#include <filesystem>
#include <limits>
#include <utility>
#include <vector>

namespace powercap {

/// Synthetic ground-truth cell: the linear model plus a temperature- and
/// depth-of-discharge-dependent ohmic resistance and a current-dependent
/// polarization gain. With all perturbations neutral it reduces exactly to
/// the linear model.
struct ReferenceCell
{
    ModelParams base;
    double r0_temp_coeff = 0.0;  ///< ohm per degC below `r0_ref_temp`
    double r0_ref_temp = 25.0;   ///< degC
    double r0_min_factor = 0.5;  ///< floor on R0_eff / R0
    /// (depth of discharge, R0 multiplier) pairs, piecewise linear; empty = 1.
    std::vector<std::pair<double, double>> r0_soc_table;
    /// Relative growth of the RC-pair drive per unit C-rate.
    double polarization_gain = 0.0;

    void validate() const;
};

double effective_r0(const ReferenceCell& cell, const CellState& x);
CellStateDerivative reference_derivative(const ReferenceCell& cell, const CellState& x, double current, double t_amb);
double reference_voltage(const ReferenceCell& cell, const CellState& x, double current);

struct ReferenceRunOptions
{
    /// Spacing of emitted records; must be a multiple of the integration step.
    double record_interval = 1.0;
    /// Stop once the true terminal voltage drops below this level.
    double stop_voltage = -std::numeric_limits<double>::infinity();
};

/// Fixed-step RK4 integration (step <= 0.1 s). Records carry the true
/// terminal voltage and surface temperature.
Trajectory reference_simulate(const ReferenceCell& cell, const CellState& x0, const CurrentProfile& profile,
                              double step, const ReferenceRunOptions& options = {});

/// Reference-cell file: either inline parameter sections or `"extends"`
/// naming a parameter file, plus a `perturbation` object.
ReferenceCell load_reference_cell(const std::filesystem::path& path);

} // namespace powercap

#endif // POWERCAP_REFERENCE_CELL_HPP
