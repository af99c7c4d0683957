#ifndef POWERCAP_TEST_SUPPORT_HPP
#define POWERCAP_TEST_SUPPORT_HPP

#include "powercap/cell_model.hpp"
#include "powercap/params_io.hpp"

#include <filesystem>
#include <functional>

namespace powercap::test {

inline std::filesystem::path data_dir() { return POWERCAP_DATA_DIR; }

inline const ModelParams& default_params()
{
    static const ModelParams p = load_model_params(data_dir() / "default_params.json");
    return p;
}

/// Right-hand side of the linear model written out term by term, independent
/// of the library's matrix assembly.
inline CellStateDerivative linear_rhs(const ModelParams& p, const CellState& x, double i, double t_amb)
{
    const auto& n = p.ndc;
    const auto& t = p.thermal;
    CellStateDerivative d;
    d[kVb] = (x[kVs] - x[kVb]) / (n.c_b * n.r_b);
    d[kVs] = (x[kVb] - x[kVs]) / (n.c_s * n.r_b) - i / n.c_s;
    d[kV1] = -x[kV1] / (n.r_1 * n.c_1) - i / n.c_1;
    d[kTcore] = (x[kTsurf] - x[kTcore]) / (t.r_core * t.c_core) + n.r_0 * i * i / t.c_core;
    d[kTsurf] = (x[kTcore] - x[kTsurf]) / (t.r_core * t.c_surf) + (t_amb - x[kTsurf]) / (t.r_surf * t.c_surf);
    return d;
}

/// Classical fixed-step RK4 over `duration` with step `h`.
inline CellState rk4(const std::function<CellStateDerivative(const CellState&)>& f, CellState x, double duration,
                     double h)
{
    const auto n = static_cast<long>(std::llround(duration / h));
    for (long k = 0; k < n; ++k) {
        const CellStateDerivative k1 = f(x);
        const CellStateDerivative k2 = f(x + 0.5 * h * k1);
        const CellStateDerivative k3 = f(x + 0.5 * h * k2);
        const CellStateDerivative k4 = f(x + h * k3);
        x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return x;
}

/// Largest per-component error, relative to max(1, |reference component|).
inline double scaled_error(const CellState& a, const CellState& b)
{
    double worst = 0;
    for (int k = 0; k < kStateDim; ++k) {
        const double scale = std::max(1.0, std::abs(b[k]));
        worst = std::max(worst, std::abs(a[k] - b[k]) / scale);
    }
    return worst;
}

} // namespace powercap::test

#endif // POWERCAP_TEST_SUPPORT_HPP
