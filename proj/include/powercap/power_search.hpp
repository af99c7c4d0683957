#ifndef POWERCAP_POWER_SEARCH_HPP
#define POWERCAP_POWER_SEARCH_HPP

#include "powercap/rdt.hpp"

#include <limits>

namespace powercap {

/// Constant-current discharge over [t, t+h) followed by the mandatory
/// emergency segment at `i_el` over [t+h, t+h+h_el].
struct SearchConfig
{
    double h = 300.0;         // s
    double h_el = 105.0;      // s
    double i_el = 12.5;       // A
    double i_min = 0.0;       // A
    double i_max_bound = 20.0; // A
    double v_min = 3.0;       // V
    double t_max = 50.0;      // degC, +inf disables the limit
    double eps = 0.025;       // A

    void validate() const;
    /// ceil(log2((i_max_bound - i_min) / eps)) + 1
    int iteration_bound() const;

    SearchConfig without_tmax() const;
    SearchConfig without_emergency() const;
    SearchConfig with_horizon(double horizon) const;
};

enum class Constraint { kNone, kVoltage, kTemperature, kCurrentBound };

const char* to_string(Constraint c);

struct Verdict
{
    bool feasible = true;
    double time = 0; ///< s after t of the first violating sample
    Constraint constraint = Constraint::kNone;

    explicit operator bool() const { return feasible; }
};

/// 1 s sampling of V_hybrid and T_hybrid over (0, h] at `current`, then over
/// (h, h+h_el] at `i_el`; the first violating sample is reported.
Verdict feasible_over_horizon(const HybridModel& m, const CellState& x, double current, const SearchConfig& cfg);

struct SearchResult
{
    double i_max = 0;     // A
    double p_max = 0;     // W
    bool feasible = false;
    int iterations = 0;
    double wall_time = 0; // s, bisection only
    Constraint binding = Constraint::kNone;
};

/// Bisection with full-horizon simulation as the feasibility check.
SearchResult shortcut_search(const HybridModel& m, const CellState& x, const SearchConfig& cfg);

/// Bisection with RDT queries as the feasibility check: a candidate passes iff
/// RDT(x, i) >= h and RDT(x(t+h), i_el) >= h_el.
SearchResult proposed_search(const RdtPredictor& p, const CellState& x, const SearchConfig& cfg);

/// Acceptance test used by `proposed_search` for one candidate current.
Verdict rdt_check(const RdtPredictor& p, const CellState& x, double current, const SearchConfig& cfg);

/// i_max times the terminal voltage after h seconds at i_max, loaded by i_max.
double power_limit(const HybridModel& m, const CellState& x, double i_max, const SearchConfig& cfg);

} // namespace powercap

#endif // POWERCAP_POWER_SEARCH_HPP
