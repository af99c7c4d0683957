#include "powercap/power_search.hpp"

#include "powercap/error.hpp"

#include <chrono>
#include <cmath>

namespace powercap {

void SearchConfig::validate() const
{
    if (!(i_min < i_max_bound) || !(i_min >= 0))
        throw InvalidArgument("search bracket needs 0 <= i_min < i_max_bound");
    if (!(h > 0) || !(h_el >= 0) || !(eps > 0) || !(i_el >= 0))
        throw InvalidArgument("search needs h > 0, h_el >= 0, i_el >= 0 and eps > 0");
    if (!std::isfinite(h) || !std::isfinite(h_el) || !std::isfinite(v_min) || std::isnan(t_max))
        throw InvalidArgument("search horizons and limits must be numbers");
}

int SearchConfig::iteration_bound() const
{
    return static_cast<int>(std::ceil(std::log2((i_max_bound - i_min) / eps))) + 1;
}

SearchConfig SearchConfig::without_tmax() const
{
    SearchConfig c = *this;
    c.t_max = std::numeric_limits<double>::infinity();
    return c;
}

SearchConfig SearchConfig::without_emergency() const
{
    SearchConfig c = *this;
    c.h_el = 0;
    return c;
}

SearchConfig SearchConfig::with_horizon(double horizon) const
{
    SearchConfig c = *this;
    c.h = horizon;
    return c;
}

const char* to_string(Constraint c)
{
    switch (c) {
    case Constraint::kVoltage: return "voltage";
    case Constraint::kTemperature: return "temperature";
    case Constraint::kCurrentBound: return "current_bound";
    case Constraint::kNone: break;
    }
    return "none";
}

namespace {

using Clock = std::chrono::steady_clock;

// Samples one constant-current leg at 1 s spacing (plus a fractional last
// sample), starting `offset` seconds after t.
bool sample_leg(const HybridModel& m, CellState& x, double current, double duration, double offset,
                const SearchConfig& cfg, Verdict& verdict, const Transition& unit)
{
    const double t_amb = m.t_amb();
    const auto whole = static_cast<long>(std::floor(duration + 1e-9));
    const double rest = duration - static_cast<double>(whole);
    auto check = [&](double t) {
        if (hybrid_voltage(m, x, current) < cfg.v_min) {
            verdict = {false, t, Constraint::kVoltage};
            return false;
        }
        if (hybrid_temperature(m, x) > cfg.t_max) {
            verdict = {false, t, Constraint::kTemperature};
            return false;
        }
        return true;
    };
    for (long k = 1; k <= whole; ++k) {
        x = unit.apply(x);
        if (!check(offset + static_cast<double>(k)))
            return false;
    }
    if (rest > 1e-9) {
        x = propagate(m.physics(), x, current, t_amb, rest);
        if (!check(offset + duration))
            return false;
    }
    return true;
}

template <typename Check>
SearchResult bisect(const SearchConfig& cfg, Check&& check)
{
    SearchResult r;
    const auto start = Clock::now();
    double lo = cfg.i_min;
    double hi = cfg.i_max_bound;
    bool lo_verified = false;
    for (;;) {
        const double i = 0.5 * (lo + hi);
        ++r.iterations;
        if (check(i)) {
            lo = i;
            lo_verified = true;
            if (std::abs(i - hi) < cfg.eps)
                break;
        } else {
            hi = i;
            // Bracket-width stop; guarantees termination when every candidate fails.
            if (hi - lo < cfg.eps)
                break;
        }
    }
    if (!lo_verified) {
        ++r.iterations;
        lo_verified = static_cast<bool>(check(cfg.i_min));
    }
    r.wall_time = std::chrono::duration<double>(Clock::now() - start).count();
    r.feasible = lo_verified;
    r.i_max = lo_verified ? lo : 0.0;
    return r;
}

template <typename Check>
Constraint classify(const SearchConfig& cfg, const SearchResult& r, Check&& check)
{
    if (!r.feasible)
        return check(cfg.i_min).constraint;
    const double probe = std::min(r.i_max + 2.0 * cfg.eps, cfg.i_max_bound);
    const Verdict v = check(probe);
    return v.feasible ? Constraint::kCurrentBound : v.constraint;
}

} // namespace

Verdict feasible_over_horizon(const HybridModel& m, const CellState& x, double current, const SearchConfig& cfg)
{
    cfg.validate();
    if (!x.allFinite() || !std::isfinite(current))
        throw InvalidArgument("feasibility check needs a finite state and current");
    Verdict verdict;
    CellState xk = x;
    const double t_amb = m.t_amb();
    if (!sample_leg(m, xk, current, cfg.h, 0.0, cfg, verdict, make_transition(m.physics(), current, t_amb, 1.0)))
        return verdict;
    if (cfg.h_el > 0)
        sample_leg(m, xk, cfg.i_el, cfg.h_el, cfg.h, cfg, verdict, make_transition(m.physics(), cfg.i_el, t_amb, 1.0));
    return verdict;
}

SearchResult shortcut_search(const HybridModel& m, const CellState& x, const SearchConfig& cfg)
{
    cfg.validate();
    const double t_amb = m.t_amb();
    // The emergency leg is identical for every candidate.
    const Transition emergency = make_transition(m.physics(), cfg.i_el, t_amb, 1.0);
    auto check = [&](double i) {
        Verdict verdict;
        CellState xk = x;
        if (!sample_leg(m, xk, i, cfg.h, 0.0, cfg, verdict, make_transition(m.physics(), i, t_amb, 1.0)))
            return verdict;
        if (cfg.h_el > 0)
            sample_leg(m, xk, cfg.i_el, cfg.h_el, cfg.h, cfg, verdict, emergency);
        return verdict;
    };
    SearchResult r = bisect(cfg, check);
    r.binding = classify(cfg, r, check);
    r.p_max = r.feasible ? power_limit(m, x, r.i_max, cfg) : 0.0;
    return r;
}

Verdict rdt_check(const RdtPredictor& p, const CellState& x, double current, const SearchConfig& cfg)
{
    const double t_amb = p.model().t_amb();
    const RdtEstimate first = predict_rdt(p, x, current, t_amb);
    if (first.seconds < cfg.h)
        return {false, first.seconds,
                first.branch == RdtBranch::kVoltage ? Constraint::kVoltage : Constraint::kTemperature};
    if (cfg.h_el <= 0)
        return {};
    const CellState x_h = propagate(p.model().physics(), x, current, t_amb, cfg.h);
    const RdtEstimate second = predict_rdt(p, x_h, cfg.i_el, t_amb);
    if (second.seconds < cfg.h_el)
        return {false, cfg.h + second.seconds,
                second.branch == RdtBranch::kVoltage ? Constraint::kVoltage : Constraint::kTemperature};
    return {};
}

SearchResult proposed_search(const RdtPredictor& p, const CellState& x, const SearchConfig& cfg)
{
    cfg.validate();
    const auto& s = p.settings();
    const bool same_tmax = s.t_max == cfg.t_max || (std::isinf(s.t_max) && std::isinf(cfg.t_max));
    if (s.v_min != cfg.v_min || !same_tmax)
        throw InvalidArgument("RDT predictor limits do not match the search constraints");
    if (!x.allFinite())
        throw InvalidArgument("search needs a finite state");
    auto check = [&](double i) { return rdt_check(p, x, i, cfg); };
    SearchResult r = bisect(cfg, check);
    r.binding = classify(cfg, r, check);
    r.p_max = r.feasible ? power_limit(p.model(), x, r.i_max, cfg) : 0.0;
    return r;
}

double power_limit(const HybridModel& m, const CellState& x, double i_max, const SearchConfig& cfg)
{
    if (i_max == 0)
        return 0.0;
    const CellState x_h = propagate(m.physics(), x, i_max, m.t_amb(), cfg.h);
    return i_max * hybrid_voltage(m, x_h, i_max);
}

} // namespace powercap
