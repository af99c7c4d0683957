#include "powercap/mission.hpp"

#include "powercap/error.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace powercap {

MissionProfile MissionProfile::standard()
{
    return {{{"take-off", 5.0, 75.0}, {"cruise", 1.48, 900.0}, {"landing", 5.0, 105.0}}};
}

void MissionProfile::validate() const
{
    if (phases.empty())
        throw InvalidArgument("mission profile has no phases");
    for (const auto& ph : phases)
        if (!(ph.duration > 0) || !(ph.c_rate >= 0) || !std::isfinite(ph.duration) || !std::isfinite(ph.c_rate))
            throw InvalidArgument("mission phase '" + ph.name + "' needs duration > 0 and C-rate >= 0");
}

double MissionProfile::duration() const
{
    double total = 0;
    for (const auto& ph : phases)
        total += ph.duration;
    return total;
}

CurrentProfile MissionProfile::currents(double capacity_ah) const
{
    CurrentProfile out;
    for (const auto& ph : phases)
        out.push_back({ph.c_rate * capacity_ah, ph.duration});
    return out;
}

double MissionProfile::current_at(double t, double capacity_ah) const
{
    double end = 0;
    for (const auto& ph : phases) {
        end += ph.duration;
        if (t < end)
            return ph.c_rate * capacity_ah;
    }
    return 0.0;
}

MissionMode parse_mission_mode(const std::string& s)
{
    if (s == "full")
        return MissionMode::kFull;
    if (s == "no_tmax")
        return MissionMode::kNoTmax;
    if (s == "no_emergency")
        return MissionMode::kNoEmergency;
    throw InvalidArgument("unknown mission mode '" + s + "' (full, no_tmax, no_emergency)");
}

SearchMethod parse_search_method(const std::string& s)
{
    if (s == "proposed")
        return SearchMethod::kProposed;
    if (s == "shortcut")
        return SearchMethod::kShortcut;
    if (s == "both")
        return SearchMethod::kBoth;
    throw InvalidArgument("unknown search method '" + s + "' (proposed, shortcut, both)");
}

const char* to_string(MissionMode m)
{
    switch (m) {
    case MissionMode::kNoTmax: return "no_tmax";
    case MissionMode::kNoEmergency: return "no_emergency";
    case MissionMode::kFull: break;
    }
    return "full";
}

double parse_horizon(const std::string& token)
{
    std::string t;
    for (const char c : token)
        if (!std::isspace(static_cast<unsigned char>(c)))
            t.push_back(c);
    if (t.empty())
        throw InvalidArgument("empty horizon token");
    double unit = 1.0;
    if (t.back() == 's') {
        t.pop_back();
    } else if (t.back() == 'm') {
        unit = 60.0;
        t.pop_back();
    }
    char* end = nullptr;
    const double value = std::strtod(t.c_str(), &end);
    if (t.empty() || *end != '\0' || !(value > 0) || !std::isfinite(value))
        throw InvalidArgument("bad horizon '" + token + "' (expected e.g. 10s, 3m)");
    return value * unit;
}

std::vector<double> parse_horizons(const std::string& list)
{
    std::vector<double> out;
    std::stringstream ss(list);
    std::string token;
    while (std::getline(ss, token, ','))
        out.push_back(parse_horizon(token));
    if (out.empty())
        throw InvalidArgument("no horizons given");
    return out;
}

std::string horizon_label(double seconds)
{
    std::ostringstream os;
    const double minutes = seconds / 60.0;
    if (seconds >= 60 && minutes == std::round(minutes))
        os << minutes << 'm';
    else
        os << seconds << 's';
    return os.str();
}

namespace {

long cadence_steps(double cadence)
{
    const auto k = static_cast<long>(std::llround(cadence));
    if (k < 1 || std::abs(cadence - static_cast<double>(k)) > 1e-9)
        throw InvalidArgument("mission cadence must be a whole number of seconds >= 1");
    return k;
}

// Mission states at each whole second, with the current drawn over the next second.
struct MissionStep
{
    double time;
    double current;
    CellState state;
};

std::vector<MissionStep> replay(const HybridModel& m, const MissionProfile& profile)
{
    profile.validate();
    const auto seconds = static_cast<long>(std::llround(profile.duration()));
    std::vector<MissionStep> out;
    out.reserve(static_cast<std::size_t>(seconds));
    CellState x = rest_state(1.0, m.t_amb());
    double cached_current = -1;
    Transition tr;
    for (long k = 0; k < seconds; ++k) {
        const auto t = static_cast<double>(k);
        const double i = profile.current_at(t, m.capacity_ah());
        out.push_back({t, i, x});
        if (i != cached_current) {
            tr = make_transition(m.physics(), i, m.t_amb(), 1.0);
            cached_current = i;
        }
        x = tr.apply(x);
    }
    return out;
}

struct ModeSetup
{
    RdtPredictor predictor;
    SearchConfig cfg;
};

ModeSetup apply_mode(const RdtPredictor& p, const SearchConfig& cfg, MissionMode mode)
{
    switch (mode) {
    case MissionMode::kNoTmax:
        return {p.with_t_max(std::numeric_limits<double>::infinity()), cfg.without_tmax()};
    case MissionMode::kNoEmergency:
        return {p, cfg.without_emergency()};
    case MissionMode::kFull: break;
    }
    return {p, cfg};
}

} // namespace

std::vector<MissionRecord> run_mission(const RdtPredictor& p, const MissionProfile& profile, const SearchConfig& cfg,
                                       const MissionRun& run)
{
    if (run.horizons.empty())
        throw InvalidArgument("mission needs at least one horizon");
    const long every = cadence_steps(run.cadence);
    const HybridModel& m = p.model();
    const auto setup = apply_mode(p, cfg, run.mode);
    const bool want_proposed = run.method != SearchMethod::kShortcut;
    const bool want_shortcut = run.method != SearchMethod::kProposed;

    std::vector<MissionRecord> out;
    std::vector<HorizonResult> held;
    for (const auto& step : replay(m, profile)) {
        MissionRecord rec;
        rec.time = step.time;
        rec.current = step.current;
        rec.voltage = hybrid_voltage(m, step.state, step.current);
        rec.temperature = hybrid_temperature(m, step.state);
        rec.evaluated = static_cast<long>(step.time) % every == 0;
        if (rec.evaluated) {
            held.clear();
            for (const double h : run.horizons) {
                const SearchConfig c = setup.cfg.with_horizon(h);
                HorizonResult hr;
                hr.h = h;
                if (want_proposed)
                    hr.proposed = proposed_search(setup.predictor, step.state, c);
                if (want_shortcut)
                    hr.shortcut = shortcut_search(m, step.state, c);
                held.push_back(hr);
            }
        }
        rec.horizons = held;
        out.push_back(std::move(rec));
    }
    return out;
}

std::vector<AblationRow> run_ablation_comparison(const RdtPredictor& p, const MissionProfile& profile,
                                                 const SearchConfig& cfg, double h, SearchMethod method,
                                                 double cadence)
{
    if (method == SearchMethod::kBoth)
        throw InvalidArgument("ablation compares one search method at a time");
    const long every = cadence_steps(cadence);
    const SearchConfig base = cfg.with_horizon(h);
    const auto full = apply_mode(p, base, MissionMode::kFull);
    const auto no_tmax = apply_mode(p, base, MissionMode::kNoTmax);
    const auto no_el = apply_mode(p, base, MissionMode::kNoEmergency);
    auto search = [&](const ModeSetup& s, const CellState& x) {
        return method == SearchMethod::kProposed ? proposed_search(s.predictor, x, s.cfg)
                                                 : shortcut_search(s.predictor.model(), x, s.cfg);
    };
    std::vector<AblationRow> rows;
    for (const auto& step : replay(p.model(), profile)) {
        if (static_cast<long>(step.time) % every != 0)
            continue;
        rows.push_back({step.time, search(full, step.state), search(no_tmax, step.state), search(no_el, step.state)});
    }
    return rows;
}

std::vector<BenchRow> run_benchmark(const RdtPredictor& p, const MissionProfile& profile, const SearchConfig& cfg,
                                    const std::vector<double>& horizons, int repetitions, double cadence)
{
    if (repetitions < 1)
        throw InvalidArgument("benchmark needs at least one repetition");
    const long every = cadence_steps(cadence);
    const auto steps = replay(p.model(), profile);

    struct Acc
    {
        double sum = 0, sum_sq = 0, iterations = 0;
        std::size_t n = 0;
        void add(const SearchResult& r)
        {
            sum += r.wall_time;
            sum_sq += r.wall_time * r.wall_time;
            iterations += r.iterations;
            ++n;
        }
    };
    std::vector<Acc> proposed(horizons.size()), shortcut(horizons.size());
    for (int rep = 0; rep < repetitions; ++rep) {
        for (const auto& step : steps) {
            if (static_cast<long>(step.time) % every != 0)
                continue;
            for (std::size_t k = 0; k < horizons.size(); ++k) {
                const SearchConfig c = cfg.with_horizon(horizons[k]);
                proposed[k].add(proposed_search(p, step.state, c));
                shortcut[k].add(shortcut_search(p.model(), step.state, c));
            }
        }
    }
    std::vector<BenchRow> rows;
    auto emit = [&](double h, const char* name, const Acc& a) {
        const auto n = static_cast<double>(a.n);
        const double mean = a.sum / n;
        const double var = a.n > 1 ? std::max(0.0, (a.sum_sq - n * mean * mean) / (n - 1)) : 0.0;
        rows.push_back({h, name, mean, std::sqrt(var), a.iterations / n, a.n});
    };
    for (std::size_t k = 0; k < horizons.size(); ++k) {
        emit(horizons[k], "proposed", proposed[k]);
        emit(horizons[k], "shortcut", shortcut[k]);
    }
    return rows;
}

namespace {

std::ofstream open_csv(const std::filesystem::path& path)
{
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path);
    if (!os)
        throw Error("cannot write " + path.string());
    os << std::setprecision(10);
    return os;
}

struct Column
{
    std::string suffix;
    bool proposed;
};

std::vector<Column> method_columns(SearchMethod method)
{
    switch (method) {
    case SearchMethod::kProposed: return {{"", true}};
    case SearchMethod::kShortcut: return {{"", false}};
    case SearchMethod::kBoth: break;
    }
    return {{"_proposed", true}, {"_shortcut", false}};
}

const SearchResult& pick(const HorizonResult& hr, bool proposed) { return proposed ? *hr.proposed : *hr.shortcut; }

} // namespace

void write_mission_csv(const std::vector<MissionRecord>& records, const MissionRun& run,
                       const std::filesystem::path& path)
{
    auto os = open_csv(path);
    const auto cols = method_columns(run.method);
    os << "time,current,voltage,temperature";
    for (const double h : run.horizons)
        for (const auto& c : cols) {
            const std::string tag = horizon_label(h) + c.suffix;
            os << ",i_max_" << tag << ",p_max_" << tag << ",binding_" << tag;
        }
    os << ",evaluated";
    for (const double h : run.horizons)
        for (const auto& c : cols)
            os << ",wall_s_" << horizon_label(h) << c.suffix;
    os << '\n';
    for (const auto& r : records) {
        os << r.time << ',' << r.current << ',' << r.voltage << ',' << r.temperature;
        for (const auto& hr : r.horizons)
            for (const auto& c : cols) {
                const auto& s = pick(hr, c.proposed);
                os << ',' << s.i_max << ',' << s.p_max << ',' << to_string(s.binding);
            }
        os << ',' << int(r.evaluated);
        for (const auto& hr : r.horizons)
            for (const auto& c : cols)
                os << ',' << (r.evaluated ? pick(hr, c.proposed).wall_time : 0.0);
        os << '\n';
    }
}

void write_ablation_csv(const std::vector<AblationRow>& rows, const std::filesystem::path& path)
{
    auto os = open_csv(path);
    os << "time,i_max_full,p_max_full,binding_full,i_max_no_tmax,p_max_no_tmax,binding_no_tmax,"
          "i_max_no_emergency,p_max_no_emergency,binding_no_emergency\n";
    for (const auto& r : rows) {
        os << r.time;
        for (const SearchResult* s : {&r.full, &r.no_tmax, &r.no_emergency})
            os << ',' << s->i_max << ',' << s->p_max << ',' << to_string(s->binding);
        os << '\n';
    }
}

void write_bench_csv(const std::vector<BenchRow>& rows, const std::filesystem::path& path)
{
    auto os = open_csv(path);
    os << "horizon,method,mean_s,std_s,iterations_mean\n";
    for (const auto& r : rows)
        os << horizon_label(r.horizon) << ',' << r.method << ',' << r.mean_s << ',' << r.std_s << ','
           << r.iterations_mean << '\n';
}

void write_mission_svg(const std::vector<MissionRecord>& records, const MissionRun& run,
                       const std::filesystem::path& path)
{
    if (records.empty())
        throw InvalidArgument("no mission records to chart");
    static constexpr const char* kColors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"};
    constexpr double kWidth = 720, kPanel = 260, kLeft = 60, kTop = 30, kGap = 60;
    const bool proposed = run.method != SearchMethod::kShortcut;
    const double t_end = records.back().time;

    std::ofstream os(path);
    if (!os)
        throw Error("cannot write " + path.string());
    os << std::setprecision(6);
    const double height = kTop + 2 * kPanel + kGap + 40;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth + kLeft + 140 << "\" height=\"" << height
       << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    for (int panel = 0; panel < 2; ++panel) {
        const double y0 = kTop + panel * (kPanel + kGap);
        double y_max = 0;
        for (const auto& r : records)
            for (const auto& hr : r.horizons) {
                const auto& s = pick(hr, proposed);
                y_max = std::max(y_max, panel == 0 ? s.i_max : s.p_max);
            }
        y_max = y_max > 0 ? y_max * 1.05 : 1.0;
        os << "<rect x=\"" << kLeft << "\" y=\"" << y0 << "\" width=\"" << kWidth << "\" height=\"" << kPanel
           << "\" fill=\"none\" stroke=\"#444\"/>\n";
        os << "<text x=\"" << kLeft << "\" y=\"" << y0 - 8 << "\">" << (panel == 0 ? "i_max [A]" : "P_max [W]")
           << " (0 to " << y_max << ")</text>\n";
        for (std::size_t k = 0; k < run.horizons.size(); ++k) {
            os << "<polyline fill=\"none\" stroke-width=\"1.5\" stroke=\"" << kColors[k % 6] << "\" points=\"";
            for (const auto& r : records) {
                const auto& s = pick(r.horizons[k], proposed);
                const double v = panel == 0 ? s.i_max : s.p_max;
                os << kLeft + kWidth * r.time / std::max(t_end, 1.0) << ',' << y0 + kPanel * (1 - v / y_max) << ' ';
            }
            os << "\"/>\n";
            if (panel == 0)
                os << "<text x=\"" << kLeft + kWidth + 10 << "\" y=\"" << y0 + 15 + 16 * k << "\" fill=\""
                   << kColors[k % 6] << "\">H = " << horizon_label(run.horizons[k]) << "</text>\n";
        }
    }
    os << "<text x=\"" << kLeft + kWidth / 2 << "\" y=\"" << height - 10 << "\">time [s] (0 to " << t_end
       << ")</text>\n</svg>\n";
}

} // namespace powercap
