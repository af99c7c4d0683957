#ifndef POWERCAP_MISSION_HPP
#define POWERCAP_MISSION_HPP

#include "powercap/power_search.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace powercap {

struct MissionPhase
{
    std::string name;
    double c_rate = 0;   // C
    double duration = 0; // s
};

struct MissionProfile
{
    std::vector<MissionPhase> phases;

    /// Take-off 5 C for 75 s, cruise 1.48 C for 900 s, landing 5 C for 105 s.
    static MissionProfile standard();

    void validate() const;
    double duration() const;
    CurrentProfile currents(double capacity_ah) const;
    /// Current drawn during [t, t + 1).
    double current_at(double t, double capacity_ah) const;
};

enum class MissionMode { kFull, kNoTmax, kNoEmergency };
enum class SearchMethod { kProposed, kShortcut, kBoth };

MissionMode parse_mission_mode(const std::string& s);
SearchMethod parse_search_method(const std::string& s);
const char* to_string(MissionMode m);

/// "10s", "3m", "1.5m", "600" (seconds) -> seconds.
double parse_horizon(const std::string& token);
std::vector<double> parse_horizons(const std::string& list);
std::string horizon_label(double seconds);

struct HorizonResult
{
    double h = 0;
    std::optional<SearchResult> proposed;
    std::optional<SearchResult> shortcut;
};

struct MissionRecord
{
    double time = 0;
    double current = 0;
    double voltage = 0;
    double temperature = 0;
    /// Searches ran at this second; otherwise the last results are held.
    bool evaluated = false;
    std::vector<HorizonResult> horizons;
};

struct MissionRun
{
    std::vector<double> horizons;
    SearchMethod method = SearchMethod::kProposed;
    MissionMode mode = MissionMode::kFull;
    double cadence = 5.0; // s between searches
};

/// Open-loop replay of the profile at 1 s from full charge; the model's own
/// propagated state feeds every search. Infeasible searches are recorded,
/// not raised.
std::vector<MissionRecord> run_mission(const RdtPredictor& p, const MissionProfile& profile, const SearchConfig& cfg,
                                       const MissionRun& run);

struct AblationRow
{
    double time = 0;
    SearchResult full;
    SearchResult no_tmax;
    SearchResult no_emergency;
};

std::vector<AblationRow> run_ablation_comparison(const RdtPredictor& p, const MissionProfile& profile,
                                                 const SearchConfig& cfg, double h = 300.0,
                                                 SearchMethod method = SearchMethod::kProposed, double cadence = 5.0);

struct BenchRow
{
    double horizon = 0;
    std::string method;
    double mean_s = 0;
    double std_s = 0;
    double iterations_mean = 0;
    std::size_t samples = 0;
};

/// Per-step wall time of both searches along the mission, sequentially.
std::vector<BenchRow> run_benchmark(const RdtPredictor& p, const MissionProfile& profile, const SearchConfig& cfg,
                                    const std::vector<double>& horizons, int repetitions, double cadence = 5.0);

void write_mission_csv(const std::vector<MissionRecord>& records, const MissionRun& run,
                       const std::filesystem::path& path);
void write_ablation_csv(const std::vector<AblationRow>& rows, const std::filesystem::path& path);
void write_bench_csv(const std::vector<BenchRow>& rows, const std::filesystem::path& path);

/// Line chart of i_max and P_max against mission time, one series per horizon.
void write_mission_svg(const std::vector<MissionRecord>& records, const MissionRun& run,
                       const std::filesystem::path& path);

} // namespace powercap

#endif // POWERCAP_MISSION_HPP
