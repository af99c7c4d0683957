#ifndef POWERCAP_DATASETS_HPP
#define POWERCAP_DATASETS_HPP

#include "powercap/reference_cell.hpp"
#include "powercap/rdt.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace powercap {

// ---------------------------------------------------------------------------
// Identification / head-training data

struct FitOptions
{
    double step = 0.1;            // s, reference integration step
    double record_interval = 1.0; // s
    double v_cutoff = 3.0;        // V, discharge runs stop below this
    double max_duration = 8000.0; // s, per run
    double rest_duration = 600.0; // s, length of a 0 C run
    double relax_duration = 0.0;  // s, rest recorded after each discharge stops
};

/// One recorded instant of a constant-current run from full charge: the
/// linear-model state driven by the same current next to the reference
/// cell's terminal voltage and surface temperature.
struct FitSample
{
    int run = 0;
    double c_rate = 0;
    double time = 0;
    double current = 0;
    CellState physics_state;
    double v_true = 0;
    double t_true = 0;
};

std::vector<FitSample> build_fit_dataset(const ReferenceCell& cell, const ModelParams& physics,
                                         const std::vector<double>& c_rates, const FitOptions& options = {});
/// Uses the reference cell's base parameters as the physics model.
std::vector<FitSample> build_fit_dataset(const ReferenceCell& cell, const std::vector<double>& c_rates,
                                         const FitOptions& options = {});

struct FitErrors
{
    double voltage_rmse = 0;     // V
    double temperature_rmse = 0; // K
    std::size_t samples = 0;
};

/// Replays every run of `samples` through the linear model with `params`
/// and compares its outputs with the recorded reference outputs.
FitErrors physics_fit_errors(const ModelParams& params, const std::vector<FitSample>& samples);

struct FitReport
{
    ModelParams params;
    FitErrors before;
    FitErrors after;
    int iterations = 0;
};

/// Least-squares identification of r_b, the bulk/surface capacitance split,
/// r_0, r_1 and c_1 from the voltage trajectories. The total capacitance is
/// pinned by the rated capacity over the OCV domain.
FitReport fit_ndc_params(const std::vector<FitSample>& samples, const ModelParams& initial);

/// Least-squares identification of the four thermal constants from the
/// surface-temperature trajectories, with the electrical constants fixed.
FitReport fit_thermal_params(const std::vector<FitSample>& samples, const ModelParams& initial);

/// Head-training sets; targets are corrections on top of the physics outputs.
Dataset voltage_head_dataset(const HybridModel& physics, const std::vector<FitSample>& samples);
Dataset temperature_head_dataset(const HybridModel& physics, const std::vector<FitSample>& samples);

// ---------------------------------------------------------------------------
// RDT data

struct RdtSample
{
    std::size_t index = 0; ///< grid or draw index, output order
    CellState state;
    double current = 0;
    double t_amb = 25.0;
    double rdt_vmin = 0;     ///< s, saturated at the cap
    bool below_vmin = false; ///< already violated at t = 0
    bool capped = false;     ///< no crossing before the cap
};

struct RdtGrid
{
    std::vector<double> soc;      ///< charge levels of rested starting states
    std::vector<double> currents; ///< A
    std::vector<double> t_amb;    ///< degC, also the starting temperature
};

/// Grid points ordered soc-major, then current, then ambient temperature.
std::vector<RdtSample> build_rdt_dataset(const HybridModel& m, const RdtGrid& grid, double v_min = 3.0,
                                         double cap = 7200.0);

/// Random prehistories: rest at a charge level, then a few constant-current
/// segments. Rejects states whose surface charge went negative.
struct PrehistoryConfig
{
    double soc_low = 0.05;
    double soc_high = 1.0;
    int segments = 2;
    double max_c_rate = 8.0;
    double p_load = 0.85;    ///< probability a segment carries current
    double p_active = 0.8;   ///< probability a segment has non-zero length
    double max_duration = 400.0;
};

std::vector<CellState> sample_prehistory_states(const HybridModel& m, const PrehistoryConfig& cfg, std::size_t count,
                                                std::uint64_t seed);

struct RdtDrawConfig
{
    double low_c_rate = 0.5;
    double high_c_rate = 8.0;
    /// Fraction of draws pinned at `pinned_current` (the emergency current).
    double pinned_fraction = 0.25;
    double pinned_current = 12.5;
};

/// One current per state, log-uniform over the C-rate range.
std::vector<RdtSample> build_rdt_samples(const HybridModel& m, const std::vector<CellState>& states,
                                         const RdtDrawConfig& draw, std::uint64_t seed, double v_min = 3.0,
                                         double cap = 7200.0);

Dataset rdt_training_set(const RdtSettings& settings, const std::vector<RdtSample>& samples);

// ---------------------------------------------------------------------------
// CSV persistence (header row, one sample per line)

void write_fit_csv(const std::vector<FitSample>& samples, const std::filesystem::path& path);
std::vector<FitSample> read_fit_csv(const std::filesystem::path& path);
void write_rdt_csv(const std::vector<RdtSample>& samples, const std::filesystem::path& path);
std::vector<RdtSample> read_rdt_csv(const std::filesystem::path& path);

} // namespace powercap

#endif // POWERCAP_DATASETS_HPP
