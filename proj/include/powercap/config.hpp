#ifndef POWERCAP_CONFIG_HPP
#define POWERCAP_CONFIG_HPP

#include "powercap/datasets.hpp"
#include "powercap/mission.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace powercap {

/// Everything the pipeline needs, read from one JSON file. Relative paths
/// resolve against the file's directory; absent keys keep these defaults.
struct PipelineConfig
{
    std::filesystem::path source;
    std::filesystem::path params;         ///< model parameter file used by the hybrid physics
    std::filesystem::path reference_cell; ///< synthetic ground-truth cell
    std::filesystem::path artifacts;      ///< generated data and trained nets

    // gen-data / fit-params
    FitOptions fit;
    std::vector<double> fit_c_rates;
    double ndc_fit_max_c_rate = 1.0;
    /// fit-params starts from the parameter file with every fitted constant scaled by this.
    double fit_initial_scale = 1.5;

    // train-nets
    std::vector<int> head_hidden{32, 32};
    TemperatureMask temperature_mask;
    TrainConfig head_training;

    // train-rdt
    std::vector<int> rdt_hidden{64, 64};
    std::size_t rdt_train_samples = 30000;
    std::size_t rdt_holdout_samples = 400;
    PrehistoryConfig prehistory;
    RdtDrawConfig rdt_draw;
    TrainConfig rdt_training;
    RdtSettings rdt;

    SearchConfig search;
    MissionProfile mission = MissionProfile::standard();
    std::vector<double> horizons{10, 180, 300, 420, 600};
    double cadence = 5.0;
    int bench_repetitions = 1;
    std::uint64_t seed = 7;

    std::filesystem::path fit_csv() const { return artifacts / "fit_data.csv"; }
    std::filesystem::path fitted_params() const { return artifacts / "fitted_params.json"; }
    std::filesystem::path voltage_net() const { return artifacts / "h_v.net"; }
    std::filesystem::path temperature_net() const { return artifacts / "h_t.net"; }
    std::filesystem::path rdt_net() const { return artifacts / "rdt.net"; }
    std::filesystem::path rdt_holdout_csv() const { return artifacts / "rdt_holdout.csv"; }
};

/// "default" names the configuration shipped in the repository's data directory.
PipelineConfig load_config(const std::string& path_or_default);
std::filesystem::path default_config_path();

/// Parameter file plus trained heads; throws MissingArtifact naming
/// `train-nets` when a head is absent (unless `physics_only`).
HybridModel load_hybrid_model(const PipelineConfig& cfg, bool physics_only = false);

/// Hybrid model plus RDT net, or the simulation oracle when `oracle` is set.
RdtPredictor load_predictor(const PipelineConfig& cfg, bool physics_only = false, bool oracle = false);

} // namespace powercap

#endif // POWERCAP_CONFIG_HPP
