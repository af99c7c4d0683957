#ifndef POWERCAP_RDT_HPP
#define POWERCAP_RDT_HPP

#include "powercap/hybrid_model.hpp"
#include "powercap/mlp.hpp"

#include <optional>

namespace powercap {

struct RdtSettings
{
    double v_min = 3.0;           // V, fixed when the net is trained
    double t_max = 50.0;          // degC
    int checkpoints = 16;         // temperature scan resolution over (0, upper]
    double temp_tolerance = 0.05; // degC
    double time_tolerance = 0.5;  // s
    double horizon_cap = 7200.0;  // s, oracle gives up beyond this
    /// The net regresses log(dt + time_offset) rather than dt itself.
    double time_offset = 5.0;

    void validate() const;
};

inline constexpr int kRdtNetInputs = kStateDim + 2;

/// Net features: [v_b, v_s, v_1, t_core, t_surf, i, t_amb].
std::array<double, kRdtNetInputs> rdt_features(const CellState& x, double current, double t_amb);

/// Time until V_hybrid falls below `v_min` under constant `current`, found by
/// 1 s stepping and bisection on the exact propagation. `nullopt` when the
/// crossing lies beyond `cap`.
std::optional<double> rdt_vmin_search(const HybridModel& m, const CellState& x, double current, double t_amb,
                                      double v_min, double cap);

/// As above but throws NumericalError ("cap exceeded") past the cap.
double rdt_vmin_oracle(const HybridModel& m, const CellState& x, double current, double t_amb, double v_min = 3.0,
                       double cap = 7200.0);

/// Fine-step reference for the temperature crossing within [0, limit].
std::optional<double> rdt_tmax_oracle(const HybridModel& m, const CellState& x, double current, double t_amb,
                                      double t_max, double limit);

enum class RdtBranch { kVoltage, kTemperature };

struct RdtEstimate
{
    double seconds = 0;
    RdtBranch branch = RdtBranch::kVoltage;
};

struct TmaxResult
{
    bool reached = false;
    double time = 0;
    int iterations = 0; // bisection steps
};

/// Remaining-discharge-time predictor: neural head for the voltage-limited
/// time, checkpoint scan plus bisection for the temperature-limited time.
/// `oracle()` swaps the neural head for `rdt_vmin_search` (saturating at the
/// cap), which isolates the search logic from regression error.
class RdtPredictor
{
public:
    RdtPredictor(HybridModel model, std::optional<NeuralNet> net, RdtSettings settings = {});
    static RdtPredictor oracle(HybridModel model, RdtSettings settings = {});

    const HybridModel& model() const { return model_; }
    const RdtSettings& settings() const { return settings_; }
    const std::optional<NeuralNet>& net() const { return net_; }
    bool uses_oracle() const { return oracle_; }

    RdtPredictor with_t_max(double t_max) const;

private:
    HybridModel model_;
    std::optional<NeuralNet> net_;
    RdtSettings settings_;
    bool oracle_ = false;
};

double predict_rdt_vmin(const RdtPredictor& p, const CellState& x, double current, double t_amb);
TmaxResult find_rdt_tmax(const RdtPredictor& p, const CellState& x, double current, double t_amb, double upper);
RdtEstimate predict_rdt(const RdtPredictor& p, const CellState& x, double current, double t_amb);

/// Maps an RDT in seconds to the net's regression target and back.
double rdt_to_target(const RdtSettings& s, double seconds);
double target_to_rdt(const RdtSettings& s, double target);

} // namespace powercap

#endif // POWERCAP_RDT_HPP
