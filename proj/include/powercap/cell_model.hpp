#ifndef POWERCAP_CELL_MODEL_HPP
#define POWERCAP_CELL_MODEL_HPP

#include <Eigen/Dense>

#include <utility>
#include <vector>

namespace powercap {

inline constexpr int kStateDim = 5;

/// Hybrid model state [v_b, v_s, v_1, t_core, t_surf].
template <typename Scalar>
using StateVector = Eigen::Matrix<Scalar, kStateDim, 1>;
using CellState = StateVector<double>;
using CellStateDerivative = StateVector<double>;

enum StateIndex : int { kVb = 0, kVs = 1, kV1 = 2, kTcore = 3, kTsurf = 4 };

CellState make_state(double v_b, double v_s, double v_1, double t_core, double t_surf);

/// Relaxed state: both capacitors at `charge_level`, no polarization, uniform temperature.
CellState rest_state(double charge_level, double temperature);

/// Open-circuit voltage as a piecewise-linear function of the surface
/// capacitor voltage. Breakpoints strictly increasing in both coordinates;
/// evaluation clamps outside the breakpoint domain.
class OcvCurve
{
public:
    OcvCurve() = default;
    explicit OcvCurve(std::vector<std::pair<double, double>> breakpoints);

    double operator()(double v_s) const;
    /// Inverse map on the breakpoint range, clamped.
    double inverse(double u) const;

    double domain_low() const { return points_.front().first; }
    double domain_high() const { return points_.back().first; }
    double min_voltage() const { return points_.front().second; }
    double max_voltage() const { return points_.back().second; }
    const std::vector<std::pair<double, double>>& breakpoints() const { return points_; }

private:
    std::vector<std::pair<double, double>> points_;
};

double ocv(const OcvCurve& curve, double v_s);

struct NdcParams
{
    double r_b = 0;   // ohm
    double c_b = 0;   // F
    double c_s = 0;   // F
    double r_0 = 0;   // ohm
    double r_1 = 0;   // ohm
    double c_1 = 0;   // F
    OcvCurve ocv;
};

struct ThermalParams
{
    double r_core = 0; // K/W
    double r_surf = 0; // K/W
    double c_core = 0; // J/K
    double c_surf = 0; // J/K
};

struct ModelParams
{
    NdcParams ndc;
    ThermalParams thermal;
    double capacity_ah = 0;
    double t_amb = 25.0;

    double amps_per_c() const { return capacity_ah; }
};

/// Throws InvalidArgument when any constant is non-positive or non-finite.
void validate(const ModelParams& params);

/// Continuous-time matrices of the electrical and thermal subsystems.
struct LinearSystem
{
    Eigen::Matrix3d a_ndc;
    Eigen::Vector3d b_ndc;
    Eigen::Matrix2d a_therm;
    Eigen::Matrix2d b_therm; // input [i^2, t_amb]
};

LinearSystem linear_system(const ModelParams& params);

/// Affine one-step map x -> phi * x + gamma for a fixed current, ambient
/// temperature and step length.
struct Transition
{
    Eigen::Matrix<double, kStateDim, kStateDim> phi;
    CellState gamma;

    CellState apply(const CellState& x) const { return phi * x + gamma; }
};

/// Validated physics parameters with the derived matrices cached.
/// Immutable after construction.
class PhysicsModel
{
public:
    explicit PhysicsModel(ModelParams params);

    const ModelParams& params() const { return params_; }
    const LinearSystem& system() const { return system_; }

    /// Terminal voltage of the circuit: h(v_s) + v_1 - r_0 i.
    double ndc_voltage(const CellState& x, double current) const;

private:
    ModelParams params_;
    LinearSystem system_;
};

CellStateDerivative state_derivative(const PhysicsModel& model, const CellState& x, double current, double t_amb);

/// Exact solution of the linear state equation under constant input over `dt`.
Transition make_transition(const PhysicsModel& model, double current, double t_amb, double dt);

CellState propagate(const PhysicsModel& model, const CellState& x, double current, double t_amb, double dt);

/// Piecewise-constant current schedule, amperes over seconds.
struct CurrentSegment
{
    double current = 0;
    double duration = 0;
};

using CurrentProfile = std::vector<CurrentSegment>;

double profile_duration(const CurrentProfile& profile);
/// Integral of the current over the profile, coulombs.
double profile_charge(const CurrentProfile& profile);

} // namespace powercap

#endif // POWERCAP_CELL_MODEL_HPP
