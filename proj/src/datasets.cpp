#include "powercap/datasets.hpp"

#include "powercap/error.hpp"

#include <unsupported/Eigen/NonLinearOptimization>
#include <unsupported/Eigen/NumericalDiff>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

namespace powercap {

namespace {

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double uniform(std::mt19937_64& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

// Contiguous [begin, end) ranges of samples sharing a run id.
std::vector<std::pair<std::size_t, std::size_t>> run_ranges(const std::vector<FitSample>& samples)
{
    std::vector<std::pair<std::size_t, std::size_t>> ranges;
    std::size_t begin = 0;
    for (std::size_t k = 1; k <= samples.size(); ++k) {
        if (k == samples.size() || samples[k].run != samples[begin].run) {
            ranges.emplace_back(begin, k);
            begin = k;
        }
    }
    return ranges;
}

// Linear-model outputs along each recorded run, aligned with `samples`.
void replay(const PhysicsModel& model, const std::vector<FitSample>& samples, Eigen::VectorXd& voltage,
            Eigen::VectorXd& temperature)
{
    voltage.resize(static_cast<Eigen::Index>(samples.size()));
    temperature.resize(static_cast<Eigen::Index>(samples.size()));
    const double t_amb = model.params().t_amb;
    for (const auto& [begin, end] : run_ranges(samples)) {
        CellState x = samples[begin].physics_state;
        // A record's current is the one that flowed since the previous record.
        double dt_cached = -1, i_cached = 0;
        Transition tr;
        for (std::size_t k = begin; k < end; ++k) {
            if (k > begin) {
                const double dt = samples[k].time - samples[k - 1].time;
                if (dt != dt_cached || samples[k].current != i_cached) {
                    tr = make_transition(model, samples[k].current, t_amb, dt);
                    dt_cached = dt;
                    i_cached = samples[k].current;
                }
                x = tr.apply(x);
            }
            const auto idx = static_cast<Eigen::Index>(k);
            voltage[idx] = model.ndc_voltage(x, samples[k].current);
            temperature[idx] = x[kTsurf];
        }
    }
}

double total_capacitance(const ModelParams& p)
{
    return p.capacity_ah * 3600.0 / (p.ndc.ocv.domain_high() - p.ndc.ocv.domain_low());
}

// Residual functor in the layout expected by Eigen's Levenberg-Marquardt.
struct LeastSquares
{
    using Scalar = double;
    enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };
    using InputType = Eigen::VectorXd;
    using ValueType = Eigen::VectorXd;
    using JacobianType = Eigen::MatrixXd;

    const std::vector<FitSample>* samples = nullptr;
    ModelParams base;
    bool thermal = false;
    int n_inputs = 0;

    int inputs() const { return n_inputs; }
    int values() const { return static_cast<int>(samples->size()); }

    ModelParams decode(const Eigen::VectorXd& theta) const
    {
        ModelParams p = base;
        if (thermal) {
            p.thermal.r_core = std::exp(theta[0]);
            p.thermal.r_surf = std::exp(theta[1]);
            p.thermal.c_core = std::exp(theta[2]);
            p.thermal.c_surf = std::exp(theta[3]);
        } else {
            const double total = total_capacitance(base);
            const double share = 1.0 / (1.0 + std::exp(-theta[1]));
            p.ndc.r_b = std::exp(theta[0]);
            p.ndc.c_s = share * total;
            p.ndc.c_b = total - p.ndc.c_s;
            p.ndc.r_0 = std::exp(theta[2]);
            p.ndc.r_1 = std::exp(theta[3]);
            p.ndc.c_1 = std::exp(theta[4]);
        }
        return p;
    }

    Eigen::VectorXd encode(const ModelParams& p) const
    {
        if (thermal)
            return Eigen::Vector4d(std::log(p.thermal.r_core), std::log(p.thermal.r_surf), std::log(p.thermal.c_core),
                                   std::log(p.thermal.c_surf));
        const double share = p.ndc.c_s / (p.ndc.c_b + p.ndc.c_s);
        Eigen::VectorXd theta(5);
        theta << std::log(p.ndc.r_b), std::log(share / (1.0 - share)), std::log(p.ndc.r_0), std::log(p.ndc.r_1),
            std::log(p.ndc.c_1);
        return theta;
    }

    int operator()(const Eigen::VectorXd& theta, Eigen::VectorXd& residual) const
    {
        if (!theta.allFinite()) {
            residual.setConstant(values(), 1e3);
            return 0;
        }
        Eigen::VectorXd v, t;
        try {
            replay(PhysicsModel(decode(theta)), *samples, v, t);
        } catch (const InvalidArgument&) {
            // Out-of-range trial step; penalize so the damping shrinks it.
            residual.setConstant(values(), 1e3);
            return 0;
        }
        residual.resize(values());
        for (Eigen::Index k = 0; k < residual.size(); ++k) {
            const auto& s = (*samples)[static_cast<std::size_t>(k)];
            residual[k] = thermal ? t[k] - s.t_true : v[k] - s.v_true;
        }
        if (!residual.allFinite())
            residual.setConstant(1e3);
        return 0;
    }
};

FitReport least_squares_fit(const std::vector<FitSample>& samples, const ModelParams& initial, bool thermal)
{
    if (samples.empty())
        throw InvalidArgument("parameter fit needs at least one sample");
    validate(initial);
    LeastSquares f;
    f.samples = &samples;
    f.base = initial;
    f.thermal = thermal;
    f.n_inputs = thermal ? 4 : 5;

    FitReport report;
    report.before = physics_fit_errors(initial, samples);
    Eigen::VectorXd theta = f.encode(initial);
    Eigen::NumericalDiff<LeastSquares> diff(f);
    Eigen::LevenbergMarquardt<Eigen::NumericalDiff<LeastSquares>> lm(diff);
    lm.parameters.maxfev = 4000;
    lm.parameters.xtol = 1e-12;
    lm.parameters.ftol = 1e-12;
    lm.minimize(theta);
    if (!theta.allFinite())
        throw NumericalError("parameter fit diverged");
    report.params = f.decode(theta);
    report.iterations = static_cast<int>(lm.iter);
    report.after = physics_fit_errors(report.params, samples);
    return report;
}

} // namespace

std::vector<FitSample> build_fit_dataset(const ReferenceCell& cell, const ModelParams& physics_params,
                                         const std::vector<double>& c_rates, const FitOptions& options)
{
    cell.validate();
    const PhysicsModel physics(physics_params);
    const double t_amb = cell.base.t_amb;
    std::vector<FitSample> out;
    int run = 0;
    for (const double c_rate : c_rates) {
        if (!(c_rate >= 0))
            throw InvalidArgument("fit C-rates must be >= 0");
        const double current = c_rate * cell.base.capacity_ah;
        const double duration = c_rate > 0 ? options.max_duration : options.rest_duration;
        const CellState x0 = rest_state(1.0, t_amb);
        ReferenceRunOptions ro;
        ro.record_interval = options.record_interval;
        ro.stop_voltage = options.v_cutoff;
        Trajectory ref = reference_simulate(cell, x0, {{current, duration}}, options.step, ro);
        std::vector<double> currents(ref.size(), current);
        if (c_rate > 0 && options.relax_duration > 0) {
            const double t_stop = ref.back().time;
            const Trajectory tail = reference_simulate(cell, ref.back().state, {{0.0, options.relax_duration}},
                                                       options.step, {options.record_interval});
            for (std::size_t k = 1; k < tail.size(); ++k) {
                ref.push_back(tail[k]);
                ref.back().time += t_stop;
                currents.push_back(0.0);
            }
        }

        // The discharge ends on the first record below cutoff; it is kept.
        const Transition load = make_transition(physics, current, t_amb, options.record_interval);
        const Transition rest = make_transition(physics, 0.0, t_amb, options.record_interval);
        CellState x = x0;
        for (std::size_t k = 0; k < ref.size(); ++k) {
            if (k > 0)
                x = (currents[k] > 0 ? load : rest).apply(x);
            out.push_back({run, c_rate, ref[k].time, currents[k], x, ref[k].voltage, ref[k].temperature});
        }
        ++run;
    }
    return out;
}

std::vector<FitSample> build_fit_dataset(const ReferenceCell& cell, const std::vector<double>& c_rates,
                                         const FitOptions& options)
{
    return build_fit_dataset(cell, cell.base, c_rates, options);
}

FitErrors physics_fit_errors(const ModelParams& params, const std::vector<FitSample>& samples)
{
    FitErrors e;
    e.samples = samples.size();
    if (samples.empty())
        return e;
    Eigen::VectorXd v, t;
    replay(PhysicsModel(params), samples, v, t);
    double sv = 0, st = 0;
    for (std::size_t k = 0; k < samples.size(); ++k) {
        const auto idx = static_cast<Eigen::Index>(k);
        sv += (v[idx] - samples[k].v_true) * (v[idx] - samples[k].v_true);
        st += (t[idx] - samples[k].t_true) * (t[idx] - samples[k].t_true);
    }
    const auto n = static_cast<double>(samples.size());
    e.voltage_rmse = std::sqrt(sv / n);
    e.temperature_rmse = std::sqrt(st / n);
    return e;
}

FitReport fit_ndc_params(const std::vector<FitSample>& samples, const ModelParams& initial)
{
    return least_squares_fit(samples, initial, false);
}

FitReport fit_thermal_params(const std::vector<FitSample>& samples, const ModelParams& initial)
{
    return least_squares_fit(samples, initial, true);
}

Dataset voltage_head_dataset(const HybridModel& physics, const std::vector<FitSample>& samples)
{
    Dataset d;
    const auto n = static_cast<Eigen::Index>(samples.size());
    d.inputs.resize(kVoltageNetInputs, n);
    d.targets.resize(1, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const auto& s = samples[static_cast<std::size_t>(k)];
        const auto f = voltage_features(s.physics_state, s.current);
        for (int r = 0; r < kVoltageNetInputs; ++r)
            d.inputs(r, k) = f[static_cast<std::size_t>(r)];
        d.targets(0, k) = s.v_true - physics_voltage(physics, s.physics_state, s.current);
    }
    return d;
}

Dataset temperature_head_dataset(const HybridModel& physics, const std::vector<FitSample>& samples)
{
    Dataset d;
    const auto& mask = physics.temperature_mask();
    const auto n = static_cast<Eigen::Index>(samples.size());
    d.inputs.resize(static_cast<Eigen::Index>(mask.indices.size()), n);
    d.targets.resize(1, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const auto& s = samples[static_cast<std::size_t>(k)];
        const auto f = temperature_features(mask, s.physics_state);
        for (std::size_t r = 0; r < f.size(); ++r)
            d.inputs(static_cast<Eigen::Index>(r), k) = f[r];
        d.targets(0, k) = s.t_true - physics_temperature(physics, s.physics_state);
    }
    return d;
}

namespace {

RdtSample label(const HybridModel& m, std::size_t index, const CellState& x, double current, double t_amb,
                double v_min, double cap)
{
    RdtSample s;
    s.index = index;
    s.state = x;
    s.current = current;
    s.t_amb = t_amb;
    const auto t = rdt_vmin_search(m, x, current, t_amb, v_min, cap);
    s.capped = !t.has_value();
    s.rdt_vmin = t ? *t : cap;
    s.below_vmin = t && *t == 0.0;
    return s;
}

} // namespace

std::vector<RdtSample> build_rdt_dataset(const HybridModel& m, const RdtGrid& grid, double v_min, double cap)
{
    for (const double i : grid.currents)
        if (!(i > 0))
            throw InvalidArgument("RDT grid currents must be > 0");
    std::vector<RdtSample> out;
    out.reserve(grid.soc.size() * grid.currents.size() * grid.t_amb.size());
    for (const double soc : grid.soc)
        for (const double i : grid.currents)
            for (const double ta : grid.t_amb)
                out.push_back(label(m, out.size(), rest_state(soc, ta), i, ta, v_min, cap));
    return out;
}

std::vector<CellState> sample_prehistory_states(const HybridModel& m, const PrehistoryConfig& cfg, std::size_t count,
                                                std::uint64_t seed)
{
    if (!(cfg.soc_low <= cfg.soc_high) || cfg.segments < 0 || !(cfg.max_c_rate >= 0) || !(cfg.max_duration >= 0))
        throw InvalidArgument("invalid prehistory configuration");
    std::mt19937_64 rng(seed);
    const double t_amb = m.t_amb();
    const double floor = m.params().ndc.ocv.domain_low();
    std::vector<CellState> out;
    out.reserve(count);
    while (out.size() < count) {
        CellState x = rest_state(uniform(rng, cfg.soc_low, cfg.soc_high), t_amb);
        for (int s = 0; s < cfg.segments; ++s) {
            const double i = uniform01(rng) < cfg.p_load ? uniform(rng, 0.0, cfg.max_c_rate * m.capacity_ah()) : 0.0;
            const double d = uniform01(rng) < cfg.p_active ? uniform(rng, 0.0, cfg.max_duration) : 0.0;
            x = propagate(m.physics(), x, i, t_amb, d);
        }
        if (x[kVs] >= floor && x[kVb] >= floor)
            out.push_back(x);
    }
    return out;
}

std::vector<RdtSample> build_rdt_samples(const HybridModel& m, const std::vector<CellState>& states,
                                         const RdtDrawConfig& draw, std::uint64_t seed, double v_min, double cap)
{
    if (!(draw.low_c_rate > 0) || !(draw.high_c_rate >= draw.low_c_rate) || !(draw.pinned_current > 0))
        throw InvalidArgument("invalid RDT current draw");
    std::mt19937_64 rng(seed);
    const double lo = std::log(draw.low_c_rate * m.capacity_ah());
    const double hi = std::log(draw.high_c_rate * m.capacity_ah());
    std::vector<RdtSample> out;
    out.reserve(states.size());
    for (const auto& x : states) {
        const double log_i = uniform(rng, lo, hi);
        const double i = uniform01(rng) < draw.pinned_fraction ? draw.pinned_current : std::exp(log_i);
        out.push_back(label(m, out.size(), x, i, m.t_amb(), v_min, cap));
    }
    return out;
}

Dataset rdt_training_set(const RdtSettings& settings, const std::vector<RdtSample>& samples)
{
    Dataset d;
    const auto n = static_cast<Eigen::Index>(samples.size());
    d.inputs.resize(kRdtNetInputs, n);
    d.targets.resize(1, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const auto& s = samples[static_cast<std::size_t>(k)];
        const auto f = rdt_features(s.state, s.current, s.t_amb);
        for (int r = 0; r < kRdtNetInputs; ++r)
            d.inputs(r, k) = f[static_cast<std::size_t>(r)];
        d.targets(0, k) = rdt_to_target(settings, s.rdt_vmin);
    }
    return d;
}

namespace {

constexpr const char* kFitHeader = "run,c_rate,time,current,v_b,v_s,v_1,t_core,t_surf,v_true,t_true";
constexpr const char* kRdtHeader = "index,v_b,v_s,v_1,t_core,t_surf,current,t_amb,rdt_vmin,below_vmin,capped";

std::ofstream open_out(const std::filesystem::path& path)
{
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path);
    if (!os)
        throw Error("cannot write " + path.string());
    os << std::setprecision(17);
    return os;
}

std::vector<std::vector<double>> read_rows(const std::filesystem::path& path, const std::string& header,
                                           std::size_t columns, const std::string& producer)
{
    std::ifstream is(path);
    if (!is)
        throw MissingArtifact(path.string() + " not found", producer);
    std::string line;
    if (!std::getline(is, line) || line != header)
        throw ParseError(path.string() + ": unexpected header");
    std::vector<std::vector<double>> rows;
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty())
            continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            char* end = nullptr;
            row.push_back(std::strtod(cell.c_str(), &end));
            if (cell.empty() || *end != '\0')
                throw ParseError(path.string() + ":" + std::to_string(line_no) + ": bad number '" + cell + "'");
        }
        if (row.size() != columns)
            throw ParseError(path.string() + ":" + std::to_string(line_no) + ": expected " + std::to_string(columns) +
                             " columns");
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace

void write_fit_csv(const std::vector<FitSample>& samples, const std::filesystem::path& path)
{
    auto os = open_out(path);
    os << kFitHeader << '\n';
    for (const auto& s : samples) {
        os << s.run << ',' << s.c_rate << ',' << s.time << ',' << s.current;
        for (int k = 0; k < kStateDim; ++k)
            os << ',' << s.physics_state[k];
        os << ',' << s.v_true << ',' << s.t_true << '\n';
    }
}

std::vector<FitSample> read_fit_csv(const std::filesystem::path& path)
{
    std::vector<FitSample> out;
    for (const auto& r : read_rows(path, kFitHeader, 11, "gen-data")) {
        FitSample s;
        s.run = static_cast<int>(r[0]);
        s.c_rate = r[1];
        s.time = r[2];
        s.current = r[3];
        s.physics_state = make_state(r[4], r[5], r[6], r[7], r[8]);
        s.v_true = r[9];
        s.t_true = r[10];
        out.push_back(s);
    }
    return out;
}

void write_rdt_csv(const std::vector<RdtSample>& samples, const std::filesystem::path& path)
{
    auto os = open_out(path);
    os << kRdtHeader << '\n';
    for (const auto& s : samples) {
        os << s.index;
        for (int k = 0; k < kStateDim; ++k)
            os << ',' << s.state[k];
        os << ',' << s.current << ',' << s.t_amb << ',' << s.rdt_vmin << ',' << int(s.below_vmin) << ','
           << int(s.capped) << '\n';
    }
}

std::vector<RdtSample> read_rdt_csv(const std::filesystem::path& path)
{
    std::vector<RdtSample> out;
    for (const auto& r : read_rows(path, kRdtHeader, 11, "train-rdt")) {
        RdtSample s;
        s.index = static_cast<std::size_t>(r[0]);
        s.state = make_state(r[1], r[2], r[3], r[4], r[5]);
        s.current = r[6];
        s.t_amb = r[7];
        s.rdt_vmin = r[8];
        s.below_vmin = r[9] != 0;
        s.capped = r[10] != 0;
        out.push_back(s);
    }
    return out;
}

} // namespace powercap
