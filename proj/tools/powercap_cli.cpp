#include "powercap/config.hpp"
#include "powercap/error.hpp"
#include "powercap/params_io.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <map>

using namespace powercap;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kMissingArtifact = 2, kNumerical = 3 };

struct Options
{
    std::string config = "default";
    bool physics_only = false;
    bool oracle_rdt = false;

    std::string horizons;
    std::string method = "proposed";
    std::string mode = "full";
    double cadence = 0;
    std::string out;
    std::string svg;
    int repetitions = 0;

    double soc = 1.0;
    double temperature = std::nan("");
};

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<int> layer_dims(int inputs, const std::vector<int>& hidden)
{
    std::vector<int> dims{inputs};
    dims.insert(dims.end(), hidden.begin(), hidden.end());
    dims.push_back(1);
    return dims;
}

void print_training(const char* name, const TrainResult& r)
{
    std::printf("%s: best epoch %d of %zu, train loss %.3e, validation loss %.3e (normalized MSE)\n", name,
                r.best_epoch + 1, r.history.size(), r.history[static_cast<std::size_t>(r.best_epoch)].train,
                r.history[static_cast<std::size_t>(r.best_epoch)].validation);
}

int gen_data(const PipelineConfig& cfg)
{
    const auto t0 = std::chrono::steady_clock::now();
    const ReferenceCell cell = load_reference_cell(cfg.reference_cell);
    const ModelParams physics = load_model_params(cfg.params);
    const auto samples = build_fit_dataset(cell, physics, cfg.fit_c_rates, cfg.fit);
    write_fit_csv(samples, cfg.fit_csv());
    std::printf("wrote %zu samples from %zu runs to %s (%.1f s)\n", samples.size(), cfg.fit_c_rates.size(),
                cfg.fit_csv().string().c_str(), seconds_since(t0));
    const auto err = physics_fit_errors(physics, samples);
    std::printf("linear model vs reference: voltage RMSE %.2f mV, surface temperature RMSE %.3f K\n",
                1e3 * err.voltage_rmse, err.temperature_rmse);
    return kOk;
}

int fit_params(const PipelineConfig& cfg)
{
    const auto samples = read_fit_csv(cfg.fit_csv());
    const ModelParams nominal = load_model_params(cfg.params);
    std::vector<FitSample> low_rate;
    std::copy_if(samples.begin(), samples.end(), std::back_inserter(low_rate),
                 [&](const FitSample& s) { return s.c_rate <= cfg.ndc_fit_max_c_rate; });

    ModelParams initial = nominal;
    const double k = cfg.fit_initial_scale;
    initial.ndc.r_b *= k;
    initial.ndc.r_0 *= k;
    initial.ndc.r_1 *= k;
    initial.ndc.c_1 *= k;
    const double total = nominal.ndc.c_b + nominal.ndc.c_s;
    initial.ndc.c_s = std::min(nominal.ndc.c_s * k, 0.9 * total);
    initial.ndc.c_b = total - initial.ndc.c_s;
    initial.thermal.r_core *= k;
    initial.thermal.r_surf *= k;
    initial.thermal.c_core *= k;
    initial.thermal.c_surf *= k;

    const FitReport ndc = fit_ndc_params(low_rate, initial);
    std::printf("circuit fit on %zu samples (C-rate <= %g): voltage RMSE %.2f mV -> %.2f mV in %d iterations\n",
                low_rate.size(), cfg.ndc_fit_max_c_rate, 1e3 * ndc.before.voltage_rmse, 1e3 * ndc.after.voltage_rmse,
                ndc.iterations);
    const FitReport thermal = fit_thermal_params(samples, ndc.params);
    std::printf("thermal fit on %zu samples: surface temperature RMSE %.3f K -> %.3f K in %d iterations\n",
                samples.size(), thermal.before.temperature_rmse, thermal.after.temperature_rmse, thermal.iterations);

    const auto& p = thermal.params;
    std::printf("%-8s %12s %12s\n", "", "fitted", "nominal");
    const std::pair<const char*, std::pair<double, double>> rows[] = {
        {"r_b", {p.ndc.r_b, nominal.ndc.r_b}},           {"c_b", {p.ndc.c_b, nominal.ndc.c_b}},
        {"c_s", {p.ndc.c_s, nominal.ndc.c_s}},           {"r_0", {p.ndc.r_0, nominal.ndc.r_0}},
        {"r_1", {p.ndc.r_1, nominal.ndc.r_1}},           {"c_1", {p.ndc.c_1, nominal.ndc.c_1}},
        {"r_core", {p.thermal.r_core, nominal.thermal.r_core}}, {"r_surf", {p.thermal.r_surf, nominal.thermal.r_surf}},
        {"c_core", {p.thermal.c_core, nominal.thermal.c_core}}, {"c_surf", {p.thermal.c_surf, nominal.thermal.c_surf}}};
    for (const auto& [name, v] : rows)
        std::printf("%-8s %12.6g %12.6g\n", name, v.first, v.second);

    char header[256];
    std::snprintf(header, sizeof header,
                  "Identified from %s: circuit on C-rate <= %g (voltage RMSE %.2f mV), "
                  "thermal on all runs (RMSE %.3f K).",
                  cfg.fit_csv().filename().string().c_str(), cfg.ndc_fit_max_c_rate, 1e3 * ndc.after.voltage_rmse,
                  thermal.after.temperature_rmse);
    save_model_params(p, cfg.fitted_params(), header);
    std::printf("wrote %s\n", cfg.fitted_params().string().c_str());
    return kOk;
}

int train_nets(const PipelineConfig& cfg)
{
    const auto samples = read_fit_csv(cfg.fit_csv());
    const HybridModel physics(load_model_params(cfg.params), std::nullopt, std::nullopt, cfg.temperature_mask);
    const HybridModel fallback = HybridModel::physics_only(physics.params());

    const Dataset dv = voltage_head_dataset(fallback, samples);
    const Dataset dt = temperature_head_dataset(HybridModel(fallback.params(), std::nullopt, std::nullopt,
                                                            cfg.temperature_mask),
                                                samples);
    const auto t0 = std::chrono::steady_clock::now();
    TrainConfig tv = cfg.head_training;
    const auto dims_v = layer_dims(kVoltageNetInputs, cfg.head_hidden);
    const TrainResult rv = train(NeuralNet::make(dims_v, Activation::kTanh, tv.seed), dv, tv);
    print_training("h_v", rv);
    TrainConfig tt = cfg.head_training;
    tt.seed += 1;
    const auto dims_t = layer_dims(static_cast<int>(cfg.temperature_mask.indices.size()), cfg.head_hidden);
    const TrainResult rt = train(NeuralNet::make(dims_t, Activation::kTanh, tt.seed), dt, tt);
    print_training("h_t", rt);
    save(rv.net, cfg.voltage_net());
    save(rt.net, cfg.temperature_net());

    const HybridModel hybrid(physics.params(), rv.net, rt.net, cfg.temperature_mask);
    double sv_phys = 0, sv_hyb = 0, st_phys = 0, st_hyb = 0;
    for (const auto& s : samples) {
        const double ev0 = physics_voltage(hybrid, s.physics_state, s.current) - s.v_true;
        const double ev1 = hybrid_voltage(hybrid, s.physics_state, s.current) - s.v_true;
        const double et0 = physics_temperature(hybrid, s.physics_state) - s.t_true;
        const double et1 = hybrid_temperature(hybrid, s.physics_state) - s.t_true;
        sv_phys += ev0 * ev0;
        sv_hyb += ev1 * ev1;
        st_phys += et0 * et0;
        st_hyb += et1 * et1;
    }
    const auto n = static_cast<double>(samples.size());
    std::printf("voltage RMSE: physics %.2f mV, hybrid %.2f mV\n", 1e3 * std::sqrt(sv_phys / n),
                1e3 * std::sqrt(sv_hyb / n));
    std::printf("temperature RMSE: physics %.3f K, hybrid %.3f K\n", std::sqrt(st_phys / n), std::sqrt(st_hyb / n));
    std::printf("wrote %s, %s (%.1f s)\n", cfg.voltage_net().string().c_str(), cfg.temperature_net().string().c_str(),
                seconds_since(t0));
    return kOk;
}

int train_rdt(const PipelineConfig& cfg, bool physics_only)
{
    const HybridModel m = load_hybrid_model(cfg, physics_only);
    const auto t0 = std::chrono::steady_clock::now();
    const auto states = sample_prehistory_states(m, cfg.prehistory, cfg.rdt_train_samples, cfg.seed);
    const auto samples =
        build_rdt_samples(m, states, cfg.rdt_draw, cfg.seed + 1, cfg.rdt.v_min, cfg.rdt.horizon_cap);
    std::printf("labelled %zu RDT samples (%.1f s)\n", samples.size(), seconds_since(t0));

    const Dataset data = rdt_training_set(cfg.rdt, samples);
    const auto dims = layer_dims(kRdtNetInputs, cfg.rdt_hidden);
    const TrainResult r = train(NeuralNet::make(dims, Activation::kTanh, cfg.rdt_training.seed), data,
                                cfg.rdt_training);
    print_training("rdt", r);
    save(r.net, cfg.rdt_net());

    // Held-out check against the dual-simulation oracle.
    const RdtPredictor p(m, r.net, cfg.rdt);
    const auto hold_states = sample_prehistory_states(m, cfg.prehistory, cfg.rdt_holdout_samples, cfg.seed + 100);
    const auto hold = build_rdt_samples(m, hold_states, cfg.rdt_draw, cfg.seed + 101, cfg.rdt.v_min,
                                        cfg.rdt.horizon_cap);
    std::size_t ok = 0, used = 0;
    auto os = std::ofstream(cfg.rdt_holdout_csv());
    os << "index,current,oracle_s,predicted_s,branch\n";
    for (const auto& s : hold) {
        if (s.capped)
            continue;
        const auto tmax = rdt_tmax_oracle(m, s.state, s.current, s.t_amb, cfg.rdt.t_max, s.rdt_vmin);
        const double oracle = tmax ? std::min(*tmax, s.rdt_vmin) : s.rdt_vmin;
        const RdtEstimate est = predict_rdt(p, s.state, s.current, s.t_amb);
        ++used;
        ok += std::abs(est.seconds - oracle) <= std::max(0.02 * oracle, 5.0);
        os << s.index << ',' << s.current << ',' << oracle << ',' << est.seconds << ','
           << (est.branch == RdtBranch::kVoltage ? "voltage" : "temperature") << '\n';
    }
    std::printf("held-out: %zu of %zu within max(2%%, 5 s) of the oracle (%.1f%%)\n", ok, used,
                100.0 * static_cast<double>(ok) / static_cast<double>(std::max<std::size_t>(used, 1)));
    std::printf("wrote %s, %s (%.1f s)\n", cfg.rdt_net().string().c_str(), cfg.rdt_holdout_csv().string().c_str(),
                seconds_since(t0));
    return kOk;
}

MissionRun mission_run(const PipelineConfig& cfg, const Options& o)
{
    MissionRun run;
    run.horizons = o.horizons.empty() ? cfg.horizons : parse_horizons(o.horizons);
    run.method = parse_search_method(o.method);
    run.mode = parse_mission_mode(o.mode);
    run.cadence = o.cadence > 0 ? o.cadence : cfg.cadence;
    return run;
}

int mission(const PipelineConfig& cfg, const Options& o)
{
    const MissionRun run = mission_run(cfg, o);
    const RdtPredictor p = load_predictor(cfg, o.physics_only, o.oracle_rdt || run.method == SearchMethod::kShortcut);
    const auto t0 = std::chrono::steady_clock::now();
    const auto records = run_mission(p, cfg.mission, cfg.search, run);
    const std::string out = o.out.empty() ? "mission.csv" : o.out;
    write_mission_csv(records, run, out);
    if (!o.svg.empty())
        write_mission_svg(records, run, o.svg);

    double v_min = 1e9, t_max = -1e9;
    for (const auto& r : records) {
        v_min = std::min(v_min, r.voltage);
        t_max = std::max(t_max, r.temperature);
    }
    std::printf("mission: %zu s, mode %s, min voltage %.3f V, max temperature %.2f degC\n", records.size(),
                to_string(run.mode), v_min, t_max);
    const bool proposed = run.method != SearchMethod::kShortcut;
    for (std::size_t k = 0; k < run.horizons.size(); ++k) {
        std::printf("  H = %-4s i_max at t=0: %6.3f A", horizon_label(run.horizons[k]).c_str(),
                    (proposed ? *records.front().horizons[k].proposed : *records.front().horizons[k].shortcut).i_max);
        std::printf("   at t=%g: %6.3f A\n", records.back().time,
                    (proposed ? *records.back().horizons[k].proposed : *records.back().horizons[k].shortcut).i_max);
    }
    std::printf("wrote %s (%.1f s)\n", out.c_str(), seconds_since(t0));
    return kOk;
}

int ablation(const PipelineConfig& cfg, const Options& o)
{
    const double h = o.horizons.empty() ? 300.0 : parse_horizon(o.horizons);
    const SearchMethod method = parse_search_method(o.method);
    const RdtPredictor p = load_predictor(cfg, o.physics_only, o.oracle_rdt || method == SearchMethod::kShortcut);
    const auto rows = run_ablation_comparison(p, cfg.mission, cfg.search, h, method,
                                              o.cadence > 0 ? o.cadence : cfg.cadence);
    const std::string out = o.out.empty() ? "ablation.csv" : o.out;
    write_ablation_csv(rows, out);
    std::size_t above_t = 0, above_el = 0;
    for (const auto& r : rows) {
        above_t += r.no_tmax.p_max > r.full.p_max;
        above_el += r.no_emergency.p_max > r.full.p_max;
    }
    std::printf("H = %s: P_max(no_tmax) > P_max(full) at %zu of %zu steps, P_max(no_emergency) > P_max(full) at %zu\n",
                horizon_label(h).c_str(), above_t, rows.size(), above_el);
    std::printf("wrote %s\n", out.c_str());
    return kOk;
}

int bench(const PipelineConfig& cfg, const Options& o)
{
    const auto horizons = o.horizons.empty() ? cfg.horizons : parse_horizons(o.horizons);
    const RdtPredictor p = load_predictor(cfg, o.physics_only, o.oracle_rdt);
    const auto t0 = std::chrono::steady_clock::now();
    const auto rows = run_benchmark(p, cfg.mission, cfg.search, horizons,
                                    o.repetitions > 0 ? o.repetitions : cfg.bench_repetitions,
                                    o.cadence > 0 ? o.cadence : cfg.cadence);
    const std::string out = o.out.empty() ? "bench.csv" : o.out;
    write_bench_csv(rows, out);

    std::map<double, std::pair<double, double>> wide;
    for (const auto& r : rows)
        (r.method == "proposed" ? wide[r.horizon].first : wide[r.horizon].second) = r.mean_s;
    std::printf("%-8s %14s %14s %9s\n", "H", "proposed [s]", "shortcut [s]", "speedup");
    for (const auto& [h, t] : wide)
        std::printf("%-8s %14.3e %14.3e %8.1fx\n", horizon_label(h).c_str(), t.first, t.second, t.second / t.first);
    std::printf("wrote %s (%.1f s)\n", out.c_str(), seconds_since(t0));
    return kOk;
}

int predict(const PipelineConfig& cfg, const Options& o)
{
    if (!(o.soc >= 0 && o.soc <= 1))
        throw InvalidArgument("--soc must lie in [0, 1]");
    const SearchMethod method = parse_search_method(o.method);
    const double h = o.horizons.empty() ? 10.0 : parse_horizon(o.horizons);
    const RdtPredictor p = load_predictor(cfg, o.physics_only, o.oracle_rdt || method == SearchMethod::kShortcut);
    const double temp = std::isnan(o.temperature) ? p.model().t_amb() : o.temperature;
    const CellState x = rest_state(o.soc, temp);
    SearchConfig c = cfg.search.with_horizon(h);
    if (o.mode != "full")
        c = parse_mission_mode(o.mode) == MissionMode::kNoTmax ? c.without_tmax() : c.without_emergency();
    const RdtPredictor pp = std::isinf(c.t_max) ? p.with_t_max(c.t_max) : p;
    auto show = [&](const char* name, const SearchResult& r) {
        std::printf("%-9s i_max %.4f A (%.2f C)  P_max %.2f W  binding %s  feasible %s  iterations %d\n", name,
                    r.i_max, r.i_max / p.model().capacity_ah(), r.p_max, to_string(r.binding),
                    r.feasible ? "yes" : "no", r.iterations);
    };
    std::printf("state: rest at charge level %.3f, %.1f degC; H = %s\n", o.soc, temp, horizon_label(h).c_str());
    if (method != SearchMethod::kShortcut)
        show("proposed", proposed_search(pp, x, c));
    if (method != SearchMethod::kProposed)
        show("shortcut", shortcut_search(p.model(), x, c));
    return kOk;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Power-capability prediction for eVTOL lithium-ion cells"};
    app.require_subcommand(1);
    // `-h` stays free: subcommands take `--h` for horizons.
    app.set_help_flag("--help", "Print this help message and exit");
    Options o;
    app.add_option("-c,--config", o.config, "Pipeline configuration file, or 'default'")->capture_default_str();

    auto add_model_flags = [&](CLI::App* sub) {
        sub->add_flag("--physics-only", o.physics_only, "Use the physics outputs without the neural heads");
    };
    auto add_search_flags = [&](CLI::App* sub, bool both_allowed) {
        add_model_flags(sub);
        sub->add_flag("--oracle-rdt", o.oracle_rdt, "Replace the RDT net by the simulation oracle");
        sub->add_option("--method", o.method, both_allowed ? "proposed, shortcut or both" : "proposed or shortcut")
            ->capture_default_str();
        sub->add_option("--cadence", o.cadence, "Seconds between searches along the mission");
        sub->add_option("-o,--out", o.out, "Output CSV");
    };

    auto* gen = app.add_subcommand("gen-data", "Simulate the reference cell at the configured C-rates");
    auto* fit = app.add_subcommand("fit-params", "Identify circuit and thermal constants from gen-data output");
    auto* nets = app.add_subcommand("train-nets", "Train the voltage and temperature heads");
    auto* rdt = app.add_subcommand("train-rdt", "Train the RDT net and report held-out accuracy");
    add_model_flags(rdt);

    auto* mis = app.add_subcommand("mission", "Replay the mission and predict i_max/P_max along it");
    add_search_flags(mis, true);
    mis->add_option("--h", o.horizons, "Horizons, e.g. 10s,3m,5m");
    mis->add_option("--mode", o.mode, "full, no_tmax or no_emergency")->capture_default_str();
    mis->add_option("--svg", o.svg, "Also write a line chart of i_max and P_max");

    auto* abl = app.add_subcommand("ablation", "Compare full constraints with the two simplifications");
    add_search_flags(abl, false);
    abl->add_option("--h", o.horizons, "Horizon (default 5m)");

    auto* ben = app.add_subcommand("bench", "Time both searches along the mission");
    add_model_flags(ben);
    ben->add_flag("--oracle-rdt", o.oracle_rdt, "Replace the RDT net by the simulation oracle");
    ben->add_option("--h", o.horizons, "Horizons, e.g. 3m,5m,7m,10m");
    ben->add_option("--repetitions", o.repetitions, "Mission passes to average over");
    ben->add_option("--cadence", o.cadence, "Seconds between searches along the mission");
    ben->add_option("-o,--out", o.out, "Output CSV");

    auto* pre = app.add_subcommand("predict", "Power limit of a rested cell");
    add_model_flags(pre);
    pre->add_flag("--oracle-rdt", o.oracle_rdt, "Replace the RDT net by the simulation oracle");
    pre->add_option("--soc", o.soc, "Charge level in [0, 1]")->capture_default_str();
    pre->add_option("--temp", o.temperature, "Cell temperature, degC (default ambient)");
    pre->add_option("--h", o.horizons, "Horizon (default 10s)");
    pre->add_option("--method", o.method, "proposed, shortcut or both")->capture_default_str();
    pre->add_option("--mode", o.mode, "full, no_tmax or no_emergency")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        const PipelineConfig cfg = load_config(o.config);
        if (*gen)
            return gen_data(cfg);
        if (*fit)
            return fit_params(cfg);
        if (*nets)
            return train_nets(cfg);
        if (*rdt)
            return train_rdt(cfg, o.physics_only);
        if (*mis)
            return mission(cfg, o);
        if (*abl)
            return ablation(cfg, o);
        if (*ben)
            return bench(cfg, o);
        if (*pre)
            return predict(cfg, o);
    } catch (const MissingArtifact& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        if (!e.prerequisite().empty())
            std::fprintf(stderr, "hint: run `powercap %s` first\n", e.prerequisite().c_str());
        return kMissingArtifact;
    } catch (const NumericalError& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return kNumerical;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kUsage;
    }
    return kUsage;
}
