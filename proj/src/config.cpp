#include "powercap/config.hpp"

#include "powercap/error.hpp"
#include "powercap/params_io.hpp"

#include <cmath>

namespace powercap {

namespace {

template <typename T>
void get(const nlohmann::json& j, const char* key, T& out)
{
    if (j.contains(key))
        out = j.at(key).get<T>();
}

void read_train(const nlohmann::json& j, TrainConfig& t)
{
    get(j, "learning_rate", t.learning_rate);
    get(j, "final_learning_rate", t.final_learning_rate);
    get(j, "batch_size", t.batch_size);
    get(j, "epochs", t.epochs);
    get(j, "seed", t.seed);
    get(j, "validation_fraction", t.validation_fraction);
    get(j, "early_stop_patience", t.early_stop_patience);
}

void parse(const nlohmann::json& j, const std::filesystem::path& dir, PipelineConfig& c)
{
    auto path = [&](const char* key, std::filesystem::path& out) {
        if (j.contains(key))
            out = dir / j.at(key).get<std::string>();
    };
    path("params", c.params);
    path("reference_cell", c.reference_cell);
    path("artifacts", c.artifacts);
    get(j, "seed", c.seed);

    if (j.contains("fit")) {
        const auto& f = j.at("fit");
        get(f, "c_rates", c.fit_c_rates);
        get(f, "ndc_max_c_rate", c.ndc_fit_max_c_rate);
        get(f, "initial_scale", c.fit_initial_scale);
        get(f, "step", c.fit.step);
        get(f, "record_interval", c.fit.record_interval);
        get(f, "v_cutoff", c.fit.v_cutoff);
        get(f, "max_duration", c.fit.max_duration);
        get(f, "rest_duration", c.fit.rest_duration);
        get(f, "relax_duration", c.fit.relax_duration);
    }
    if (j.contains("heads")) {
        const auto& h = j.at("heads");
        get(h, "hidden", c.head_hidden);
        get(h, "temperature_mask", c.temperature_mask.indices);
        if (h.contains("training"))
            read_train(h.at("training"), c.head_training);
    }
    if (j.contains("rdt")) {
        const auto& r = j.at("rdt");
        get(r, "hidden", c.rdt_hidden);
        get(r, "train_samples", c.rdt_train_samples);
        get(r, "holdout_samples", c.rdt_holdout_samples);
        get(r, "checkpoints", c.rdt.checkpoints);
        get(r, "temp_tolerance", c.rdt.temp_tolerance);
        get(r, "time_tolerance", c.rdt.time_tolerance);
        get(r, "horizon_cap", c.rdt.horizon_cap);
        get(r, "time_offset", c.rdt.time_offset);
        if (r.contains("prehistory")) {
            const auto& p = r.at("prehistory");
            get(p, "soc_low", c.prehistory.soc_low);
            get(p, "soc_high", c.prehistory.soc_high);
            get(p, "segments", c.prehistory.segments);
            get(p, "max_c_rate", c.prehistory.max_c_rate);
            get(p, "p_load", c.prehistory.p_load);
            get(p, "p_active", c.prehistory.p_active);
            get(p, "max_duration", c.prehistory.max_duration);
        }
        if (r.contains("currents")) {
            const auto& d = r.at("currents");
            get(d, "low_c_rate", c.rdt_draw.low_c_rate);
            get(d, "high_c_rate", c.rdt_draw.high_c_rate);
            get(d, "pinned_fraction", c.rdt_draw.pinned_fraction);
        }
        if (r.contains("training"))
            read_train(r.at("training"), c.rdt_training);
    }
    if (j.contains("constraints")) {
        const auto& s = j.at("constraints");
        get(s, "v_min", c.search.v_min);
        get(s, "t_max", c.search.t_max);
        get(s, "i_min", c.search.i_min);
        get(s, "i_max", c.search.i_max_bound);
        get(s, "i_el", c.search.i_el);
        get(s, "h_el", c.search.h_el);
        get(s, "eps", c.search.eps);
    }
    if (j.contains("mission")) {
        const auto& m = j.at("mission");
        if (m.contains("phases")) {
            c.mission.phases.clear();
            for (const auto& ph : m.at("phases"))
                c.mission.phases.push_back(
                    {ph.at("name").get<std::string>(), ph.at("c_rate").get<double>(), ph.at("duration").get<double>()});
        }
        if (m.contains("horizons")) {
            c.horizons.clear();
            for (const auto& h : m.at("horizons"))
                c.horizons.push_back(h.is_string() ? parse_horizon(h.get<std::string>()) : h.get<double>());
        }
        get(m, "cadence", c.cadence);
        get(m, "bench_repetitions", c.bench_repetitions);
    }
}

} // namespace

std::filesystem::path default_config_path() { return std::filesystem::path(POWERCAP_DATA_DIR) / "default.json"; }

PipelineConfig load_config(const std::string& path_or_default)
{
    const std::filesystem::path path =
        path_or_default == "default" ? default_config_path() : std::filesystem::path(path_or_default);
    if (!std::filesystem::exists(path))
        throw ParseError("configuration file " + path.string() + " not found");
    const auto j = read_json(path);
    PipelineConfig c;
    c.source = path;
    const auto dir = path.parent_path();
    c.params = dir / "default_params.json";
    c.reference_cell = dir / "reference_cell.json";
    c.artifacts = dir / "artifacts";
    for (double r = 0; r <= 8.0 + 1e-9; r += 0.5)
        c.fit_c_rates.push_back(r);
    try {
        parse(j, dir, c);
        c.rdt.v_min = c.search.v_min;
        c.rdt_draw.pinned_current = c.search.i_el;
        c.rdt.t_max = c.search.t_max;
        c.rdt.validate();
        c.search.validate();
        c.mission.validate();
        c.head_training.validate();
        c.rdt_training.validate();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    } catch (const InvalidArgument& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    return c;
}

HybridModel load_hybrid_model(const PipelineConfig& cfg, bool physics_only)
{
    ModelParams params = load_model_params(cfg.params);
    if (physics_only)
        return HybridModel::physics_only(std::move(params));
    auto need = [](const std::filesystem::path& p) {
        if (!std::filesystem::exists(p))
            throw MissingArtifact(p.string() + " not found", "train-nets");
        return load(p);
    };
    return HybridModel(std::move(params), need(cfg.voltage_net()), need(cfg.temperature_net()), cfg.temperature_mask);
}

RdtPredictor load_predictor(const PipelineConfig& cfg, bool physics_only, bool oracle)
{
    HybridModel m = load_hybrid_model(cfg, physics_only);
    if (oracle)
        return RdtPredictor::oracle(std::move(m), cfg.rdt);
    if (!std::filesystem::exists(cfg.rdt_net()))
        throw MissingArtifact(cfg.rdt_net().string() + " not found", "train-rdt");
    return RdtPredictor(std::move(m), load(cfg.rdt_net()), cfg.rdt);
}

} // namespace powercap
