#include "thermotwin/harness/config.hpp"

#include <algorithm>
#include <functional>
#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "thermotwin/core/csv_io.hpp"
#include "thermotwin/core/errors.hpp"

namespace thermotwin {

using nlohmann::json;

namespace {

// Strict view over one JSON object: every key read is recorded, and close()
// rejects anything left over.
class Obj {
public:
    Obj(const json& j, std::string where) : j_(j), where_(std::move(where)) {
        require(j_.is_object(), ErrorKind::config, where_ + ": expected an object");
    }

    template <class T>
    void get(const char* key, T& out) {
        used_.insert(key);
        if (!j_.contains(key)) return;
        try {
            out = j_.at(key).get<T>();
        } catch (const json::exception&) {
            fail(ErrorKind::config, path(key) + ": wrong type");
        }
    }

    void section(const char* key, const std::function<void(Obj&)>& body) {
        used_.insert(key);
        if (!j_.contains(key)) return;
        Obj o(j_.at(key), path(key));
        body(o);
        o.close();
    }

    std::string enum_string(const char* key, std::string current) {
        get(key, current);
        return current;
    }

    void mark(const char* key) { used_.insert(key); }
    const json& raw() const { return j_; }
    std::string path(const std::string& key) const { return where_ + "." + key; }

    void close() const {
        for (const auto& item : j_.items())
            require(used_.count(item.key()) > 0, ErrorKind::config, "unknown key " + path(item.key()));
    }

private:
    const json& j_;
    std::string where_;
    std::set<std::string> used_;
};

template <class F>
auto as_config(const std::string& where, F&& f) {
    try {
        return f();
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::config) throw;
        fail(ErrorKind::config, where + ": " + e.what());
    }
}

void read_train(Obj& o, TrainConfig& t) {
    o.get("learning_rate", t.adam.learning_rate);
    o.get("epochs", t.epochs);
    o.get("batch_size", t.batch_size);
    o.get("widths", t.widths);
    o.get("lookback", t.lookback);
    o.get("window_stride", t.window_stride);
    o.get("state_noise", t.state_noise);
    o.get("exp_weight", t.exp_weight);
    o.get("seed", t.seed);
    const std::string target = o.enum_string("fnn_target", t.fnn_target == FnnTarget::same_step ? "same_step" : "next_step");
    require(target == "same_step" || target == "next_step", ErrorKind::config,
            o.path("fnn_target") + ": expected same_step or next_step");
    t.fnn_target = target == "same_step" ? FnnTarget::same_step : FnnTarget::next_step;
}

json train_json(const TrainConfig& t) {
    return {{"learning_rate", t.adam.learning_rate},
            {"epochs", t.epochs},
            {"batch_size", t.batch_size},
            {"widths", t.widths},
            {"lookback", t.lookback},
            {"window_stride", t.window_stride},
            {"state_noise", t.state_noise},
            {"exp_weight", t.exp_weight},
            {"seed", t.seed},
            {"fnn_target", t.fnn_target == FnnTarget::same_step ? "same_step" : "next_step"}};
}

void read_stlsq(Obj& o, StlsqConfig& s) {
    o.get("threshold", s.threshold);
    o.get("ridge", s.ridge);
    o.get("max_iters", s.max_iters);
    o.get("normalize_columns", s.normalize_columns);
}

json stlsq_json(const StlsqConfig& s) {
    return {{"threshold", s.threshold},
            {"ridge", s.ridge},
            {"max_iters", s.max_iters},
            {"normalize_columns", s.normalize_columns}};
}

void read_al(Obj& o, AlConfig& c) {
    const std::string where = o.path("");
    c.strategy = as_config(where, [&] {
        return strategy_from_string(o.enum_string("strategy", std::string(to_string(c.strategy))));
    });
    c.covariance_source = as_config(where, [&] {
        return covariance_source_from_string(
            o.enum_string("covariance_source", std::string(to_string(c.covariance_source))));
    });
    c.target = as_config(where, [&] {
        return target_from_string(o.enum_string("target", std::string(to_string(c.target))));
    });
    o.get("init_size", c.init_size);
    o.get("batch", c.batch);
    o.get("max_rounds", c.max_rounds);
    o.get("early_stop", c.early_stop);
    o.get("patience", c.patience);
    o.get("min_improvement", c.min_improvement);
    if (o.raw().contains("mvg_delta") && !o.raw().at("mvg_delta").is_null()) {
        double d = 0.0;
        o.get("mvg_delta", d);
        c.mvg_delta = d;
    } else {
        o.mark("mvg_delta");
    }
    o.section("error_query", [&](Obj& e) {
        e.get("use_m", c.error_query.use_m);
        e.get("use_q", c.error_query.use_q);
    });
    o.section("stlsq", [&](Obj& s) { read_stlsq(s, c.stlsq); });
    o.section("train", [&](Obj& t) { read_train(t, c.train); });
}

json al_json(const AlConfig& c) {
    return {{"strategy", std::string(to_string(c.strategy))},
            {"covariance_source", std::string(to_string(c.covariance_source))},
            {"target", std::string(to_string(c.target))},
            {"init_size", c.init_size},
            {"batch", c.batch},
            {"max_rounds", c.max_rounds},
            {"early_stop", c.early_stop},
            {"patience", c.patience},
            {"min_improvement", c.min_improvement},
            {"mvg_delta", c.mvg_delta ? json(*c.mvg_delta) : json(nullptr)},
            {"error_query", {{"use_m", c.error_query.use_m}, {"use_q", c.error_query.use_q}}},
            {"stlsq", stlsq_json(c.stlsq)},
            {"train", train_json(c.train)}};
}

}  // namespace

AlConfig RunConfig::al_config(Family f) const {
    const auto it = al.find(f);
    return it != al.end() ? it->second : AlConfig::defaults(f);
}

void RunConfig::validate() const {
    as_config("config", [&] {
        require(data.pool >= 2, ErrorKind::config, "data.pool must be >= 2");
        require(data.eval >= 1, ErrorKind::config, "data.eval must be >= 1");
        require(data.n_steps >= experiment.smoothing.window, ErrorKind::config,
                "data.n_steps must cover the smoothing window");
        data.grid().validate();
        data.generator.bed.validate();
        data.generator.ghx.validate();
        data.generator.bounds.validate();
        experiment.perturbation.apply(data.generator);
        experiment.noise.validate();
        require(experiment.smoothing.window % 2 == 1 && experiment.smoothing.window > experiment.smoothing.order,
                ErrorKind::config, "experiment.smoothing: window must be odd and larger than the order");
        require(ensemble.n_models >= 2, ErrorKind::config, "ensemble.n_models must be >= 2");
        require(ensemble.subset_size >= 1 && ensemble.subset_size <= data.pool, ErrorKind::config,
                "ensemble.subset_size must be in [1, data.pool]");
        ensemble.stlsq.validate();
        require(table.train_size >= 1 && table.train_size <= data.pool, ErrorKind::config,
                "table.train_size must be in [1, data.pool]");
        require(table.band_samples >= 100, ErrorKind::config, "table.band_samples must be >= 100");
        table.fnn.validate();
        table.gru.validate();
        require(table.gru.lookback < data.n_steps, ErrorKind::config, "table.gru.lookback must be < data.n_steps");
        require(!families.empty(), ErrorKind::config, "families must not be empty");
        std::set<Family> seen;
        for (Family f : families) {
            require(seen.insert(f).second, ErrorKind::config, "families: duplicate " + std::string(to_string(f)));
            const AlConfig c = al_config(f);
            require(c.family == f, ErrorKind::config, "al." + std::string(to_string(f)) + ": family mismatch");
            c.validate();
            if (f == Family::mvg)
                require(c.init_size <= ensemble.n_models, ErrorKind::config,
                        "al.mvg.init_size exceeds ensemble.n_models");
            else
                require(c.init_size <= data.pool, ErrorKind::config,
                        "al." + std::string(to_string(f)) + ".init_size exceeds data.pool");
            if (f == Family::gru)
                require(c.train.lookback < data.n_steps, ErrorKind::config, "al.gru.train.lookback must be < data.n_steps");
        }
        return 0;
    });
}

RunConfig run_config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        fail(ErrorKind::config, std::string("config: malformed JSON: ") + e.what());
    }
    RunConfig c;
    Obj top(j, "config");
    top.get("seed", c.seed);
    top.section("data", [&](Obj& o) {
        o.get("pool", c.data.pool);
        o.get("eval", c.data.eval);
        o.get("n_steps", c.data.n_steps);
        o.get("span", c.data.span);
        o.section("bed", [&](Obj& b) {
            auto& bed = c.data.generator.bed;
            b.get("radius", bed.radius);
            b.get("height", bed.height);
            b.get("n_nodes", bed.n_nodes);
            b.get("porosity", bed.porosity);
            b.get("h_c", bed.h_c);
        });
        o.section("ghx", [&](Obj& g) {
            auto& ghx = c.data.generator.ghx;
            g.get("effectiveness", ghx.effectiveness);
            g.get("t_glycol_in", ghx.t_glycol_in);
            g.get("c_glycol", ghx.c_glycol);
            g.get("valve_tau", ghx.valve_tau);
            g.get("heat_tau", ghx.heat_tau);
        });
    });
    top.section("experiment", [&](Obj& o) {
        o.section("perturbation", [&](Obj& p) {
            p.get("h_c_scale", c.experiment.perturbation.h_c_scale);
            p.get("porosity_scale", c.experiment.perturbation.porosity_scale);
            p.get("effectiveness_scale", c.experiment.perturbation.effectiveness_scale);
        });
        o.section("noise", [&](Obj& n) {
            n.get("m_ghx", c.experiment.noise.m_ghx);
            n.get("q_ghx", c.experiment.noise.q_ghx);
            n.get("m_tes_in", c.experiment.noise.m_tes_in);
            n.get("temperature", c.experiment.noise.temperature);
        });
        o.section("smoothing", [&](Obj& s) {
            s.get("window", c.experiment.smoothing.window);
            s.get("order", c.experiment.smoothing.order);
        });
    });
    top.section("ensemble", [&](Obj& o) {
        o.get("n_models", c.ensemble.n_models);
        o.get("subset_size", c.ensemble.subset_size);
        o.section("stlsq", [&](Obj& s) { read_stlsq(s, c.ensemble.stlsq); });
    });
    top.section("table", [&](Obj& o) {
        o.get("train_size", c.table.train_size);
        o.get("band_samples", c.table.band_samples);
        o.section("fnn", [&](Obj& t) { read_train(t, c.table.fnn); });
        o.section("gru", [&](Obj& t) { read_train(t, c.table.gru); });
    });
    if (j.contains("families")) {
        std::vector<std::string> names;
        top.get("families", names);
        c.families.clear();
        for (const auto& n : names) c.families.push_back(as_config("config.families", [&] { return family_from_string(n); }));
    }
    top.section("al", [&](Obj& o) {
        for (Family f : {Family::mvg, Family::sindyc, Family::fnn, Family::gru}) {
            o.section(std::string(to_string(f)).c_str(), [&](Obj& a) {
                AlConfig ac = AlConfig::defaults(f);
                read_al(a, ac);
                c.al[f] = ac;
            });
        }
    });
    top.close();
    c.validate();
    return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    require(std::filesystem::exists(path), ErrorKind::io, "config file not found: " + path.string());
    return run_config_from_json(read_text_file(path));
}

std::string run_config_to_json(const RunConfig& c) {
    const auto& bed = c.data.generator.bed;
    const auto& ghx = c.data.generator.ghx;
    json j;
    j["seed"] = c.seed;
    j["data"] = {{"pool", c.data.pool},
                 {"eval", c.data.eval},
                 {"n_steps", c.data.n_steps},
                 {"span", c.data.span},
                 {"bed",
                  {{"radius", bed.radius},
                   {"height", bed.height},
                   {"n_nodes", bed.n_nodes},
                   {"porosity", bed.porosity},
                   {"h_c", bed.h_c}}},
                 {"ghx",
                  {{"effectiveness", ghx.effectiveness},
                   {"t_glycol_in", ghx.t_glycol_in},
                   {"c_glycol", ghx.c_glycol},
                   {"valve_tau", ghx.valve_tau},
                   {"heat_tau", ghx.heat_tau}}}};
    const auto& e = c.experiment;
    j["experiment"] = {{"perturbation",
                        {{"h_c_scale", e.perturbation.h_c_scale},
                         {"porosity_scale", e.perturbation.porosity_scale},
                         {"effectiveness_scale", e.perturbation.effectiveness_scale}}},
                       {"noise",
                        {{"m_ghx", e.noise.m_ghx},
                         {"q_ghx", e.noise.q_ghx},
                         {"m_tes_in", e.noise.m_tes_in},
                         {"temperature", e.noise.temperature}}},
                       {"smoothing", {{"window", e.smoothing.window}, {"order", e.smoothing.order}}}};
    j["ensemble"] = {{"n_models", c.ensemble.n_models},
                     {"subset_size", c.ensemble.subset_size},
                     {"stlsq", stlsq_json(c.ensemble.stlsq)}};
    j["table"] = {{"train_size", c.table.train_size},
                  {"band_samples", c.table.band_samples},
                  {"fnn", train_json(c.table.fnn)},
                  {"gru", train_json(c.table.gru)}};
    json fams = json::array();
    json al = json::object();
    for (Family f : c.families) {
        fams.push_back(std::string(to_string(f)));
        al[std::string(to_string(f))] = al_json(c.al_config(f));
    }
    j["families"] = fams;
    j["al"] = al;
    return j.dump(2) + "\n";
}

}  // namespace thermotwin
