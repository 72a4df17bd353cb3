#include "flm/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>
#include <string>

#include "flm/errors.hpp"
#include "flm/fourier_xlate.hpp"
#include "flm/parallel.hpp"
#include "flm/pde.hpp"
#include "flm/rng.hpp"

namespace flm {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// Seed streams for the independent random draws of one run.
constexpr std::uint64_t kCollocStream = 100;
constexpr std::uint64_t kTrainDiskStream = 201;
constexpr std::uint64_t kTestDiskStream = 202;
constexpr std::uint64_t kFixedIcStream = 300; // + ic index

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double elapsed_s(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------- config --

[[noreturn]] void bad(const std::string& origin, const std::string& msg) {
    throw ConfigError("config " + origin + ": " + msg);
}

void check_keys(const json& j, const std::string& origin, const std::string& where,
                std::initializer_list<const char*> allowed) {
    if (!j.is_object())
        bad(origin, where + " must be an object");
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (std::find_if(allowed.begin(), allowed.end(),
                         [&](const char* a) { return key == a; }) == allowed.end())
            bad(origin, "unknown key '" + key + "' in " + where);
    }
}

double num(const json& j, const std::string& origin, const std::string& name) {
    if (!j.is_number())
        bad(origin, name + " must be a number");
    return j.get<double>();
}

int as_int(const json& j, const std::string& origin, const std::string& name) {
    if (!j.is_number_integer())
        bad(origin, name + " must be an integer");
    return j.get<int>();
}

Vec3 as_vec3(const json& j, const std::string& origin, const std::string& name) {
    if (!j.is_array() || j.size() != 3)
        bad(origin, name + " must be an array of 3 numbers");
    Vec3 v{};
    for (int i = 0; i < 3; ++i)
        v[i] = num(j[i], origin, name);
    return v;
}

void parse_train_block(const json& j, const std::string& origin, const std::string& where,
                       TrainConfig& out) {
    check_keys(j, origin, where, {"max_epochs", "loss_tol", "log_every"});
    if (j.contains("max_epochs"))
        out.max_epochs = as_int(j["max_epochs"], origin, where + ".max_epochs");
    if (j.contains("loss_tol"))
        out.loss_tol = num(j["loss_tol"], origin, where + ".loss_tol");
    if (j.contains("log_every"))
        out.log_every = as_int(j["log_every"], origin, where + ".log_every");
    if (out.max_epochs < 1)
        bad(origin, where + ".max_epochs must be >= 1");
    if (!(out.loss_tol >= 0))
        bad(origin, where + ".loss_tol must be >= 0");
}

} // namespace

RunConfig config_from_json(const std::string& text, const std::string& origin) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        bad(origin, std::string("unparseable JSON (") + e.what() + ")");
    }
    check_keys(j, origin, "top level",
               {"experiment", "problem", "collocation", "grid_n", "model", "adam", "train",
                "phase2", "ocp", "mode", "ics", "disk", "shooting", "checkpoint", "sweep",
                "seeds", "out_dir", "threads"});

    RunConfig cfg;
    // Training defaults differ per experiment, so resolve the kind first.
    if (j.contains("experiment")) {
        if (!j["experiment"].is_string())
            bad(origin, "experiment must be a string");
        cfg.experiment = j["experiment"].get<std::string>();
    }
    static const std::set<std::string> kinds{"pde", "ocp", "bvp", "translate", "sweep"};
    if (!kinds.contains(cfg.experiment))
        bad(origin, "unknown experiment '" + cfg.experiment +
                        "' (expected pde, ocp, bvp, translate or sweep)");

    if (cfg.experiment == "pde" || cfg.experiment == "sweep") {
        cfg.train.max_epochs = 10000;
        cfg.train.loss_tol = 1e-4;
        cfg.phase2 = cfg.experiment == "pde";
        cfg.train2.max_epochs = 30000;
        cfg.train2.loss_tol = 1e-8;
    } else if (cfg.experiment == "ocp") {
        cfg.train.max_epochs = 30000;
        cfg.train.loss_tol = 1e-6;
        cfg.n_subnets = 5;
        cfg.adam.beta1 = 0.99;
        cfg.adam.beta2 = 0.999;
    }

    if (j.contains("problem")) {
        if (!j["problem"].is_string())
            bad(origin, "problem must be a string");
        cfg.problem = j["problem"].get<std::string>();
        if (cfg.problem != "heat" && cfg.problem != "poisson" && cfg.problem != "gbs")
            bad(origin, "unknown problem '" + cfg.problem + "' (expected heat, poisson or gbs)");
    }
    if (j.contains("collocation")) {
        const json& c = j["collocation"];
        check_keys(c, origin, "collocation", {"n_ic", "n_bc", "n_pde"});
        if (c.contains("n_ic"))
            cfg.n_ic = as_int(c["n_ic"], origin, "collocation.n_ic");
        if (c.contains("n_bc"))
            cfg.n_bc = as_int(c["n_bc"], origin, "collocation.n_bc");
        if (c.contains("n_pde"))
            cfg.n_pde = as_int(c["n_pde"], origin, "collocation.n_pde");
        if (cfg.n_ic < 0 || cfg.n_bc < 0 || cfg.n_pde < 1)
            bad(origin, "collocation counts out of range");
    }
    if (j.contains("grid_n")) {
        cfg.grid_n = as_int(j["grid_n"], origin, "grid_n");
        if (cfg.grid_n < 2)
            bad(origin, "grid_n must be >= 2");
    }
    if (j.contains("model")) {
        const json& m = j["model"];
        check_keys(m, origin, "model", {"n_subnets", "bias_sigma"});
        if (m.contains("n_subnets"))
            cfg.n_subnets = as_int(m["n_subnets"], origin, "model.n_subnets");
        if (m.contains("bias_sigma"))
            cfg.bias_sigma = num(m["bias_sigma"], origin, "model.bias_sigma");
        if (cfg.n_subnets < 1)
            bad(origin, "model.n_subnets must be >= 1");
        if (!(cfg.bias_sigma >= 0))
            bad(origin, "model.bias_sigma must be >= 0");
    }
    if (j.contains("adam")) {
        const json& a = j["adam"];
        check_keys(a, origin, "adam", {"lr", "betas", "eps"});
        if (a.contains("lr"))
            cfg.adam.lr = num(a["lr"], origin, "adam.lr");
        if (a.contains("betas")) {
            if (!a["betas"].is_array() || a["betas"].size() != 2)
                bad(origin, "adam.betas must be an array of 2 numbers");
            cfg.adam.beta1 = num(a["betas"][0], origin, "adam.betas[0]");
            cfg.adam.beta2 = num(a["betas"][1], origin, "adam.betas[1]");
        }
        if (a.contains("eps"))
            cfg.adam.eps = num(a["eps"], origin, "adam.eps");
        if (!(cfg.adam.lr > 0) || !(cfg.adam.eps > 0))
            bad(origin, "adam.lr and adam.eps must be > 0");
        for (double b : {cfg.adam.beta1, cfg.adam.beta2})
            if (!(b >= 0) || b >= 1)
                bad(origin, "adam.betas must lie in [0, 1)");
    }
    if (j.contains("train"))
        parse_train_block(j["train"], origin, "train", cfg.train);
    if (j.contains("phase2")) {
        const json& p = j["phase2"];
        if (p.is_boolean()) {
            cfg.phase2 = p.get<bool>();
        } else {
            check_keys(p, origin, "phase2",
                       {"enabled", "max_epochs", "loss_tol", "log_every", "reset_adam"});
            if (p.contains("enabled")) {
                if (!p["enabled"].is_boolean())
                    bad(origin, "phase2.enabled must be a boolean");
                cfg.phase2 = p["enabled"].get<bool>();
            } else {
                cfg.phase2 = true;
            }
            json trimmed = p;
            trimmed.erase("enabled");
            if (trimmed.contains("reset_adam")) {
                if (!trimmed["reset_adam"].is_boolean())
                    bad(origin, "phase2.reset_adam must be a boolean");
                cfg.reset_adam = trimmed["reset_adam"].get<bool>();
                trimmed.erase("reset_adam");
            }
            parse_train_block(trimmed, origin, "phase2", cfg.train2);
        }
    }
    if (j.contains("mode")) {
        if (!j["mode"].is_string())
            bad(origin, "mode must be a string");
        cfg.ocp_mode = j["mode"].get<std::string>();
        if (cfg.ocp_mode != "fixed" && cfg.ocp_mode != "varying")
            bad(origin, "mode must be 'fixed' or 'varying'");
    }
    if (j.contains("ocp")) {
        const json& o = j["ocp"];
        check_keys(o, origin, "ocp",
                   {"horizon", "control_weight", "target", "mu_dyn", "mu_init", "quad_n"});
        if (o.contains("horizon"))
            cfg.ocp.horizon = num(o["horizon"], origin, "ocp.horizon");
        if (o.contains("control_weight"))
            cfg.ocp.control_weight = num(o["control_weight"], origin, "ocp.control_weight");
        if (o.contains("target"))
            cfg.ocp.target = as_vec3(o["target"], origin, "ocp.target");
        if (o.contains("mu_dyn"))
            cfg.ocp.mu_dyn = as_vec3(o["mu_dyn"], origin, "ocp.mu_dyn");
        if (o.contains("mu_init"))
            cfg.ocp.mu_init = as_vec3(o["mu_init"], origin, "ocp.mu_init");
        if (o.contains("quad_n"))
            cfg.ocp.quad_n = as_int(o["quad_n"], origin, "ocp.quad_n");
        if (!(cfg.ocp.horizon > 0) || !(cfg.ocp.control_weight > 0) || cfg.ocp.quad_n < 2)
            bad(origin, "ocp.horizon/control_weight must be > 0 and ocp.quad_n >= 2");
        for (int i = 0; i < 3; ++i)
            if (!(cfg.ocp.mu_dyn[i] > 0) || !(cfg.ocp.mu_init[i] > 0))
                bad(origin, "ocp penalty weights must be > 0");
    }
    if (j.contains("ics")) {
        if (!j["ics"].is_array() || j["ics"].empty())
            bad(origin, "ics must be a non-empty array of simplex points");
        for (const json& p : j["ics"])
            cfg.ics.push_back(as_vec3(p, origin, "ics entry"));
    }
    if (j.contains("disk")) {
        const json& d = j["disk"];
        check_keys(d, origin, "disk", {"center", "radius", "train_count", "test_count", "index"});
        if (d.contains("center"))
            cfg.disk_center = as_vec3(d["center"], origin, "disk.center");
        if (d.contains("radius"))
            cfg.disk_radius = num(d["radius"], origin, "disk.radius");
        if (d.contains("train_count"))
            cfg.disk_train = as_int(d["train_count"], origin, "disk.train_count");
        if (d.contains("test_count"))
            cfg.disk_test = as_int(d["test_count"], origin, "disk.test_count");
        if (d.contains("index"))
            cfg.disk_index = as_int(d["index"], origin, "disk.index");
        if (!(cfg.disk_radius > 0) || cfg.disk_train < 1 || cfg.disk_test < 1)
            bad(origin, "disk radius/counts out of range");
        if (cfg.disk_index < 1 || cfg.disk_index > 3)
            bad(origin, "disk.index must be 1, 2 or 3");
    }
    if (j.contains("shooting")) {
        const json& s = j["shooting"];
        check_keys(s, origin, "shooting", {"rk4_steps", "tol", "max_iter", "fd_step"});
        if (s.contains("rk4_steps"))
            cfg.shooting.rk4_steps = as_int(s["rk4_steps"], origin, "shooting.rk4_steps");
        if (s.contains("tol"))
            cfg.shooting.tol = num(s["tol"], origin, "shooting.tol");
        if (s.contains("max_iter"))
            cfg.shooting.max_iter = as_int(s["max_iter"], origin, "shooting.max_iter");
        if (s.contains("fd_step"))
            cfg.shooting.fd_step = num(s["fd_step"], origin, "shooting.fd_step");
        if (cfg.shooting.rk4_steps < 2 || !(cfg.shooting.tol > 0) || !(cfg.shooting.fd_step > 0))
            bad(origin, "shooting parameters out of range");
    }
    if (j.contains("checkpoint")) {
        if (!j["checkpoint"].is_string())
            bad(origin, "checkpoint must be a string path");
        cfg.checkpoint = j["checkpoint"].get<std::string>();
    }
    if (j.contains("sweep")) {
        const json& s = j["sweep"];
        check_keys(s, origin, "sweep", {"n_subnets", "lr", "betas"});
        if (s.contains("n_subnets"))
            for (const json& v : s["n_subnets"])
                cfg.sweep.n_subnets.push_back(as_int(v, origin, "sweep.n_subnets entry"));
        if (s.contains("lr"))
            for (const json& v : s["lr"])
                cfg.sweep.lr.push_back(num(v, origin, "sweep.lr entry"));
        if (s.contains("betas"))
            for (const json& v : s["betas"]) {
                if (!v.is_array() || v.size() != 2)
                    bad(origin, "sweep.betas entries must be arrays of 2 numbers");
                cfg.sweep.betas.push_back({num(v[0], origin, "sweep.betas entry"),
                                           num(v[1], origin, "sweep.betas entry")});
            }
    }
    if (j.contains("seeds")) {
        if (!j["seeds"].is_array() || j["seeds"].empty())
            bad(origin, "seeds must be a non-empty array");
        cfg.seeds.clear();
        for (const json& v : j["seeds"]) {
            if (!v.is_number_integer() || v.get<long long>() < 0)
                bad(origin, "seeds must be nonnegative integers");
            cfg.seeds.push_back(v.get<std::uint64_t>());
        }
    }
    if (j.contains("out_dir")) {
        if (!j["out_dir"].is_string())
            bad(origin, "out_dir must be a string");
        cfg.out_dir = j["out_dir"].get<std::string>();
    }
    if (j.contains("threads")) {
        cfg.threads = as_int(j["threads"], origin, "threads");
        if (cfg.threads < 0)
            bad(origin, "threads must be >= 0");
    }

    // Experiment-specific required pieces.
    if (cfg.experiment == "ocp" || cfg.experiment == "bvp") {
        if (cfg.ics.empty())
            cfg.ics = {{0.2, 0.2, 0.6}, {0.2, 0.6, 0.2}, {0.6, 0.2, 0.2}};
        for (const Vec3& u0 : cfg.ics)
            if (!on_simplex(u0, 1e-9))
                bad(origin, "initial condition off the simplex");
    }
    if (cfg.experiment == "translate" && cfg.checkpoint.empty())
        bad(origin, "translate requires a checkpoint path");
    if (cfg.experiment == "sweep") {
        if (cfg.sweep.n_subnets.empty() || cfg.sweep.lr.empty() || cfg.sweep.betas.empty())
            bad(origin, "sweep requires non-empty n_subnets, lr and betas axes");
        for (int n : cfg.sweep.n_subnets)
            if (n < 1)
                bad(origin, "sweep.n_subnets entries must be >= 1");
    }
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("config " + path + ": cannot open file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return config_from_json(ss.str(), path);
}

std::string dump_config(const RunConfig& cfg) {
    json j;
    j["experiment"] = cfg.experiment;
    j["seeds"] = cfg.seeds;
    j["out_dir"] = cfg.out_dir;
    j["threads"] = cfg.threads;
    if (cfg.experiment == "pde" || cfg.experiment == "sweep") {
        j["problem"] = cfg.problem;
        j["collocation"] = {{"n_ic", cfg.n_ic}, {"n_bc", cfg.n_bc}, {"n_pde", cfg.n_pde}};
        j["grid_n"] = cfg.grid_n;
    }
    if (cfg.experiment != "bvp" && cfg.experiment != "translate") {
        j["model"] = {{"n_subnets", cfg.n_subnets}, {"bias_sigma", cfg.bias_sigma}};
        j["adam"] = {{"lr", cfg.adam.lr},
                     {"betas", json::array({cfg.adam.beta1, cfg.adam.beta2})},
                     {"eps", cfg.adam.eps}};
        j["train"] = {{"max_epochs", cfg.train.max_epochs},
                      {"loss_tol", cfg.train.loss_tol},
                      {"log_every", cfg.train.log_every}};
        j["phase2"] = {{"enabled", cfg.phase2},
                       {"max_epochs", cfg.train2.max_epochs},
                       {"loss_tol", cfg.train2.loss_tol},
                       {"log_every", cfg.train2.log_every},
                       {"reset_adam", cfg.reset_adam}};
    }
    if (cfg.experiment == "ocp") {
        j["mode"] = cfg.ocp_mode;
        j["ocp"] = {{"horizon", cfg.ocp.horizon},
                    {"control_weight", cfg.ocp.control_weight},
                    {"target", cfg.ocp.target},
                    {"mu_dyn", cfg.ocp.mu_dyn},
                    {"mu_init", cfg.ocp.mu_init},
                    {"quad_n", cfg.ocp.quad_n}};
        if (cfg.ocp_mode == "fixed")
            j["ics"] = cfg.ics;
        else
            j["disk"] = {{"center", cfg.disk_center},
                         {"radius", cfg.disk_radius},
                         {"train_count", cfg.disk_train},
                         {"test_count", cfg.disk_test},
                         {"index", cfg.disk_index}};
        j["shooting"] = {{"rk4_steps", cfg.shooting.rk4_steps},
                         {"tol", cfg.shooting.tol},
                         {"max_iter", cfg.shooting.max_iter},
                         {"fd_step", cfg.shooting.fd_step}};
    }
    if (cfg.experiment == "bvp") {
        j["ics"] = cfg.ics;
        j["shooting"] = {{"rk4_steps", cfg.shooting.rk4_steps},
                         {"tol", cfg.shooting.tol},
                         {"max_iter", cfg.shooting.max_iter},
                         {"fd_step", cfg.shooting.fd_step}};
    }
    if (cfg.experiment == "translate")
        j["checkpoint"] = cfg.checkpoint;
    if (cfg.experiment == "sweep") {
        json betas = json::array();
        for (const auto& b : cfg.sweep.betas)
            betas.push_back(json::array({b[0], b[1]}));
        j["sweep"] = {{"n_subnets", cfg.sweep.n_subnets}, {"lr", cfg.sweep.lr},
                      {"betas", betas}};
    }
    return j.dump(2) + "\n";
}

// ------------------------------------------------------------- execution --

namespace {

struct Agg {
    double mean = 0.0;
    double sd = 0.0;
};

Agg aggregate(const std::vector<double>& xs) {
    Agg a;
    if (xs.empty())
        return a;
    for (double x : xs)
        a.mean += x;
    a.mean /= static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double acc = 0.0;
        for (double x : xs)
            acc += (x - a.mean) * (x - a.mean);
        a.sd = std::sqrt(acc / static_cast<double>(xs.size() - 1));
    }
    return a;
}

json agg_json(const std::vector<double>& xs) {
    const Agg a = aggregate(xs);
    return json{{"mean", a.mean}, {"sd", a.sd}, {"count", xs.size()}};
}

class CsvFile {
public:
    CsvFile(const fs::path& path, const std::string& header) : out_(path) {
        if (!out_)
            throw std::runtime_error("cannot open " + path.string());
        out_ << header << "\n";
    }
    // Cells are written as-is; use fmt() for doubles.
    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i)
            out_ << (i ? "," : "") << cells[i];
        out_ << "\n";
    }

private:
    std::ofstream out_;
};

void write_loss_curve(const fs::path& path, const TrainReport& r1, const TrainReport* r2) {
    CsvFile csv(path, "epoch,loss");
    for (const auto& [epoch, loss] : r1.loss_curve)
        csv.row({std::to_string(epoch), fmt(loss)});
    if (r2)
        for (const auto& [epoch, loss] : r2->loss_curve)
            csv.row({std::to_string(epoch), fmt(loss)});
}

void write_manifest(const fs::path& dir, const RunConfig& cfg, json rows, json aggregate_block,
                    json extra, const std::vector<std::string>& artifacts, double wall_s,
                    bool partial_failure) {
    json m;
    m["experiment"] = cfg.experiment;
    m["config"] = json::parse(dump_config(cfg));
    m["rows"] = std::move(rows);
    m["aggregate"] = std::move(aggregate_block);
    for (auto& [k, v] : extra.items())
        m[k] = v;
    m["artifacts"] = artifacts;
    m["partial_failure"] = partial_failure;
    m["wall_s"] = wall_s;
    std::ofstream out(dir / "manifest.json");
    out << m.dump(2) << "\n";
}

struct PdeSeedResult {
    bool ok = false;
    std::string error;
    ErrorMetrics metrics{};
    int phase1_epochs = 0;
    int epochs = 0;
    double final_loss = 0.0;
    std::string stop_reason;
    double wall_s = 0.0;
};

PdeSeedResult run_pde_seed(const RunConfig& cfg, const PdeProblem& problem, int n_subnets,
                           const AdamConfig& adam, std::uint64_t seed, fs::path out_dir,
                           std::vector<std::string>* artifacts, const std::string& tag) {
    const auto t0 = std::chrono::steady_clock::now();
    PdeSeedResult res;

    FlmModel model = init_model(2, n_subnets, seed, cfg.bias_sigma);
    const CollocationSet colloc = sample_collocation(
        problem, problem.has_ic ? cfg.n_ic : 0, cfg.n_bc, cfg.n_pde, derive_seed(seed, kCollocStream));

    std::vector<double> params(model.param_count());
    model.pack(params);
    FlmModel work = model;
    const LossGradFn fn = [&](std::span<const double> p, std::span<double> g) {
        work.unpack(p);
        const PdeLoss pl = pde_loss(work, problem, colloc);
        std::copy(pl.grad.begin(), pl.grad.end(), g.begin());
        return pl.total;
    };

    TrainReport r1, r2;
    bool have_r2 = false;
    if (cfg.phase2) {
        auto [a, b] = train_two_phase(params, fn, adam, cfg.train, cfg.train2, cfg.reset_adam);
        r1 = std::move(a);
        r2 = std::move(b);
        have_r2 = true;
    } else {
        r1 = train(params, fn, adam, cfg.train);
    }
    model.unpack(params);

    res.phase1_epochs = r1.epochs_run;
    res.epochs = r1.epochs_run + (have_r2 ? r2.epochs_run : 0);
    const TrainReport& last = have_r2 ? r2 : r1;
    res.final_loss = last.final_loss;
    res.stop_reason = to_string(last.stop_reason);
    if (r1.stop_reason == StopReason::divergence ||
        (have_r2 && r2.stop_reason == StopReason::divergence)) {
        res.error = "training diverged";
        res.wall_s = elapsed_s(t0);
        return res;
    }

    res.metrics = evaluate_metrics(model, problem, cfg.grid_n);

    const std::string curve_name = "loss_curve_" + tag + ".csv";
    write_loss_curve(out_dir / curve_name, r1, have_r2 ? &r2 : nullptr);
    artifacts->push_back(curve_name);

    const std::string surface_name = "surface_" + tag + ".csv";
    {
        const bool spatial = !problem.has_ic; // poisson: both axes are space
        CsvFile csv(out_dir / surface_name,
                    spatial ? "x,y,u_exact,u_flm,abs_err" : "x,t,u_exact,u_flm,abs_err");
        const auto& dom = problem.domain;
        const int g = cfg.grid_n;
        for (int i = 0; i < g; ++i) {
            const double x = dom[0][0] + (dom[0][1] - dom[0][0]) * i / (g - 1);
            for (int k = 0; k < g; ++k) {
                const double y = dom[1][0] + (dom[1][1] - dom[1][0]) * k / (g - 1);
                const double ue = problem.exact(x, y);
                const double uf = eval(model, std::array{x, y});
                csv.row({fmt(x), fmt(y), fmt(ue), fmt(uf), fmt(std::abs(ue - uf))});
            }
        }
    }
    artifacts->push_back(surface_name);

    const std::string model_name = "model_" + tag + ".json";
    save_model(model, (out_dir / model_name).string());
    artifacts->push_back(model_name);

    res.ok = true;
    res.wall_s = elapsed_s(t0);
    return res;
}

int run_pde(const RunConfig& cfg, const fs::path& out_dir) {
    const auto t0 = std::chrono::steady_clock::now();
    const PdeProblem problem = make_problem(cfg.problem);
    std::vector<std::string> artifacts{"metrics.csv"};
    CsvFile metrics(out_dir / "metrics.csv",
                    "problem,n_subnets,lr,beta1,beta2,seed,mse,mae,max_err,epochs,wall_s");
    json rows = json::array();
    std::vector<double> mses, maes, maxes, epochs, phase1s;
    int failures = 0;

    for (const std::uint64_t seed : cfg.seeds) {
        const std::string tag = std::to_string(seed);
        PdeSeedResult r =
            run_pde_seed(cfg, problem, cfg.n_subnets, cfg.adam, seed, out_dir, &artifacts, tag);
        json row{{"seed", seed},
                 {"status", r.ok ? "ok" : "diverged"},
                 {"n_subnets", cfg.n_subnets},
                 {"lr", cfg.adam.lr},
                 {"beta1", cfg.adam.beta1},
                 {"beta2", cfg.adam.beta2},
                 {"phase1_epochs", r.phase1_epochs},
                 {"epochs", r.epochs},
                 {"final_loss", r.final_loss},
                 {"stop_reason", r.stop_reason},
                 {"wall_s", r.wall_s}};
        if (r.ok) {
            row["mse"] = r.metrics.mse;
            row["mae"] = r.metrics.mae;
            row["max_err"] = r.metrics.max_err;
            metrics.row({cfg.problem, std::to_string(cfg.n_subnets), fmt(cfg.adam.lr),
                         fmt(cfg.adam.beta1), fmt(cfg.adam.beta2), tag, fmt(r.metrics.mse),
                         fmt(r.metrics.mae), fmt(r.metrics.max_err), std::to_string(r.epochs),
                         fmt(r.wall_s)});
            mses.push_back(r.metrics.mse);
            maes.push_back(r.metrics.mae);
            maxes.push_back(r.metrics.max_err);
            epochs.push_back(r.epochs);
            phase1s.push_back(r.phase1_epochs);
        } else {
            row["error"] = r.error;
            ++failures;
        }
        rows.push_back(std::move(row));
    }

    json agg{{"mse", agg_json(mses)},
             {"mae", agg_json(maes)},
             {"max_err", agg_json(maxes)},
             {"epochs", agg_json(epochs)},
             {"phase1_epochs", agg_json(phase1s)}};
    write_manifest(out_dir, cfg, rows, agg, json::object(), artifacts, elapsed_s(t0),
                   failures > 0);
    return failures == static_cast<int>(cfg.seeds.size()) ? 3 : 0;
}

int run_sweep(const RunConfig& cfg, const fs::path& out_dir) {
    const auto t0 = std::chrono::steady_clock::now();
    const PdeProblem problem = make_problem(cfg.problem);
    std::vector<std::string> artifacts{"sweep.csv"};
    CsvFile sweep_csv(out_dir / "sweep.csv",
                      "problem,n_subnets,lr,beta1,beta2,seed,mse,mae,max_err,epochs,wall_s");
    json rows = json::array();
    json cells = json::array();
    int failures = 0, total = 0;

    struct Best {
        double mse = 0.0, epochs = 0.0;
        json cell;
        bool set = false;
    } best;

    for (const int n : cfg.sweep.n_subnets)
        for (const double lr : cfg.sweep.lr)
            for (const auto& betas : cfg.sweep.betas) {
                AdamConfig adam = cfg.adam;
                adam.lr = lr;
                adam.beta1 = betas[0];
                adam.beta2 = betas[1];
                std::vector<double> mses, maes, maxes, epochs;
                for (const std::uint64_t seed : cfg.seeds) {
                    ++total;
                    std::ostringstream tag;
                    tag << "n" << n << "_lr" << lr << "_b" << betas[0] << "_" << betas[1] << "_s"
                        << seed;
                    PdeSeedResult r = run_pde_seed(cfg, problem, n, adam, seed, out_dir,
                                                   &artifacts, tag.str());
                    json row{{"seed", seed},       {"status", r.ok ? "ok" : "diverged"},
                             {"n_subnets", n},     {"lr", lr},
                             {"beta1", betas[0]},  {"beta2", betas[1]},
                             {"phase1_epochs", r.phase1_epochs},
                             {"epochs", r.epochs}, {"final_loss", r.final_loss},
                             {"stop_reason", r.stop_reason},
                             {"wall_s", r.wall_s}};
                    if (r.ok) {
                        row["mse"] = r.metrics.mse;
                        row["mae"] = r.metrics.mae;
                        row["max_err"] = r.metrics.max_err;
                        sweep_csv.row({cfg.problem, std::to_string(n), fmt(lr), fmt(betas[0]),
                                       fmt(betas[1]), std::to_string(seed), fmt(r.metrics.mse),
                                       fmt(r.metrics.mae), fmt(r.metrics.max_err),
                                       std::to_string(r.epochs), fmt(r.wall_s)});
                        mses.push_back(r.metrics.mse);
                        maes.push_back(r.metrics.mae);
                        maxes.push_back(r.metrics.max_err);
                        epochs.push_back(r.epochs);
                    } else {
                        row["error"] = r.error;
                        ++failures;
                    }
                    rows.push_back(std::move(row));
                }
                json cell{{"n_subnets", n},         {"lr", lr},
                          {"beta1", betas[0]},      {"beta2", betas[1]},
                          {"mse", agg_json(mses)},  {"mae", agg_json(maes)},
                          {"max_err", agg_json(maxes)}, {"epochs", agg_json(epochs)}};
                if (!mses.empty()) {
                    const Agg mse_a = aggregate(mses), ep_a = aggregate(epochs);
                    if (!best.set || mse_a.mean < best.mse ||
                        (mse_a.mean == best.mse && ep_a.mean < best.epochs)) {
                        best = {mse_a.mean, ep_a.mean, cell, true};
                    }
                }
                cells.push_back(std::move(cell));
            }

    json extra{{"cells", cells}};
    if (best.set)
        extra["best_cell"] = best.cell;
    write_manifest(out_dir, cfg, rows, json::object(), extra, artifacts, elapsed_s(t0),
                   failures > 0);
    return failures == total ? 3 : 0;
}

// Rotates a disk-d point into the training disk's coordinates (the cyclic
// relabeling is applied d-1 times in reverse).
Vec3 into_training_disk(const Vec3& u, int disk_index) {
    Vec3 v = u;
    for (int i = 0; i < (3 - (disk_index - 1)) % 3; ++i)
        v = cyclic_perm(v);
    return v;
}

void write_trajectory(const fs::path& path, const Trajectory& traj) {
    CsvFile csv(path, "t,u1,u2,u3,gamma");
    for (std::size_t k = 0; k < traj.t.size(); ++k)
        csv.row({fmt(traj.t[k]), fmt(traj.u[k][0]), fmt(traj.u[k][1]), fmt(traj.u[k][2]),
                 fmt(traj.gamma[k])});
}

int run_ocp_fixed(const RunConfig& cfg, const fs::path& out_dir) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<std::string> artifacts{"objective_comparison.csv"};
    CsvFile cmp(out_dir / "objective_comparison.csv",
                "seed,u01,u02,u03,j_flm,j_pmp,pct_err,abs_err");
    json rows = json::array();
    std::vector<double> pct_errs, abs_errs;
    int failures = 0, total = 0;

    for (const std::uint64_t seed : cfg.seeds) {
        for (std::size_t i = 0; i < cfg.ics.size(); ++i) {
            ++total;
            const Vec3& u0 = cfg.ics[i];
            const auto tic = std::chrono::steady_clock::now();
            json row{{"seed", seed}, {"ic", u0}};
            try {
                const std::uint64_t net_seed = derive_seed(seed, kFixedIcStream + i);
                const OcpTrainResult res = train_ocp(OcpMode::fixed_ic, cfg.n_subnets, {u0},
                                                     cfg.ocp, cfg.adam, cfg.train, net_seed,
                                                     cfg.bias_sigma);
                if (res.report.stop_reason == StopReason::divergence)
                    throw DivergenceError("training diverged", 0);
                const Trajectory traj = rollout(res.nets, u0, cfg.ocp);
                const double j_flm = objective(traj, cfg.ocp);
                const double j_pmp = solve_bvp(u0, cfg.ocp, cfg.shooting).j_star;
                const double pct = std::abs(j_flm - j_pmp) / std::abs(j_pmp) * 100.0;

                const std::string tag = std::to_string(seed) + "_ic" + std::to_string(i + 1);
                write_trajectory(out_dir / ("trajectory_" + tag + ".csv"), traj);
                artifacts.push_back("trajectory_" + tag + ".csv");
                write_loss_curve(out_dir / ("loss_curve_" + tag + ".csv"), res.report, nullptr);
                artifacts.push_back("loss_curve_" + tag + ".csv");

                cmp.row({std::to_string(seed), fmt(u0[0]), fmt(u0[1]), fmt(u0[2]), fmt(j_flm),
                         fmt(j_pmp), fmt(pct), fmt(std::abs(j_flm - j_pmp))});
                row["status"] = "ok";
                row["j_flm"] = j_flm;
                row["j_pmp"] = j_pmp;
                row["pct_err"] = pct;
                row["abs_err"] = std::abs(j_flm - j_pmp);
                row["epochs"] = res.report.epochs_run;
                row["final_loss"] = res.report.final_loss;
                row["stop_reason"] = to_string(res.report.stop_reason);
                pct_errs.push_back(pct);
                abs_errs.push_back(std::abs(j_flm - j_pmp));
            } catch (const std::exception& e) {
                row["status"] = "failed";
                row["error"] = e.what();
                ++failures;
            }
            row["wall_s"] = elapsed_s(tic);
            rows.push_back(std::move(row));
        }
    }

    json agg{{"pct_err", agg_json(pct_errs)}, {"abs_err", agg_json(abs_errs)}};
    write_manifest(out_dir, cfg, rows, agg, json::object(), artifacts, elapsed_s(t0),
                   failures > 0);
    return failures == total ? 3 : 0;
}

int run_ocp_varying(const RunConfig& cfg, const fs::path& out_dir) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<std::string> artifacts;
    json rows = json::array();
    std::vector<double> mapes, maes;
    int failures = 0;

    // Training always happens on the canonical disk; disk_index only moves
    // the test draw, which is rotated back before querying the networks.
    const Vec3 train_center = cfg.disk_center;
    Vec3 test_center = cfg.disk_center;
    for (int i = 1; i < cfg.disk_index; ++i)
        test_center = cyclic_perm(test_center);

    for (const std::uint64_t seed : cfg.seeds) {
        const auto tic = std::chrono::steady_clock::now();
        json row{{"seed", seed}};
        try {
            const auto train_ics = sample_disk(train_center, cfg.disk_radius, cfg.disk_train,
                                               derive_seed(seed, kTrainDiskStream));
            const auto test_ics = sample_disk(test_center, cfg.disk_radius, cfg.disk_test,
                                              derive_seed(seed, kTestDiskStream));
            const OcpTrainResult res = train_ocp(OcpMode::varying_ic, cfg.n_subnets, train_ics,
                                                 cfg.ocp, cfg.adam, cfg.train, seed,
                                                 cfg.bias_sigma);
            if (res.report.stop_reason == StopReason::divergence)
                throw DivergenceError("training diverged", 0);

            const std::string tag = std::to_string(seed);
            write_loss_curve(out_dir / ("loss_curve_" + tag + ".csv"), res.report, nullptr);
            artifacts.push_back("loss_curve_" + tag + ".csv");

            CsvFile table(out_dir / ("jstar_table_" + tag + ".csv"),
                          "u01,u02,u03,j_flm,j_pmp,pct_err,abs_err");
            artifacts.push_back("jstar_table_" + tag + ".csv");
            std::vector<double> j_flm, j_pmp;
            for (const Vec3& u0 : test_ics) {
                const Vec3 q = into_training_disk(u0, cfg.disk_index);
                const double jf = objective(rollout(res.nets, q, cfg.ocp), cfg.ocp);
                const double jp = solve_bvp(u0, cfg.ocp, cfg.shooting).j_star;
                j_flm.push_back(jf);
                j_pmp.push_back(jp);
                table.row({fmt(u0[0]), fmt(u0[1]), fmt(u0[2]), fmt(jf), fmt(jp),
                           fmt(std::abs(jf - jp) / std::abs(jp) * 100.0),
                           fmt(std::abs(jf - jp))});
            }
            const double run_mape = mape(j_flm, j_pmp);
            double mae = 0.0;
            for (std::size_t k = 0; k < j_flm.size(); ++k)
                mae += std::abs(j_flm[k] - j_pmp[k]);
            mae /= static_cast<double>(j_flm.size());

            row["status"] = "ok";
            row["mape"] = run_mape;
            row["mae_j"] = mae;
            row["epochs"] = res.report.epochs_run;
            row["final_loss"] = res.report.final_loss;
            row["stop_reason"] = to_string(res.report.stop_reason);
            mapes.push_back(run_mape);
            maes.push_back(mae);
        } catch (const std::exception& e) {
            row["status"] = "failed";
            row["error"] = e.what();
            ++failures;
        }
        row["wall_s"] = elapsed_s(tic);
        rows.push_back(std::move(row));
    }

    json agg{{"mape", agg_json(mapes)}, {"mae_j", agg_json(maes)}};
    write_manifest(out_dir, cfg, rows, agg, json::object(), artifacts, elapsed_s(t0),
                   failures > 0);
    return failures == static_cast<int>(cfg.seeds.size()) ? 3 : 0;
}

int run_bvp(const RunConfig& cfg, const fs::path& out_dir) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<std::string> artifacts{"jstar_table.csv"};
    CsvFile table(out_dir / "jstar_table.csv",
                  "u01,u02,u03,j_star,residual_norm,newton_iters");
    json rows = json::array();
    int failures = 0;

    for (std::size_t i = 0; i < cfg.ics.size(); ++i) {
        const Vec3& u0 = cfg.ics[i];
        const auto tic = std::chrono::steady_clock::now();
        json row{{"ic", u0}};
        try {
            const PmpSolution sol = solve_bvp(u0, cfg.ocp, cfg.shooting);
            const std::string name = "trajectory_pmp_ic" + std::to_string(i + 1) + ".csv";
            CsvFile traj(out_dir / name, "t,u1,u2,u3,lambda1,lambda2,lambda3,gamma");
            for (std::size_t k = 0; k < sol.t.size(); ++k)
                traj.row({fmt(sol.t[k]), fmt(sol.u[k][0]), fmt(sol.u[k][1]), fmt(sol.u[k][2]),
                          fmt(sol.lambda[k][0]), fmt(sol.lambda[k][1]), fmt(sol.lambda[k][2]),
                          fmt(sol.gamma[k])});
            artifacts.push_back(name);
            table.row({fmt(u0[0]), fmt(u0[1]), fmt(u0[2]), fmt(sol.j_star),
                       fmt(sol.residual_norm), std::to_string(sol.newton_iters)});
            row["status"] = "ok";
            row["j_star"] = sol.j_star;
            row["residual_norm"] = sol.residual_norm;
            row["newton_iters"] = sol.newton_iters;
        } catch (const std::exception& e) {
            row["status"] = "failed";
            row["error"] = e.what();
            ++failures;
        }
        row["wall_s"] = elapsed_s(tic);
        rows.push_back(std::move(row));
    }

    write_manifest(out_dir, cfg, rows, json::object(), json::object(), artifacts, elapsed_s(t0),
                   failures > 0);
    return failures == static_cast<int>(cfg.ics.size()) ? 3 : 0;
}

int run_translate(const RunConfig& cfg, const fs::path& out_dir) {
    const auto t0 = std::chrono::steady_clock::now();
    FlmModel model;
    try {
        model = load_model(cfg.checkpoint);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("translate: ") + e.what());
    }
    const auto blocks = to_separable(model);

    std::ostringstream header;
    header << "subnet";
    for (int p = 1; p <= model.m; ++p)
        header << ",n_" << p;
    header << ",k,I_mask,a_k";
    CsvFile csv(out_dir / "coeffs.csv", header.str());

    json rows = json::array();
    for (std::size_t s = 0; s < blocks.size(); ++s) {
        const SeparableBlock& b = blocks[s];
        double linf = 0.0;
        for (std::size_t k = 1; k <= b.coeff.size(); ++k) {
            std::vector<std::string> cells{std::to_string(s)};
            for (double n : b.freq)
                cells.push_back(fmt(n));
            cells.push_back(std::to_string(k));
            cells.push_back(std::to_string(k - 1)); // bit p set <=> coordinate m-p in I_k
            cells.push_back(fmt(b.coeff[k - 1]));
            csv.row(cells);
            linf = std::max(linf, std::abs(b.coeff[k - 1]));
        }
        rows.push_back(json{{"subnet", s}, {"coeff_linf", linf}});
    }

    write_manifest(out_dir, cfg, rows, json::object(),
                   json{{"m", model.m}, {"n_subnets", model.subnet_count()}},
                   {"coeffs.csv"}, elapsed_s(t0), false);
    return 0;
}

} // namespace

int run(const RunConfig& cfg) {
    if (cfg.threads > 0)
        set_threads(cfg.threads);
    const fs::path out_dir(cfg.out_dir);
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec)
        throw ConfigError("cannot create output directory " + cfg.out_dir + ": " + ec.message());

    if (cfg.experiment == "pde")
        return run_pde(cfg, out_dir);
    if (cfg.experiment == "sweep")
        return run_sweep(cfg, out_dir);
    if (cfg.experiment == "ocp")
        return cfg.ocp_mode == "fixed" ? run_ocp_fixed(cfg, out_dir)
                                       : run_ocp_varying(cfg, out_dir);
    if (cfg.experiment == "bvp")
        return run_bvp(cfg, out_dir);
    if (cfg.experiment == "translate")
        return run_translate(cfg, out_dir);
    throw ConfigError("unknown experiment " + cfg.experiment);
}

} // namespace flm
