#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "flm/errors.hpp"
#include "flm/fourier_xlate.hpp"
#include "flm/model.hpp"
#include "flm/pde.hpp"
#include "flm/pmp.hpp"
#include "flm/rng.hpp"
#include "flm/runner.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::path("runner_scratch") / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

json read_json(const fs::path& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    return json::parse(in);
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::size_t pos = 0;
        while (pos <= line.size()) {
            const std::size_t comma = std::min(line.find(',', pos), line.size());
            cells.push_back(line.substr(pos, comma - pos));
            pos = comma + 1;
        }
        rows.push_back(std::move(cells));
    }
    return rows;
}

// Tiny heat setup that trains in well under a second.
std::string tiny_pde_config(const std::string& out_dir) {
    json j{{"experiment", "pde"},
           {"problem", "heat"},
           {"model", {{"n_subnets", 2}}},
           {"adam", {{"lr", 0.01}, {"betas", {0.95, 0.97}}}},
           {"train", {{"max_epochs", 120}, {"loss_tol", 0.0}, {"log_every", 50}}},
           {"phase2", false},
           {"collocation", {{"n_ic", 10}, {"n_bc", 12}, {"n_pde", 30}}},
           {"grid_n", 11},
           {"seeds", {0, 1}},
           {"out_dir", out_dir}};
    return j.dump();
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(FLM_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    REQUIRE(WIFEXITED(rc));
    return WEXITSTATUS(rc);
}

} // namespace

TEST_CASE("config validation catches the documented mistakes") {
    using flm::config_from_json;
    CHECK_THROWS_WITH_AS(config_from_json("{ nope", "t"), doctest::Contains("unparseable"),
                         flm::ConfigError);
    CHECK_THROWS_WITH_AS(config_from_json(R"({"experiment":"magic"})", "t"),
                         doctest::Contains("pde, ocp, bvp, translate or sweep"),
                         flm::ConfigError);
    CHECK_THROWS_WITH_AS(config_from_json(R"({"problem":"advection"})", "t"),
                         doctest::Contains("heat, poisson or gbs"), flm::ConfigError);
    CHECK_THROWS_WITH_AS(config_from_json(R"({"probelm":"heat"})", "t"),
                         doctest::Contains("unknown key 'probelm'"), flm::ConfigError);
    CHECK_THROWS_WITH_AS(config_from_json(R"({"experiment":"sweep","sweep":{"lr":[0.001]}})",
                                          "t"),
                         doctest::Contains("non-empty"), flm::ConfigError);
    CHECK_THROWS_WITH_AS(config_from_json(R"({"experiment":"translate"})", "t"),
                         doctest::Contains("checkpoint"), flm::ConfigError);
    CHECK_THROWS_AS(config_from_json(R"({"seeds":[]})", "t"), flm::ConfigError);
    CHECK_THROWS_AS(config_from_json(R"({"adam":{"lr":-1}})", "t"), flm::ConfigError);
    CHECK_THROWS_AS(config_from_json(R"({"experiment":"ocp","ics":[[0.5,0.5,0.5]]})", "t"),
                    flm::ConfigError);
}

TEST_CASE("experiment defaults follow the kind") {
    const flm::RunConfig pde = flm::config_from_json(R"({"experiment":"pde"})", "t");
    CHECK(pde.train.max_epochs == 10000);
    CHECK(pde.train.loss_tol == 1e-4);
    CHECK(pde.phase2);
    CHECK(pde.train2.max_epochs == 30000);
    CHECK(pde.n_subnets == 16);

    const flm::RunConfig ocp = flm::config_from_json(R"({"experiment":"ocp"})", "t");
    CHECK(ocp.train.max_epochs == 30000);
    CHECK(ocp.train.loss_tol == 1e-6);
    CHECK(ocp.adam.beta1 == 0.99);
    CHECK(ocp.n_subnets == 5);
    REQUIRE(ocp.ics.size() == 3); // the canonical IC and its two relabelings
    CHECK(ocp.ics[1] == flm::cyclic_perm(ocp.ics[0]));
    CHECK(ocp.ics[2] == flm::cyclic_perm(ocp.ics[1]));
}

TEST_CASE("dump and parse round-trip") {
    const std::string text = tiny_pde_config("x");
    const flm::RunConfig cfg = flm::config_from_json(text, "t");
    const std::string echo = flm::dump_config(cfg);
    const flm::RunConfig cfg2 = flm::config_from_json(echo, "echo");
    CHECK(flm::dump_config(cfg2) == echo);

    const flm::RunConfig ocp = flm::config_from_json(
        R"({"experiment":"ocp","mode":"varying","disk":{"radius":0.1}})", "t");
    CHECK(flm::dump_config(flm::config_from_json(flm::dump_config(ocp), "echo")) ==
          flm::dump_config(ocp));
}

TEST_CASE("pde runs are reproducible and self-consistent") {
    const fs::path dir_a = scratch("pde_a");
    const fs::path dir_b = scratch("pde_b");
    const flm::RunConfig cfg_a = flm::config_from_json(tiny_pde_config(dir_a.string()), "t");
    REQUIRE(flm::run(cfg_a) == 0);
    const json man_a = read_json(dir_a / "manifest.json");

    SUBCASE("the echoed config reproduces every metric bit-exactly") {
        flm::RunConfig cfg_b = flm::config_from_json(man_a["config"].dump(), "echo");
        cfg_b.out_dir = dir_b.string();
        REQUIRE(flm::run(cfg_b) == 0);
        const json man_b = read_json(dir_b / "manifest.json");
        REQUIRE(man_a["rows"].size() == man_b["rows"].size());
        for (std::size_t i = 0; i < man_a["rows"].size(); ++i) {
            for (const char* key : {"mse", "mae", "max_err", "final_loss"})
                CHECK(man_a["rows"][i][key].get<double>() ==
                      man_b["rows"][i][key].get<double>());
            CHECK(man_a["rows"][i]["epochs"] == man_b["rows"][i]["epochs"]);
        }
    }
    SUBCASE("aggregates recompute from the rows") {
        for (const char* key : {"mse", "mae", "max_err"}) {
            std::vector<double> xs;
            for (const json& row : man_a["rows"])
                xs.push_back(row[key].get<double>());
            double mean = 0.0;
            for (double x : xs)
                mean += x;
            mean /= static_cast<double>(xs.size());
            double var = 0.0;
            for (double x : xs)
                var += (x - mean) * (x - mean);
            const double sd = std::sqrt(var / static_cast<double>(xs.size() - 1));
            CHECK(testutil::close(man_a["aggregate"][key]["mean"].get<double>(), mean, 1e-12,
                                  1e-300));
            CHECK(testutil::close(man_a["aggregate"][key]["sd"].get<double>(), sd, 1e-12,
                                  1e-300));
        }
    }
    SUBCASE("artifacts have the documented shape") {
        const auto metrics = read_csv(dir_a / "metrics.csv");
        REQUIRE(metrics.size() == 3); // header + two seeds
        CHECK(metrics[0][0] == "problem");
        CHECK(metrics[1][0] == "heat");
        CHECK(metrics[1].size() == 11);
        CHECK(std::stod(metrics[1][6]) > 0.0); // mse

        const auto curve = read_csv(dir_a / "loss_curve_0.csv");
        REQUIRE(curve.size() >= 3);
        CHECK(curve[0] == std::vector<std::string>{"epoch", "loss"});
        CHECK(curve[1][0] == "1");
        CHECK(curve.back()[0] == "120");

        const auto surface = read_csv(dir_a / "surface_0.csv");
        CHECK(surface.size() == 1 + 11 * 11);
        CHECK(surface[0][1] == "t");

        // The saved checkpoint evaluates like the trained model scored.
        const flm::FlmModel model = flm::load_model((dir_a / "model_0.json").string());
        const flm::ErrorMetrics m =
            flm::evaluate_metrics(model, flm::make_problem("heat"), 11);
        CHECK(m.mse == man_a["rows"][0]["mse"].get<double>());

        for (const json& name : man_a["artifacts"])
            CHECK(fs::exists(dir_a / name.get<std::string>()));
    }
}

TEST_CASE("sweep enumerates the grid and picks the best cell") {
    const fs::path dir = scratch("sweep");
    json j{{"experiment", "sweep"},
           {"problem", "heat"},
           {"adam", {{"betas", {0.95, 0.97}}}},
           {"train", {{"max_epochs", 60}, {"loss_tol", 0.0}, {"log_every", 30}}},
           {"collocation", {{"n_ic", 8}, {"n_bc", 8}, {"n_pde", 20}}},
           {"grid_n", 6},
           {"sweep",
            {{"n_subnets", {1, 2}}, {"lr", {0.01}}, {"betas", {{0.95, 0.97}}}}},
           {"seeds", {0, 1}},
           {"out_dir", dir.string()}};
    const flm::RunConfig cfg = flm::config_from_json(j.dump(), "t");
    CHECK_FALSE(cfg.phase2); // sweep defaults to phase 1 only
    REQUIRE(flm::run(cfg) == 0);

    const json man = read_json(dir / "manifest.json");
    CHECK(man["rows"].size() == 4);
    REQUIRE(man["cells"].size() == 2);
    const auto sweep_rows = read_csv(dir / "sweep.csv");
    CHECK(sweep_rows.size() == 5);

    const json& best = man["best_cell"];
    double best_seen = std::numeric_limits<double>::infinity();
    for (const json& cell : man["cells"])
        best_seen = std::min(best_seen, cell["mse"]["mean"].get<double>());
    CHECK(best["mse"]["mean"].get<double>() == best_seen);
}

TEST_CASE("translate writes one row per basis function") {
    const fs::path dir = scratch("translate");
    flm::Rng rng(3);
    const flm::FlmModel model = testutil::random_model(2, 3, rng);
    const std::string ckpt = (dir / "model.json").string();
    flm::save_model(model, ckpt);

    json j{{"experiment", "translate"}, {"checkpoint", ckpt}, {"out_dir", dir.string()}};
    REQUIRE(flm::run(flm::config_from_json(j.dump(), "t")) == 0);

    const auto rows = read_csv(dir / "coeffs.csv");
    REQUIRE(rows.size() == 1 + 3 * 4);
    CHECK(rows[0] ==
          std::vector<std::string>{"subnet", "n_1", "n_2", "k", "I_mask", "a_k"});
    const auto blocks = flm::to_separable(model);
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const int s = std::stoi(rows[r][0]);
        const int k = std::stoi(rows[r][3]);
        CHECK(std::stoi(rows[r][4]) == k - 1);
        // 17 significant digits round-trip exactly.
        CHECK(std::stod(rows[r][5]) == blocks[s].coeff[k - 1]);
        CHECK(std::stod(rows[r][1]) == blocks[s].freq[0]);
    }
}

TEST_CASE("bvp experiment records the reference solves") {
    const fs::path dir = scratch("bvp");
    json j{{"experiment", "bvp"},
           {"ics", {{0.2, 0.2, 0.6}}},
           {"shooting", {{"rk4_steps", 500}}},
           {"out_dir", dir.string()}};
    REQUIRE(flm::run(flm::config_from_json(j.dump(), "t")) == 0);
    const json man = read_json(dir / "manifest.json");
    REQUIRE(man["rows"].size() == 1);
    CHECK(man["rows"][0]["status"] == "ok");
    CHECK(man["rows"][0]["residual_norm"].get<double>() <= 1e-8);

    const flm::PmpSolution direct = flm::solve_bvp({0.2, 0.2, 0.6}, flm::OcpConfig{},
                                                   flm::ShootingOptions{.rk4_steps = 500});
    CHECK(man["rows"][0]["j_star"].get<double>() == direct.j_star);
    CHECK(read_csv(dir / "trajectory_pmp_ic1.csv").size() == 502);
}

TEST_CASE("fixed-ic ocp experiment compares against the reference") {
    const fs::path dir = scratch("ocp_fixed");
    json j{{"experiment", "ocp"},
           {"mode", "fixed"},
           {"model", {{"n_subnets", 2}}},
           {"adam", {{"lr", 0.01}}},
           {"train", {{"max_epochs", 250}, {"loss_tol", 0.0}, {"log_every", 100}}},
           {"ocp", {{"quad_n", 41}}},
           {"ics", {{0.2, 0.2, 0.6}}},
           {"shooting", {{"rk4_steps", 500}}},
           {"seeds", {0}},
           {"out_dir", dir.string()}};
    REQUIRE(flm::run(flm::config_from_json(j.dump(), "t")) == 0);
    const json man = read_json(dir / "manifest.json");
    REQUIRE(man["rows"].size() == 1);
    CHECK(man["rows"][0]["status"] == "ok");
    CHECK(man["rows"][0]["j_pmp"].get<double>() > 0.0);
    CHECK(man["rows"][0]["epochs"] == 250);
    CHECK(fs::exists(dir / "trajectory_0_ic1.csv"));
    CHECK(fs::exists(dir / "loss_curve_0_ic1.csv"));
    const auto cmp = read_csv(dir / "objective_comparison.csv");
    REQUIRE(cmp.size() == 2);
    CHECK(std::stod(cmp[1][4]) == man["rows"][0]["j_flm"].get<double>());
}

TEST_CASE("varying-ic ocp experiment reports mape over fresh test points") {
    const fs::path dir = scratch("ocp_varying");
    json j{{"experiment", "ocp"},
           {"mode", "varying"},
           {"model", {{"n_subnets", 2}}},
           {"adam", {{"lr", 0.005}, {"betas", {0.95, 0.97}}}},
           {"train", {{"max_epochs", 150}, {"loss_tol", 0.0}, {"log_every", 50}}},
           {"ocp", {{"quad_n", 31}}},
           {"disk", {{"train_count", 6}, {"test_count", 4}}},
           {"shooting", {{"rk4_steps", 500}}},
           {"seeds", {0}},
           {"out_dir", dir.string()}};
    REQUIRE(flm::run(flm::config_from_json(j.dump(), "t")) == 0);
    const json man = read_json(dir / "manifest.json");
    REQUIRE(man["rows"].size() == 1);
    CHECK(man["rows"][0]["status"] == "ok");
    CHECK(man["rows"][0]["mape"].get<double>() > 0.0);
    CHECK(man["rows"][0]["mae_j"].get<double>() > 0.0);
    CHECK(read_csv(dir / "jstar_table_0.csv").size() == 5);
    CHECK(man["aggregate"]["mape"]["mean"].get<double>() ==
          man["rows"][0]["mape"].get<double>());
}

TEST_CASE("cli maps config problems to exit codes") {
    const fs::path dir = scratch("cli");
    const fs::path good = dir / "good.json";
    {
        std::ofstream out(good);
        out << tiny_pde_config((dir / "out").string());
    }
    const fs::path bad = dir / "bad.json";
    {
        std::ofstream out(bad);
        out << R"({"experiment":"pde","problem":"advection"})";
    }

    CHECK(run_cli("solve-pde --config " + bad.string()) == 2);
    CHECK(run_cli("solve-pde --config " + (dir / "missing.json").string()) == 2);
    CHECK(run_cli("bvp-ref --config " + good.string()) == 2); // subcommand mismatch
    CHECK(run_cli("solve-pde --config " + good.string() + " --seeds 0..2 --out " +
                  (dir / "out2").string()) == 0);
    const json man = read_json(dir / "out2" / "manifest.json");
    CHECK(man["rows"].size() == 3);
    CHECK(fs::exists(dir / "out2" / "loss_curve_2.csv"));
    CHECK_FALSE(fs::exists(dir / "out"));
}
