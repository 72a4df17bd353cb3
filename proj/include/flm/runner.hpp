#pragma once

#include <array>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "flm/ocp.hpp"
#include "flm/pmp.hpp"

namespace flm {

/// Hyperparameter grid for the sweep experiment. Every axis must be
/// non-empty when the experiment is "sweep".
struct SweepAxes {
    std::vector<int> n_subnets;
    std::vector<double> lr;
    std::vector<std::array<double, 2>> betas;
};

/// Normalized experiment description. load_config fills one of these from a
/// JSON file (unknown keys rejected), dump_config writes it back out in the
/// same schema, and run() executes it.
struct RunConfig {
    std::string experiment = "pde"; // pde | ocp | bvp | translate | sweep

    // pde / sweep
    std::string problem = "heat";
    int n_ic = 100;
    int n_bc = 200;
    int n_pde = 1000;
    int grid_n = 101;

    // model
    int n_subnets = 16;
    double bias_sigma = std::numbers::pi / 3.0;

    // optimizer / training loop
    AdamConfig adam{};
    TrainConfig train{};
    bool phase2 = false;
    TrainConfig train2{};
    bool reset_adam = false;

    // ocp
    std::string ocp_mode = "fixed"; // fixed | varying
    OcpConfig ocp{};
    std::vector<Vec3> ics; // fixed-IC solves and bvp targets
    Vec3 disk_center{0.2, 0.2, 0.6};
    double disk_radius = 0.15;
    int disk_train = 250;
    int disk_test = 100;
    int disk_index = 1; // 1..3: which rotated copy the test points live on

    // bvp
    ShootingOptions shooting{};

    // translate
    std::string checkpoint;

    SweepAxes sweep;

    std::vector<std::uint64_t> seeds{0};
    std::string out_dir = "out";
    int threads = 0; // 0 keeps the current setting
};

/// Parses and validates a JSON config. `origin` names the source in error
/// messages. Raises ConfigError on unparseable text, unknown keys, or values
/// out of range.
RunConfig config_from_json(const std::string& text, const std::string& origin);
RunConfig load_config(const std::string& path);

/// Normalized JSON echo; config_from_json(dump_config(c)) reproduces c.
std::string dump_config(const RunConfig& cfg);

/// Executes the experiment for every seed and writes manifest.json plus the
/// per-experiment CSVs into cfg.out_dir. Returns the process exit status:
/// 0 on success (individual seed failures are flagged in the manifest),
/// 3 when every seed failed.
int run(const RunConfig& cfg);

} // namespace flm
