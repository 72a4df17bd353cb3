#include <CLI11.hpp>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "flm/errors.hpp"
#include "flm/runner.hpp"

namespace {

// Seed lists come as "0..9" (inclusive range) or "0,3,7".
std::vector<std::uint64_t> parse_seeds(const std::string& text) {
    std::vector<std::uint64_t> seeds;
    try {
        if (const auto dots = text.find(".."); dots != std::string::npos) {
            const std::uint64_t lo = std::stoull(text.substr(0, dots));
            const std::uint64_t hi = std::stoull(text.substr(dots + 2));
            if (hi < lo)
                throw flm::ConfigError("--seeds: empty range " + text);
            for (std::uint64_t s = lo; s <= hi; ++s)
                seeds.push_back(s);
            return seeds;
        }
        std::size_t pos = 0;
        while (pos <= text.size()) {
            const std::size_t comma = std::min(text.find(',', pos), text.size());
            seeds.push_back(std::stoull(text.substr(pos, comma - pos)));
            pos = comma + 1;
        }
    } catch (const flm::ConfigError&) {
        throw;
    } catch (const std::exception&) {
        throw flm::ConfigError("--seeds: expected '0..9' or '0,3,7', got '" + text + "'");
    }
    return seeds;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fourier learning machine experiment runner"};
    app.require_subcommand(1);

    std::string config_path, out_dir, seeds_text, mode;
    int threads = 0;

    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON experiment config")->required();
        sub->add_option("--out", out_dir, "output directory (overrides config)");
        sub->add_option("--seeds", seeds_text, "seeds, '0..9' or '0,3,7' (overrides config)");
        sub->add_option("--threads", threads, "worker thread cap (overrides config)");
    };

    CLI::App* pde = app.add_subcommand("solve-pde", "train an FLM on a benchmark PDE");
    add_common(pde);
    CLI::App* ocp = app.add_subcommand("solve-ocp", "penalty-train RPS control networks");
    add_common(ocp);
    ocp->add_option("--mode", mode, "fixed or varying (overrides config)");
    CLI::App* bvp = app.add_subcommand("bvp-ref", "PMP shooting reference solves");
    add_common(bvp);
    CLI::App* xlate =
        app.add_subcommand("translate-coeffs", "expand a checkpoint into separable coefficients");
    add_common(xlate);
    CLI::App* sweep = app.add_subcommand("sweep", "hyperparameter grid over a PDE");
    add_common(sweep);

    CLI11_PARSE(app, argc, argv);

    try {
        flm::RunConfig cfg = flm::load_config(config_path);
        const std::string expected = app.got_subcommand(pde)     ? "pde"
                                     : app.got_subcommand(ocp)   ? "ocp"
                                     : app.got_subcommand(bvp)   ? "bvp"
                                     : app.got_subcommand(xlate) ? "translate"
                                                                 : "sweep";
        if (cfg.experiment != expected)
            throw flm::ConfigError("config " + config_path + ": experiment '" + cfg.experiment +
                                   "' does not match the subcommand (expected '" + expected +
                                   "')");
        if (!out_dir.empty())
            cfg.out_dir = out_dir;
        if (!seeds_text.empty())
            cfg.seeds = parse_seeds(seeds_text);
        if (threads > 0)
            cfg.threads = threads;
        if (!mode.empty()) {
            if (mode != "fixed" && mode != "varying")
                throw flm::ConfigError("--mode must be 'fixed' or 'varying'");
            cfg.ocp_mode = mode;
        }
        return flm::run(cfg);
    } catch (const flm::ConfigError& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
