// Acceptance runner: one PASS/FAIL line per criterion. A criterion fails when
// its check fails or when it overruns its time budget.

#include <chrono>
#include <cstdio>
#include <exception>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "criteria.hpp"

namespace acceptance {

const char* cli_path() { return THERMOTWIN_CLI; }
const char* smoke_config_path() { return THERMOTWIN_SMOKE_CONFIG; }
const char* scratch_dir() { return THERMOTWIN_ACCEPTANCE_TMP; }

}  // namespace acceptance

namespace {

struct Criterion {
    int id;
    const char* name;
    double budget_s;
    acceptance::Outcome (*run)();
};

const std::vector<Criterion> criteria = {
    {1, "planted-system recovery", 10.0, acceptance::ac1_planted_recovery},
    {2, "Mahalanobis correctness", 1.0, acceptance::ac2_mahalanobis},
    {3, "MvG band calibration", 120.0, acceptance::ac3_mvg_calibration},
    {4, "gradient checks", 30.0, acceptance::ac4_gradients},
    {5, "simulator physics", 60.0, acceptance::ac5_simulator_physics},
    {6, "surrogate ordering GRU < FNN < SINDyC on Q_GHX", 600.0, acceptance::ac6_surrogate_ordering},
    {7, "AL data efficiency", 1800.0, acceptance::ac7_al_efficiency},
    {8, "deterministic SINDyC AL null result", 600.0, acceptance::ac8_sindyc_null_result},
    {9, "determinism replay of the smoke config", 1200.0, acceptance::ac9_determinism_replay},
    {10, "end-to-end smoke compare", 600.0, acceptance::ac10_smoke},
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance criteria"};
    int only = 0;
    app.add_option("--criterion", only, "run a single criterion (1-10); default all")->check(CLI::Range(1, 10));
    CLI11_PARSE(app, argc, argv);
    spdlog::set_level(spdlog::level::warn);

    int failed = 0;
    for (const auto& c : criteria) {
        if (only != 0 && c.id != only) continue;
        const auto t0 = std::chrono::steady_clock::now();
        acceptance::Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = s <= c.budget_s;
        const bool pass = o.pass && in_time;
        std::printf("AC%d %s %s: %s [%.1f s of %.0f s%s]\n", c.id, pass ? "PASS" : "FAIL", c.name, o.detail.c_str(), s,
                    c.budget_s, in_time ? "" : ", over budget");
        std::fflush(stdout);
        if (!pass) ++failed;
    }
    return failed == 0 ? 0 : 1;
}
