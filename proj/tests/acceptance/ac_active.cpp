// AC7 and AC8: paired active-learning comparisons.

#include <algorithm>
#include <cmath>
#include <sstream>

#include <spdlog/fmt/fmt.h>

#include "criteria.hpp"
#include "thermotwin/al/loop.hpp"
#include "thermotwin/harness/experiment.hpp"
#include "thermotwin/mvg/mvg.hpp"
#include "thermotwin/sim/schedule.hpp"
#include "thermotwin/sim/simulator.hpp"
#include "two_regime.hpp"

using namespace thermotwin;

namespace acceptance {

namespace {

std::vector<const Trajectory*> ptrs(const std::vector<Trajectory>& v) {
    std::vector<const Trajectory*> out;
    for (const auto& t : v) out.push_back(&t);
    return out;
}

struct DeskPool {
    std::vector<Trajectory> pool;
    std::vector<Trajectory> eval;
    Trajectory experiment;
};

// 80 pool and 5 eval trajectories plus a pseudo-experiment, all from one
// schedule stream so nothing repeats.
DeskPool desk_pool(std::uint64_t seed) {
    const TimeGrid grid = TimeGrid::desk_scale();
    const GeneratorConfig g;
    RngStream sched(seed, "schedules");
    const auto schedules = generate_schedules(86, g.bounds, grid, g.stagger_gap, sched);
    DeskPool p;
    for (int i = 0; i < 85; ++i)
        (i < 80 ? p.pool : p.eval)
            .push_back(simulate(schedules[static_cast<std::size_t>(i)], g.initial_bed(), g.bed, g.ghx, grid, g.plant, i));
    RngStream noise(seed, "experiment/noise");
    p.experiment = make_pseudo_experiment(g, Perturbation{}, NoiseSpec{}, schedules.back(), grid, noise, 85).denoised;
    return p;
}

// Selected count at which `h` first reaches `tau`; unreached counts as one
// trajectory beyond the arm's final count.
double needed(const AlHistory& h, double tau) {
    const auto n = h.selected_to_reach(tau);
    return n ? static_cast<double>(*n) : static_cast<double>(h.records.back().n_selected + 1);
}

}  // namespace

Outcome ac7_al_efficiency() {
    std::ostringstream detail;

    // (a) MvG-SINDyC: Mahalanobis queries toward the experiment model
    int wins_mvg = 0;
    std::vector<double> ratios;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const DeskPool p = desk_pool(100 + seed);
        RngStream es(seed, "ac7/ensemble");
        const CoefficientEnsemble ens = build_ensemble(ptrs(p.pool), 120, 4, StlsqConfig::ghx_table1(), es);
        AlData data{ptrs(p.pool), ptrs(p.eval), &p.experiment, &ens,
                    fit_sindyc(std::vector<const Trajectory*>{&p.experiment}, StlsqConfig::ghx_table1()).flatten()};
        AlConfig cfg = AlConfig::defaults(Family::mvg);
        cfg.target = AlTarget::experiment;
        cfg.init_size = 12;
        cfg.batch = 6;
        cfg.max_rounds = 18;
        cfg.early_stop = false;
        const ArmPair pair = run_pair(cfg, data, RngStream(seed, "ac7/mvg"));
        const auto reach = pair.al.selected_to_reach(pair.random.final_score());
        const double n_rnd = static_cast<double>(pair.random.records.back().n_selected);
        const bool win = reach && static_cast<double>(*reach) <= 0.5 * n_rnd;
        if (reach) ratios.push_back(static_cast<double>(*reach) / n_rnd);
        wins_mvg += win ? 1 : 0;
    }
    std::sort(ratios.begin(), ratios.end());
    detail << fmt::format("(a) MvG AL matched the random arm's final score with <= 50% of its models in {}/10 seeds",
                          wins_mvg);
    if (!ratios.empty()) detail << fmt::format(", median ratio {:.2f}", ratios[ratios.size() / 2]);

    // (b) two-regime pool, error-based queries for both neural families
    bool ok_b = true;
    for (Family f : {Family::fnn, Family::gru}) {
        int wins = 0;
        std::vector<double> r;
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            const auto tr = two_regime::make_pool(700 + seed, 40, 2, 3, 100);
            AlData data{ptrs(tr.pool), ptrs(tr.eval), nullptr, nullptr, {}};
            AlConfig cfg = AlConfig::defaults(f);
            cfg.init_size = 1;
            cfg.batch = 1;
            cfg.max_rounds = 15;
            cfg.train.widths = {16, 16};
            cfg.train.epochs = 200;  // one 100-sample trajectory is a single batch
            cfg.early_stop = false;
            if (f == Family::gru) {
                cfg.train.widths = {16};
                cfg.train.lookback = 10;
                cfg.train.epochs = 30;
                cfg.train.batch_size = 64;
                cfg.train.window_stride = 2;
            }
            const ArmPair pair = run_pair(cfg, data, RngStream(seed, "ac7/two-regime"));
            const double tau = 0.5 * pair.al.score(pair.al.records.front());
            const auto n_al = pair.al.selected_to_reach(tau);
            const double n_rnd = needed(pair.random, tau);
            if (n_al) r.push_back(static_cast<double>(*n_al) / n_rnd);
            wins += n_al && static_cast<double>(*n_al) <= 0.5 * n_rnd ? 1 : 0;
        }
        std::sort(r.begin(), r.end());
        ok_b &= wins >= 8;
        detail << fmt::format("; (b) {} reached the threshold with <= 50% of random's trajectories in {}/10 seeds",
                              to_string(f), wins);
        if (!r.empty()) detail << fmt::format(", median ratio {:.2f}", r[r.size() / 2]);
    }
    return {wins_mvg >= 8 && ok_b, detail.str()};
}

Outcome ac8_sindyc_null_result() {
    std::ostringstream detail;
    double sum_al = 0.0, sum_rnd = 0.0, worst = 0.0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const DeskPool p = desk_pool(300 + seed);
        AlData data{ptrs(p.pool), ptrs(p.eval), &p.experiment, nullptr, {}};
        AlConfig cfg = AlConfig::defaults(Family::sindyc);
        cfg.max_rounds = 8;
        cfg.early_stop = false;
        const ArmPair pair = run_pair(cfg, data, RngStream(seed, "ac8"));
        const double a = pair.al.final_score(), r = pair.random.final_score();
        sum_al += a;
        sum_rnd += r;
        worst = std::max(worst, std::abs(a - r) / r);
        detail << fmt::format("{}seed {}: AL {:.4f} random {:.4f}", seed == 0 ? "" : "; ", seed, a, r);
    }
    const double rel = std::abs(sum_al - sum_rnd) / sum_rnd;
    return {rel < 0.10, fmt::format("mean final score differs by {:.1f}% (< 10%), largest single-seed gap {:.1f}%; {}",
                                    100.0 * rel, 100.0 * worst, detail.str())};
}

}  // namespace acceptance
