#include "thermotwin/harness/report.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <set>
#include <sstream>

#include <spdlog/fmt/fmt.h>
#include <spdlog/spdlog.h>

#include "thermotwin/core/csv_io.hpp"
#include "thermotwin/core/errors.hpp"
#include "thermotwin/core/signal.hpp"

namespace thermotwin {

namespace {

constexpr double nan = std::numeric_limits<double>::quiet_NaN();

double column_rmse(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& truth, Eigen::Index c) {
    const Eigen::VectorXd p = pred.col(c);
    const Eigen::VectorXd t = truth.col(c);
    return rmse(std::span<const double>(p.data(), static_cast<std::size_t>(p.size())),
                std::span<const double>(t.data(), static_cast<std::size_t>(t.size())));
}

void score(const Surrogate& s, Family f, const std::string& set, const std::vector<const Trajectory*>& trajs,
           const std::string& artifact, std::vector<RmseRow>& out) {
    if (trajs.empty()) return;
    const auto preds = predict_guarded(s, trajs);
    for (std::size_t i = 0; i < trajs.size(); ++i) {
        RmseRow r{std::string(to_string(f)), set, trajs[i]->id, nan, nan, artifact};
        if (preds[i]) {
            const Eigen::MatrixXd truth = trajs[i]->state_matrix(StateSet::ghx);
            r.rmse_m = column_rmse(*preds[i], truth, 0);
            r.rmse_q = column_rmse(*preds[i], truth, 1);
        }
        out.push_back(r);
    }
}

std::string cell(double v) { return std::isfinite(v) ? fmt::format("{:.4g}", v) : std::string("n/a"); }

std::string csv_num(double v) { return std::isnan(v) ? std::string("nan") : format_double(v); }

}  // namespace

double AlCurves::score(const AlRecord& r) const {
    if (target == AlTarget::eval) return r.rmse_m / scales(0) + r.rmse_q / scales(1);
    return r.rmse_exp_m / scales(0) + r.rmse_exp_q / scales(1);
}

std::optional<std::size_t> AlCurves::al_to_reach_random_final() const {
    if (random.empty()) return std::nullopt;
    const double goal = score(random.back());
    for (const auto& r : al)
        if (score(r) <= goal) return r.n_selected;
    return std::nullopt;
}

Report evaluate_all(const ModelSet& models, const std::vector<const Trajectory*>& eval,
                    const Trajectory* experiment, const EvalOptions& opt) {
    Report rep;
    const std::vector<const Trajectory*> exp_set =
        experiment ? std::vector<const Trajectory*>{experiment} : std::vector<const Trajectory*>{};
    const auto artifact = [&](Family f) {
        const auto it = models.artifact.find(f);
        return it == models.artifact.end() ? std::string() : it->second;
    };

    std::vector<std::pair<Family, std::unique_ptr<Surrogate>>> surrogates;
    if (models.mvg) surrogates.emplace_back(Family::mvg, std::make_unique<LinearSurrogate>(models.mvg->model.mean_model(), opt.rollout));
    if (models.sindyc) surrogates.emplace_back(Family::sindyc, std::make_unique<LinearSurrogate>(models.sindyc->model, opt.rollout));
    if (models.fnn) surrogates.emplace_back(Family::fnn, std::make_unique<NeuralSurrogate>(*models.fnn));
    if (models.gru) surrogates.emplace_back(Family::gru, std::make_unique<NeuralSurrogate>(*models.gru));
    require(!surrogates.empty(), ErrorKind::manifest, "evaluate_all: no models");

    for (const auto& [f, s] : surrogates) {
        score(*s, f, "eval", eval, artifact(f), rep.rmse);
        score(*s, f, "experiment", exp_set, artifact(f), rep.rmse);
        score(*s, f, "train", opt.train, artifact(f), rep.rmse);
    }

    if (models.mvg) {
        const auto band_for = [&](const std::string& set, const Trajectory& t) {
            RngStream stream(opt.band_seed, "band/" + set + "/" + std::to_string(t.id));
            const Eigen::MatrixXd x = t.state_matrix(StateSet::ghx);
            CoverageRow row{set, t.id, nan, nan, opt.band_samples, 0, artifact(Family::mvg)};
            try {
                const PredictiveBand b = predictive_band(models.mvg->model, x.row(0).transpose(), t.control_matrix(),
                                                         t.grid, opt.band_samples, stream, opt.rollout);
                const Eigen::VectorXd c = coverage(b, x);
                row.coverage_m = c(0);
                row.coverage_q = c(1);
                row.n_diverged = b.n_diverged;
            } catch (const Error& e) {
                spdlog::warn("coverage on {} trajectory {} failed: {}", set, t.id, e.what());
            }
            rep.coverage.push_back(row);
        };
        for (const auto* t : eval) band_for("eval", *t);
        if (experiment) band_for("experiment", *experiment);
    }
    return rep;
}

void write_report(const std::filesystem::path& dir, const Report& rep) {
    std::filesystem::create_directories(dir);
    const std::string& id = rep.run_id;

    std::ostringstream rm;
    rm << "run_id,family,set,trajectory,rmse_m_ghx,rmse_q_ghx,artifact\n";
    for (const auto& r : rep.rmse)
        rm << id << ',' << r.family << ',' << r.set << ',' << r.trajectory << ',' << csv_num(r.rmse_m) << ','
           << csv_num(r.rmse_q) << ',' << r.artifact << '\n';
    write_text_file(dir / "rmse.csv", rm.str());

    std::ostringstream cv;
    cv << "run_id,set,trajectory,coverage_m_ghx,coverage_q_ghx,n_samples,n_diverged,artifact\n";
    for (const auto& c : rep.coverage)
        cv << id << ',' << c.set << ',' << c.trajectory << ',' << csv_num(c.coverage_m) << ','
           << csv_num(c.coverage_q) << ',' << c.n_samples << ',' << c.n_diverged << ',' << c.artifact << '\n';
    write_text_file(dir / "coverage.csv", cv.str());

    std::ostringstream cu;
    cu << "run_id,family,arm,round,n_selected,rmse_m,rmse_q,rmse_exp_m,rmse_exp_q,score,artifact\n";
    for (const auto& c : rep.curves) {
        const auto rows = [&](const std::vector<AlRecord>& recs, const char* arm, const std::string& art) {
            for (const auto& r : recs)
                cu << id << ',' << to_string(c.family) << ',' << arm << ',' << r.round << ',' << r.n_selected << ','
                   << csv_num(r.rmse_m) << ',' << csv_num(r.rmse_q) << ',' << csv_num(r.rmse_exp_m) << ','
                   << csv_num(r.rmse_exp_q) << ',' << csv_num(c.score(r)) << ',' << art << '\n';
        };
        rows(c.al, "al", c.artifact_al);
        rows(c.random, "random", c.artifact_random);
    }
    write_text_file(dir / "curves.csv", cu.str());

    std::ostringstream su;
    su << "run_id,family,target,final_score_al,final_score_random,selected_al,selected_random,"
          "al_selected_to_reach_random_final,ratio,artifact\n";
    for (const auto& c : rep.curves) {
        if (c.al.empty() || c.random.empty()) continue;
        const auto reach = c.al_to_reach_random_final();
        const double ratio = reach ? static_cast<double>(*reach) / static_cast<double>(c.random.back().n_selected) : nan;
        su << id << ',' << to_string(c.family) << ',' << to_string(c.target) << ',' << csv_num(c.score(c.al.back()))
           << ',' << csv_num(c.score(c.random.back())) << ',' << c.al.back().n_selected << ','
           << c.random.back().n_selected << ',' << (reach ? std::to_string(*reach) : std::string("none")) << ','
           << csv_num(ratio) << ',' << c.artifact_al << '\n';
    }
    write_text_file(dir / "al_summary.csv", su.str());

    std::ostringstream rt;
    rt << "run_id,family,arm,total_wall_s\n";
    for (const auto& r : rep.runtime) rt << id << ',' << r.family << ',' << r.arm << ',' << format_double(r.total_wall_s) << '\n';
    write_text_file(dir / "runtime.csv", rt.str());

    // Markdown: one RMSE table per channel, columns = evaluated trajectories.
    std::ostringstream md;
    md << "# Run report\n\n";
    md << "Run `" << id << "`, seed " << rep.seed << ".\n\n";
    std::vector<std::pair<std::string, int>> columns;
    std::vector<std::string> families;
    for (const auto& r : rep.rmse) {
        if (r.set == "train") continue;
        const std::pair<std::string, int> col{r.set, r.trajectory};
        if (std::find(columns.begin(), columns.end(), col) == columns.end()) columns.push_back(col);
        if (std::find(families.begin(), families.end(), r.family) == families.end()) families.push_back(r.family);
    }
    for (int ch = 0; ch < 2; ++ch) {
        md << "## Prediction RMSE, " << (ch == 0 ? "m_GHX (kg/s)" : "Q_GHX (W)") << "\n\n| model |";
        for (const auto& [set, t] : columns) md << ' ' << (set == "experiment" ? std::string("experiment") : "sim " + std::to_string(t)) << " |";
        md << "\n|---|";
        for (std::size_t i = 0; i < columns.size(); ++i) md << "---|";
        md << '\n';
        for (const auto& f : families) {
            md << "| " << f << " |";
            for (const auto& [set, t] : columns) {
                double v = nan;
                for (const auto& r : rep.rmse)
                    if (r.family == f && r.set == set && r.trajectory == t) v = ch == 0 ? r.rmse_m : r.rmse_q;
                md << ' ' << cell(v) << " |";
            }
            md << '\n';
        }
        md << '\n';
    }
    if (!rep.coverage.empty()) {
        md << "## MvG 95% band coverage\n\n| set | trajectory | m_GHX | Q_GHX | diverged samples |\n|---|---|---|---|---|\n";
        for (const auto& c : rep.coverage)
            md << "| " << c.set << " | " << c.trajectory << " | " << cell(c.coverage_m) << " | " << cell(c.coverage_q)
               << " | " << c.n_diverged << " / " << c.n_samples << " |\n";
        md << '\n';
    }
    if (!rep.curves.empty()) {
        md << "## Active learning vs random\n\nScores are RMSE_m / std_m + RMSE_q / std_q on the target set. "
              "Full curves are in curves.csv.\n\n"
              "| family | target | final AL | final random | AL selected | random selected | AL selected to reach random final |\n"
              "|---|---|---|---|---|---|---|\n";
        for (const auto& c : rep.curves) {
            if (c.al.empty() || c.random.empty()) continue;
            const auto reach = c.al_to_reach_random_final();
            md << "| " << to_string(c.family) << " | " << to_string(c.target) << " | " << cell(c.score(c.al.back()))
               << " | " << cell(c.score(c.random.back())) << " | " << c.al.back().n_selected << " | "
               << c.random.back().n_selected << " | " << (reach ? std::to_string(*reach) : std::string("not reached"))
               << " |\n";
        }
        md << '\n';
    }
    md << "Wall-clock times are in runtime.csv.\n\n## Configuration\n\n```json\n" << rep.config_json << "```\n";
    write_text_file(dir / "report.md", md.str());
}

}  // namespace thermotwin
