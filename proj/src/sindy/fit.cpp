#include "thermotwin/sindy/fit.hpp"

#include <nlohmann/json.hpp>

#include "thermotwin/core/csv_io.hpp"
#include "thermotwin/core/errors.hpp"
#include "thermotwin/core/signal.hpp"
#include "thermotwin/sindy/library.hpp"

namespace thermotwin {

using nlohmann::json;

LinearModel fit_sindyc(const std::vector<const Trajectory*>& subset, const StlsqConfig& cfg,
                       const SindycOptions& opt) {
    require(!subset.empty(), ErrorKind::data, "fit_sindyc: empty subset");
    const auto nx = static_cast<Eigen::Index>(state_dim(opt.states));
    const Eigen::Index nu = ControlVector::size;

    Eigen::Index rows = 0;
    for (const auto* t : subset) rows += static_cast<Eigen::Index>(t->size());
    Eigen::MatrixXd theta(rows, 1 + nx + nu);
    Eigen::MatrixXd dxdt(rows, nx);
    Eigen::Index r = 0;
    for (const auto* t : subset) {
        Eigen::MatrixXd x = t->state_matrix(opt.states);
        if (opt.smooth_window > 1) {
            for (Eigen::Index c = 0; c < nx; ++c) {
                const Eigen::VectorXd col = x.col(c);
                const auto s = savgol_filter(std::span<const double>(col.data(), static_cast<std::size_t>(col.size())),
                                             opt.smooth_window, opt.smooth_order);
                x.col(c) = Eigen::Map<const Eigen::VectorXd>(s.data(), col.size());
            }
        }
        const auto n = x.rows();
        theta.middleRows(r, n) = build_library(x, t->control_matrix());
        dxdt.middleRows(r, n) = estimate_derivatives(x, t->grid.dt);
        r += n;
    }
    return stlsq_fit(theta, dxdt, cfg, nx, nu);
}

LinearModel fit_sindyc(const Dataset& subset, const StlsqConfig& cfg, const SindycOptions& opt) {
    return fit_sindyc(subset.all(), cfg, opt);
}

Eigen::MatrixXd rollout_on(const LinearModel& model, const Trajectory& traj, StateSet states,
                           const RolloutConfig& rcfg) {
    const Eigen::VectorXd x0 = traj.state_matrix(states).row(0).transpose();
    return rollout(model, x0, traj.control_matrix(), traj.grid, rcfg);
}

void save_sindyc(const std::filesystem::path& path, const SindycArtifact& art) {
    const auto a = art.model.flatten();
    json j;
    j["kind"] = "sindyc";
    j["state_set"] = art.options.states == StateSet::ghx ? "ghx" : "tes";
    j["state_dim"] = art.model.state_dim();
    j["input_dim"] = art.model.input_dim();
    j["column_order"] = "constant,states,controls";
    j["coefficients"] = std::vector<double>(a.data(), a.data() + a.size());
    j["config"] = {{"threshold", art.config.threshold},
                   {"ridge", art.config.ridge},
                   {"max_iters", art.config.max_iters},
                   {"normalize_columns", art.config.normalize_columns},
                   {"smooth_window", art.options.smooth_window},
                   {"smooth_order", art.options.smooth_order}};
    j["subset_ids"] = art.subset_ids;
    write_text_file(path, j.dump(2) + "\n");
}

SindycArtifact load_sindyc(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(read_text_file(path));
        require(j.at("kind") == "sindyc", ErrorKind::manifest, path.string() + ": not a SINDyC artifact");
        SindycArtifact art;
        const auto coef = j.at("coefficients").get<std::vector<double>>();
        art.model = LinearModel::unflatten(Eigen::Map<const Eigen::VectorXd>(coef.data(), static_cast<Eigen::Index>(coef.size())),
                                           j.at("state_dim").get<Eigen::Index>(), j.at("input_dim").get<Eigen::Index>());
        const auto& c = j.at("config");
        art.config = {c.at("threshold").get<double>(), c.at("ridge").get<double>(), c.at("max_iters").get<int>(),
                      c.at("normalize_columns").get<bool>()};
        art.options.states = j.at("state_set") == "tes" ? StateSet::tes : StateSet::ghx;
        art.options.smooth_window = c.value("smooth_window", std::size_t{0});
        art.options.smooth_order = c.value("smooth_order", std::size_t{3});
        art.subset_ids = j.at("subset_ids").get<std::vector<int>>();
        return art;
    } catch (const json::exception& e) {
        fail(ErrorKind::manifest, path.string() + ": " + e.what());
    }
}

}  // namespace thermotwin
