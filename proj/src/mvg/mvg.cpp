#include "thermotwin/mvg/mvg.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "thermotwin/core/csv_io.hpp"
#include "thermotwin/core/errors.hpp"

namespace thermotwin {

using nlohmann::json;

CoefficientEnsemble CoefficientEnsemble::subset(const std::vector<std::size_t>& rows) const {
    CoefficientEnsemble e;
    e.state_dim = state_dim;
    e.input_dim = input_dim;
    e.vectors.resize(static_cast<Eigen::Index>(rows.size()), dim());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        require(rows[i] < static_cast<std::size_t>(size()), ErrorKind::shape, "ensemble row out of range");
        e.vectors.row(static_cast<Eigen::Index>(i)) = vectors.row(static_cast<Eigen::Index>(rows[i]));
        if (!subset_ids.empty()) e.subset_ids.push_back(subset_ids[rows[i]]);
    }
    return e;
}

void CoefficientEnsemble::validate() const {
    require(vectors.allFinite(), ErrorKind::numeric, "ensemble contains non-finite coefficients");
    require(vectors.cols() == state_dim * (1 + state_dim + input_dim), ErrorKind::shape,
            "ensemble width does not match the model dimensions");
    require(subset_ids.empty() || subset_ids.size() == static_cast<std::size_t>(vectors.rows()), ErrorKind::shape,
            "ensemble subset id list length mismatch");
}

namespace {

double log_choose(std::size_t n, std::size_t k) {
    return std::lgamma(static_cast<double>(n) + 1) - std::lgamma(static_cast<double>(k) + 1) -
           std::lgamma(static_cast<double>(n - k) + 1);
}

}  // namespace

CoefficientEnsemble build_ensemble(const std::vector<const Trajectory*>& pool, std::size_t n_models,
                                   std::size_t subset_size, const StlsqConfig& cfg, RngStream& stream,
                                   const SindycOptions& opt) {
    require(n_models >= 1, ErrorKind::parameter, "build_ensemble: n_models must be >= 1");
    require(subset_size >= 1, ErrorKind::parameter, "build_ensemble: subset_size must be >= 1");
    require(pool.size() >= subset_size, ErrorKind::combinatorics, "build_ensemble: pool smaller than subset size");
    if (log_choose(pool.size(), subset_size) < std::log(static_cast<double>(n_models)) - 1e-9) {
        fail(ErrorKind::combinatorics, "build_ensemble: only C(" + std::to_string(pool.size()) + ", " +
                                           std::to_string(subset_size) + ") distinct subsets, " +
                                           std::to_string(n_models) + " requested");
    }

    CoefficientEnsemble ens;
    ens.state_dim = static_cast<Eigen::Index>(state_dim(opt.states));
    ens.input_dim = ControlVector::size;
    const Eigen::Index p = ens.state_dim * (1 + ens.state_dim + ens.input_dim);
    std::vector<Eigen::VectorXd> rows;
    std::set<std::vector<int>> seen;
    std::size_t attempts = 0;
    const std::size_t max_attempts = 1000 * n_models + 10000;

    while (seen.size() < n_models) {
        require(++attempts <= max_attempts, ErrorKind::combinatorics, "build_ensemble: could not draw distinct subsets");
        const auto idx = stream.sample_without_replacement(pool.size(), subset_size);
        std::vector<int> ids;
        std::vector<const Trajectory*> subset;
        for (auto i : idx) {
            ids.push_back(pool[i]->id);
            subset.push_back(pool[i]);
        }
        std::sort(ids.begin(), ids.end());
        if (!seen.insert(ids).second) continue;
        std::sort(subset.begin(), subset.end(), [](const Trajectory* a, const Trajectory* b) { return a->id < b->id; });
        try {
            const auto m = fit_sindyc(subset, cfg, opt);
            rows.push_back(m.flatten());
            ens.subset_ids.push_back(ids);
        } catch (const Error& e) {
            spdlog::warn("ensemble fit on subset {} failed: {}", fmt::join(ids, ","), e.what());
            ens.failures.push_back({ids, e.what()});
        }
    }
    ens.vectors.resize(static_cast<Eigen::Index>(rows.size()), p);
    for (std::size_t i = 0; i < rows.size(); ++i) ens.vectors.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
    return ens;
}

Eigen::VectorXd default_shrinkage(const Eigen::MatrixXd& sample_cov) {
    constexpr double rel = 1e-8;
    const double tr = sample_cov.trace();
    const double fallback = tr > 0.0 ? rel * tr / static_cast<double>(sample_cov.rows()) : 1e-12;
    Eigen::VectorXd d(sample_cov.rows());
    for (Eigen::Index i = 0; i < d.size(); ++i) {
        const double sii = sample_cov(i, i);
        d(i) = sii > 0.0 ? rel * sii : fallback;
    }
    return d;
}

MvgModel fit_mvg(const Eigen::MatrixXd& v, std::optional<double> delta, Eigen::Index nx, Eigen::Index nu) {
    require(v.rows() >= 2, ErrorKind::insufficient_data, "fit_mvg: need at least 2 coefficient vectors");
    require(v.allFinite(), ErrorKind::numeric, "fit_mvg: non-finite coefficients");
    MvgModel m;
    m.state_dim = nx;
    m.input_dim = nu;
    m.mean = v.colwise().mean().transpose();
    const Eigen::MatrixXd c = v.rowwise() - m.mean.transpose();
    Eigen::MatrixXd s = (c.transpose() * c) / static_cast<double>(v.rows() - 1);
    s = 0.5 * (s + s.transpose());
    if (delta) {
        require(*delta >= 0.0, ErrorKind::parameter, "fit_mvg: shrinkage must be >= 0");
        m.delta = *delta;
        m.shrinkage = Eigen::VectorXd::Constant(s.rows(), *delta);
    } else {
        m.delta = 1e-8;
        m.shrinkage = default_shrinkage(s);
    }
    s.diagonal() += m.shrinkage;
    m.cov = s;
    return m;
}

MvgModel fit_mvg(const CoefficientEnsemble& e, std::optional<double> delta) {
    e.validate();
    return fit_mvg(e.vectors, delta, e.state_dim, e.input_dim);
}

Eigen::MatrixXd MvgModel::sample(std::size_t n, RngStream& stream) const {
    // Symmetric square root of the correlation matrix, rescaled by the
    // per-coefficient std. Coefficient scales span many decades, and a direct
    // decomposition of cov leaks large-variance directions into the tiny ones.
    const Eigen::VectorXd scale = cov.diagonal().cwiseMax(0.0).cwiseSqrt();
    const Eigen::VectorXd inv = scale.unaryExpr([](double v) { return v > 0.0 ? 1.0 / v : 0.0; });
    const Eigen::MatrixXd corr = inv.asDiagonal() * cov * inv.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(corr);
    const Eigen::VectorXd sd = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    const Eigen::MatrixXd root = scale.asDiagonal() * es.eigenvectors() * sd.asDiagonal();
    const auto p = mean.size();
    Eigen::MatrixXd out(static_cast<Eigen::Index>(n), p);
    Eigen::VectorXd z(p);
    for (std::size_t i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < p; ++j) z(j) = stream.normal();
        out.row(static_cast<Eigen::Index>(i)) = (mean + root * z).transpose();
    }
    return out;
}

MahalanobisMetric::MahalanobisMetric(const Eigen::MatrixXd& cov) : llt_(cov) {
    require(cov.rows() == cov.cols(), ErrorKind::shape, "mahalanobis: covariance must be square");
    if (llt_.info() != Eigen::Success) {
        fail(ErrorKind::singularity, "mahalanobis: covariance is not positive definite; increase the shrinkage delta");
    }
}

double MahalanobisMetric::distance(const Eigen::VectorXd& a, const Eigen::VectorXd& ref) const {
    require(a.size() == ref.size() && a.size() == llt_.matrixLLT().rows(), ErrorKind::shape,
            "mahalanobis: dimension mismatch");
    const Eigen::VectorXd y = llt_.matrixL().solve(a - ref);
    return y.norm();
}

double mahalanobis(const Eigen::VectorXd& a, const Eigen::VectorXd& ref, const Eigen::MatrixXd& cov) {
    return MahalanobisMetric(cov).distance(a, ref);
}

double quantile(std::vector<double> v, double q) {
    require(!v.empty(), ErrorKind::shape, "quantile of an empty set");
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(lo), v.end());
    const double a = v[lo];
    if (hi == lo) return a;
    const double b = *std::min_element(v.begin() + static_cast<std::ptrdiff_t>(lo) + 1, v.end());
    return a + (pos - static_cast<double>(lo)) * (b - a);
}

PredictiveBand predictive_band(const MvgModel& mvg, const Eigen::VectorXd& x0, const Eigen::MatrixXd& controls,
                               const TimeGrid& grid, std::size_t n_samples, RngStream& stream,
                               const RolloutConfig& rcfg) {
    require(n_samples >= 100, ErrorKind::parameter, "predictive_band: n_samples must be >= 100");
    const auto draws = mvg.sample(n_samples, stream);
    const auto n = static_cast<Eigen::Index>(grid.n_steps);
    const Eigen::Index nx = mvg.state_dim;

    std::vector<Eigen::MatrixXd> paths;
    paths.reserve(n_samples);
    std::size_t diverged = 0;
    for (std::size_t s = 0; s < n_samples; ++s) {
        const auto model = LinearModel::unflatten(draws.row(static_cast<Eigen::Index>(s)).transpose(), nx, mvg.input_dim);
        try {
            paths.push_back(rollout(model, x0, controls, grid, rcfg));
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::divergence) throw;
            ++diverged;
        }
    }
    if (2 * diverged > n_samples) {
        fail(ErrorKind::instability, "predictive_band: " + std::to_string(diverged) + " of " +
                                         std::to_string(n_samples) + " sampled models diverged");
    }

    PredictiveBand band;
    band.grid = grid;
    band.n_samples = paths.size();
    band.n_diverged = diverged;
    band.mean.resize(n, nx);
    band.lower.resize(n, nx);
    band.upper.resize(n, nx);
    std::vector<double> col(paths.size());
    for (Eigen::Index t = 0; t < n; ++t) {
        for (Eigen::Index c = 0; c < nx; ++c) {
            double sum = 0.0;
            for (std::size_t s = 0; s < paths.size(); ++s) {
                col[s] = paths[s](t, c);
                sum += col[s];
            }
            const double mean = sum / static_cast<double>(paths.size());
            band.mean(t, c) = mean;
            band.lower(t, c) = std::min(quantile(col, 0.025), mean);
            band.upper(t, c) = std::max(quantile(col, 0.975), mean);
        }
    }
    return band;
}

Eigen::VectorXd coverage(const PredictiveBand& band, const Eigen::MatrixXd& ref) {
    require(ref.rows() == band.mean.rows() && ref.cols() == band.mean.cols(), ErrorKind::shape,
            "coverage: reference and band grids differ");
    Eigen::VectorXd frac(ref.cols());
    for (Eigen::Index c = 0; c < ref.cols(); ++c) {
        Eigen::Index inside = 0;
        for (Eigen::Index t = 0; t < ref.rows(); ++t) {
            if (ref(t, c) >= band.lower(t, c) && ref(t, c) <= band.upper(t, c)) ++inside;
        }
        frac(c) = static_cast<double>(inside) / static_cast<double>(ref.rows());
    }
    return frac;
}

void write_band_csv(const std::filesystem::path& path, const PredictiveBand& band) {
    const Eigen::Index nx = band.mean.cols();
    std::string text = "t";
    for (Eigen::Index c = 0; c < nx; ++c) {
        const std::string s = nx == 2 ? (c == 0 ? "m" : "q") : std::to_string(c);
        text += ",mean_" + s + ",lo_" + s + ",hi_" + s;
    }
    text += '\n';
    for (Eigen::Index t = 0; t < band.mean.rows(); ++t) {
        text += format_double(band.grid.time(static_cast<std::size_t>(t)));
        for (Eigen::Index c = 0; c < nx; ++c) {
            text += ',' + format_double(band.mean(t, c)) + ',' + format_double(band.lower(t, c)) + ',' +
                    format_double(band.upper(t, c));
        }
        text += '\n';
    }
    write_text_file(path, text);
}

namespace {

std::vector<double> to_vec(const Eigen::MatrixXd& m) {
    std::vector<double> v;
    v.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) v.push_back(m(i, j));
    return v;
}

Eigen::MatrixXd from_vec(const std::vector<double>& v, Eigen::Index rows, Eigen::Index cols) {
    require(static_cast<Eigen::Index>(v.size()) == rows * cols, ErrorKind::manifest, "matrix payload size mismatch");
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = v[static_cast<std::size_t>(i * cols + j)];
    return m;
}

}  // namespace

void save_mvg(const std::filesystem::path& path, const MvgArtifact& art) {
    const auto& m = art.model;
    json j;
    j["kind"] = "mvg_sindyc";
    j["state_dim"] = m.state_dim;
    j["input_dim"] = m.input_dim;
    j["dim"] = m.mean.size();
    j["mean"] = to_vec(m.mean);
    j["cov"] = to_vec(m.cov);
    j["delta"] = m.delta;
    j["shrinkage"] = to_vec(m.shrinkage);
    j["seed"] = art.seed;
    j["config"] = {{"threshold", art.config.threshold},
                   {"ridge", art.config.ridge},
                   {"max_iters", art.config.max_iters},
                   {"normalize_columns", art.config.normalize_columns}};
    j["ensemble"] = {{"n_models", art.ensemble.size()},
                     {"vectors", to_vec(art.ensemble.vectors)},
                     {"subset_ids", art.ensemble.subset_ids}};
    json failed = json::array();
    for (const auto& f : art.ensemble.failures) failed.push_back({{"subset_ids", f.subset_ids}, {"reason", f.reason}});
    j["ensemble"]["failures"] = failed;
    write_text_file(path, j.dump(1) + "\n");
}

MvgArtifact load_mvg(const std::filesystem::path& path) {
    try {
        const json j = json::parse(read_text_file(path));
        require(j.at("kind") == "mvg_sindyc", ErrorKind::manifest, path.string() + ": not an MvG artifact");
        MvgArtifact art;
        const auto p = j.at("dim").get<Eigen::Index>();
        art.model.state_dim = j.at("state_dim").get<Eigen::Index>();
        art.model.input_dim = j.at("input_dim").get<Eigen::Index>();
        art.model.mean = from_vec(j.at("mean").get<std::vector<double>>(), p, 1);
        art.model.cov = from_vec(j.at("cov").get<std::vector<double>>(), p, p);
        art.model.delta = j.at("delta").get<double>();
        art.model.shrinkage = from_vec(j.at("shrinkage").get<std::vector<double>>(), p, 1);
        art.seed = j.at("seed").get<std::uint64_t>();
        const auto& c = j.at("config");
        art.config = {c.at("threshold").get<double>(), c.at("ridge").get<double>(), c.at("max_iters").get<int>(),
                      c.at("normalize_columns").get<bool>()};
        const auto& e = j.at("ensemble");
        art.ensemble.state_dim = art.model.state_dim;
        art.ensemble.input_dim = art.model.input_dim;
        art.ensemble.vectors = from_vec(e.at("vectors").get<std::vector<double>>(), e.at("n_models").get<Eigen::Index>(), p);
        art.ensemble.subset_ids = e.at("subset_ids").get<std::vector<std::vector<int>>>();
        for (const auto& f : e.at("failures"))
            art.ensemble.failures.push_back({f.at("subset_ids").get<std::vector<int>>(), f.at("reason").get<std::string>()});
        return art;
    } catch (const json::exception& e) {
        fail(ErrorKind::manifest, path.string() + ": " + e.what());
    }
}

}  // namespace thermotwin
