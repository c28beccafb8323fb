#pragma once

#include <vector>

#include <Eigen/Dense>

#include "thermotwin/sindy/model.hpp"

namespace thermotwin {

struct StlsqConfig {
    double threshold = 1e-8;   // lambda
    double ridge = 1e-6;       // alpha
    int max_iters = 20;
    /// Scale library columns to unit RMS before fitting; the threshold and
    /// ridge then act on the scaled coefficients.
    bool normalize_columns = true;

    void validate() const;

    /// GHX and TES settings with unscaled columns.
    static StlsqConfig ghx_table1() { return {1e-8, 1e-6, 20, false}; }
    static StlsqConfig tes_table1() { return {1e-6, 1e-3, 20, false}; }
};

struct StlsqResult {
    Eigen::VectorXd coef;                    // in library units
    std::vector<std::vector<bool>> support;  // active set entering each iteration
    int iterations = 0;
};

/// Sequential thresholded ridge least squares for one target column.
/// `equation` only labels error messages.
StlsqResult stlsq_solve(const Eigen::MatrixXd& theta, const Eigen::VectorXd& y, const StlsqConfig& cfg,
                        int equation = 0);

/// Fits every column of `dxdt` and assembles (A, B, d).
LinearModel stlsq_fit(const Eigen::MatrixXd& theta, const Eigen::MatrixXd& dxdt, const StlsqConfig& cfg,
                      Eigen::Index state_dim, Eigen::Index input_dim);

}  // namespace thermotwin
