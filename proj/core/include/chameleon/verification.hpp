#pragma once

#include <string>
#include <vector>

namespace chameleon::verification {

// The numerical cross-checks behind the `verify` subcommand: quadrature of
// the model's integrals against their closed forms on uniform setting grids.

struct CheckRow {
    std::string check;   // correlation | normalization | marginal1 | marginal2 | change_of_variables
    double a = 0.0;
    double b = 0.0;
    double value = 0.0;
    double expected = 0.0;
    double error = 0.0;  // |value - expected|
    double tol = 0.0;
    std::string method;
    bool pass = false;
};

struct SuiteOptions {
    int grid = 16;      // settings grid for correlation/normalization/marginals
    int cov_grid = 8;   // settings grid for the change-of-variables equivalence
    double correlation_tol = 1e-8;
    double normalization_tol = 1e-10;
    double marginal_tol = 1e-8;
    double change_of_variables_tol = 1e-6;
};

std::vector<CheckRow> correlation_grid(int grid, double tol);
std::vector<CheckRow> normalization_grid(int grid, double tol);
std::vector<CheckRow> marginal_grid(int grid, double tol);

/// Compares the mu-form against the lambda-form on the grid.
std::vector<CheckRow> change_of_variables_grid(int grid, double tol);

std::vector<CheckRow> run_suite(const SuiteOptions& opts = {});

}  // namespace chameleon::verification
