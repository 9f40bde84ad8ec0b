#include "chameleon/verification.hpp"

#include <cmath>

#include "chameleon/model.hpp"
#include "chameleon/quadrature.hpp"

namespace chameleon::verification {

namespace {

CheckRow make_row(std::string check, std::string method, double a, double b, double value,
                  double expected, double tol) {
    CheckRow row;
    row.check = std::move(check);
    row.method = std::move(method);
    row.a = a;
    row.b = b;
    row.value = value;
    row.expected = expected;
    row.error = std::abs(value - expected);
    row.tol = tol;
    row.pass = row.error <= tol;
    return row;
}

double grid_angle(int i, int grid) {
    return kTwoPi * i / grid;
}

}  // namespace

std::vector<CheckRow> correlation_grid(int grid, double tol) {
    std::vector<CheckRow> rows;
    rows.reserve(static_cast<std::size_t>(grid) * grid);
    for (int i = 0; i < grid; ++i) {
        for (int j = 0; j < grid; ++j) {
            const model::Angle a(grid_angle(i, grid));
            const model::Angle b(grid_angle(j, grid));
            rows.push_back(make_row("correlation", "correlation_quadrature", a.radians(),
                                    b.radians(), quadrature::correlation_quadrature(a, b, tol),
                                    model::closed_form_correlation(a, b), tol));
        }
    }
    return rows;
}

std::vector<CheckRow> normalization_grid(int grid, double tol) {
    std::vector<CheckRow> rows;
    rows.reserve(static_cast<std::size_t>(grid) * grid);
    for (int i = 0; i < grid; ++i) {
        for (int j = 0; j < grid; ++j) {
            const model::Angle a(grid_angle(i, grid));
            const model::Angle b(grid_angle(j, grid));
            rows.push_back(make_row("normalization", "normalization_quadrature", a.radians(),
                                    b.radians(), quadrature::normalization_quadrature(a, b, tol),
                                    1.0, tol));
        }
    }
    return rows;
}

std::vector<CheckRow> marginal_grid(int grid, double tol) {
    std::vector<CheckRow> rows;
    rows.reserve(2 * static_cast<std::size_t>(grid) * grid);
    for (int station = 1; station <= 2; ++station) {
        for (int i = 0; i < grid; ++i) {
            for (int j = 0; j < grid; ++j) {
                const model::Angle a(grid_angle(i, grid));
                const model::Angle b(grid_angle(j, grid));
                rows.push_back(make_row(
                    station == 1 ? "marginal1" : "marginal2", "marginal_quadrature", a.radians(),
                    b.radians(), quadrature::marginal_quadrature(station, a, b, tol), 0.0, tol));
            }
        }
    }
    return rows;
}

std::vector<CheckRow> change_of_variables_grid(int grid, double tol) {
    std::vector<CheckRow> rows;
    rows.reserve(static_cast<std::size_t>(grid) * grid);
    for (int i = 0; i < grid; ++i) {
        for (int j = 0; j < grid; ++j) {
            const model::Angle a(grid_angle(i, grid));
            const model::Angle b(grid_angle(j, grid));
            rows.push_back(
                make_row("change_of_variables", "correlation_change_of_variables", a.radians(),
                         b.radians(), quadrature::correlation_change_of_variables(a, b, tol),
                         quadrature::correlation_quadrature(a, b), tol));
        }
    }
    return rows;
}

std::vector<CheckRow> run_suite(const SuiteOptions& opts) {
    std::vector<CheckRow> rows = correlation_grid(opts.grid, opts.correlation_tol);
    for (auto& part :
         {normalization_grid(opts.grid, opts.normalization_tol),
          marginal_grid(opts.grid, opts.marginal_tol),
          change_of_variables_grid(opts.cov_grid, opts.change_of_variables_tol)}) {
        rows.insert(rows.end(), part.begin(), part.end());
    }
    return rows;
}

}  // namespace chameleon::verification
