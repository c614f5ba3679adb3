#pragma once

#include "setbp/core/errors.hpp"

#include <Eigen/Dense>

#include <limits>
#include <vector>

namespace setbp {

/// Minimum-cost perfect assignment on a square cost matrix (shortest augmenting
/// paths with row/column potentials, O(n^3)). Returns col_of_row.
inline std::vector<int> hungarian(const Eigen::MatrixXd& cost) {
    if (cost.rows() != cost.cols()) throw DimensionError("hungarian: cost matrix must be square");
    if (!cost.allFinite()) throw InputError("hungarian: cost matrix must be finite");
    const int n = static_cast<int>(cost.rows());
    constexpr double inf = std::numeric_limits<double>::infinity();
    // 1-based arrays; index 0 is the virtual source column.
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> row_of_col(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        row_of_col[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<bool> used(n + 1, false);
        do {
            used[j0] = true;
            const int i0 = row_of_col[j0];
            double delta = inf;
            int j1 = 0;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[row_of_col[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (row_of_col[j0] != 0);
        do {
            const int j1 = way[j0];
            row_of_col[j0] = row_of_col[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> col_of_row(n, -1);
    for (int j = 1; j <= n; ++j) {
        if (row_of_col[j] > 0) col_of_row[row_of_col[j] - 1] = j - 1;
    }
    return col_of_row;
}

}  // namespace setbp
