#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <string>
#include <vector>

#include "bels/errors.hpp"

namespace bels {

// Dense double matrix, row-major so that one sample occupies one contiguous row.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

inline void require(bool ok, const std::string& what) {
    if (!ok) throw ShapeMismatch(what);
}

// Index of the row maximum; ties resolve to the lowest column index so that
// repeated runs and reorderable reductions stay reproducible.
template <typename Row>
inline Index argmax_row(const Row& row) {
    Index best = 0;
    for (Index j = 1; j < row.size(); ++j) {
        if (row(j) > row(best)) best = j;
    }
    return best;
}

// One-hot rows must be exact: a single 1.0, everything else 0.0.
inline bool is_one_hot(const Matrix& y) {
    for (Index i = 0; i < y.rows(); ++i) {
        int ones = 0;
        for (Index j = 0; j < y.cols(); ++j) {
            double v = y(i, j);
            if (v == 1.0) {
                ++ones;
            } else if (v != 0.0) {
                return false;
            }
        }
        if (ones != 1) return false;
    }
    return true;
}

inline void require_one_hot(const Matrix& y, const std::string& where) {
    if (!is_one_hot(y)) throw ShapeMismatch(where + ": labels are not one-hot rows");
}

inline std::vector<Index> row_argmaxes(const Matrix& m) {
    std::vector<Index> out(static_cast<std::size_t>(m.rows()));
    for (Index i = 0; i < m.rows(); ++i) out[static_cast<std::size_t>(i)] = argmax_row(m.row(i));
    return out;
}

}  // namespace bels
