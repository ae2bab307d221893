#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "deepindex/common.hpp"

namespace deepindex {

// Sparse row vector: (index, value) pairs with strictly increasing indices.
struct SparseVector {
    int dim = 0;
    std::vector<std::pair<int, double>> pairs;

    double l2_norm() const;
    // Throws if indices are unsorted, duplicated, or out of [0, dim).
    void validate() const;
};

struct SparseMatrix {
    int cols = 0;
    std::vector<SparseVector> rows;

    int n_rows() const { return static_cast<int>(rows.size()); }
};

inline double SparseVector::l2_norm() const {
    double s = 0.0;
    for (const auto& [i, v] : pairs) s += v * v;
    return std::sqrt(s);
}

inline void SparseVector::validate() const {
    int prev = -1;
    for (const auto& [i, v] : pairs) {
        if (i <= prev || i >= dim) throw Error("SparseVector: bad index " + std::to_string(i));
        if (!std::isfinite(v)) throw Error("SparseVector: non-finite value");
        prev = i;
    }
}

}  // namespace deepindex
