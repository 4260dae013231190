#pragma once

#include "gpada/common.hpp"

#include <vector>

namespace gpada {

/// A stack of feature rows with the sample ids each row belongs to.
struct FeatureBlock {
    Matrix rows;  // n x d
    std::vector<SampleId> ids;

    long n() const { return rows.rows(); }
    bool empty() const { return rows.rows() == 0; }
};

struct KernelMatrix {
    Matrix entries;
    std::vector<SampleId> row_ids;
    std::vector<SampleId> col_ids;
};

/// Normalized linear (cosine) kernel: K[j,k] = P_j.Q_k / (|P_j||Q_k|).
inline Matrix cosine_kernel(const Matrix& p, const Matrix& q) {
    if (p.cols() != q.cols())
        fail("cosine_kernel: dimensionality mismatch (" + std::to_string(p.cols()) +
             " vs " + std::to_string(q.cols()) + ")");
    auto check_rows = [](const Matrix& m, const char* side) {
        for (long i = 0; i < m.rows(); ++i)
            if (!(m.row(i).norm() > 0.0))
                fail(std::string("cosine_kernel: zero-norm row ") + std::to_string(i) + " in " + side);
    };
    check_rows(p, "P");
    check_rows(q, "Q");
    Matrix pn = p.rowwise().normalized();
    Matrix qn = q.rowwise().normalized();
    return pn * qn.transpose();
}

inline KernelMatrix cosine_kernel(const FeatureBlock& p, const FeatureBlock& q) {
    return KernelMatrix{cosine_kernel(p.rows, q.rows), p.ids, q.ids};
}

}  // namespace gpada
