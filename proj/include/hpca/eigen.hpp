#pragma once

// Symmetric eigendecomposition with a fixed ordering and sign convention.
//
// Ordering: eigenvalues descending. Among exactly equal eigenvalues, columns
// are ordered by the index of their largest-magnitude entry.
// Sign: each eigenvector has a non-negative entry sum; when the sum is zero
// (|sum| <= 1e-12) its first nonzero entry is positive.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "hpca/error.hpp"

namespace hpca {

/// Eigenvalues sorted descending; column k of `vectors` pairs with values(k).
struct Spectrum {
    Eigen::VectorXd values;
    Eigen::MatrixXd vectors;

    Eigen::Index size() const { return values.size(); }
};

namespace detail {

inline constexpr double kSignTolerance = 1e-12;

/// Flips `v` in place so that it satisfies the sign convention.
template <typename Derived>
void canonicalize_sign(Eigen::MatrixBase<Derived>& v) {
    const double sum = v.sum();
    if (std::abs(sum) > kSignTolerance) {
        if (sum < 0.0) v = -v;
        return;
    }
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (std::abs(v(i)) > kSignTolerance) {
            if (v(i) < 0.0) v = -v;
            return;
        }
    }
}

template <typename Derived>
Eigen::Index argmax_abs(const Eigen::MatrixBase<Derived>& v) {
    Eigen::Index best = 0;
    v.cwiseAbs().maxCoeff(&best);
    return best;
}

} // namespace detail

/// Full decomposition of a real symmetric matrix. The input is symmetrized as
/// (A + A^T)/2. Deterministic for identical input bits.
inline Spectrum sym_eig_sorted(const Eigen::MatrixXd& a) {
    if (a.rows() != a.cols()) throw InputError("sym_eig_sorted: matrix is not square");
    if (!a.allFinite()) throw InputError("sym_eig_sorted: matrix has non-finite entries");
    const Eigen::Index n = a.rows();
    if (n == 0) return {};

    const Eigen::MatrixXd sym = 0.5 * (a + a.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym, Eigen::ComputeEigenvectors);
    if (solver.info() != Eigen::Success) throw NumericalError("sym_eig_sorted: eigensolver did not converge");

    Eigen::MatrixXd vecs = solver.eigenvectors();
    for (Eigen::Index k = 0; k < n; ++k) {
        auto col = vecs.col(k);
        detail::canonicalize_sign(col);
    }

    const Eigen::VectorXd& vals = solver.eigenvalues();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::vector<Eigen::Index> peak(order.size());
    for (Eigen::Index k = 0; k < n; ++k) peak[static_cast<std::size_t>(k)] = detail::argmax_abs(vecs.col(k));
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index x, Eigen::Index y) {
        if (vals(x) != vals(y)) return vals(x) > vals(y);
        return peak[static_cast<std::size_t>(x)] < peak[static_cast<std::size_t>(y)];
    });

    Spectrum out{Eigen::VectorXd(n), Eigen::MatrixXd(n, n)};
    for (Eigen::Index k = 0; k < n; ++k) {
        const Eigen::Index src = order[static_cast<std::size_t>(k)];
        out.values(k) = vals(src);
        out.vectors.col(k) = vecs.col(src);
    }
    return out;
}

} // namespace hpca
