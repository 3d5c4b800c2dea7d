#pragma once

#include <Eigen/Dense>
#include <functional>

#include "dyad/measure.hpp"

namespace dyad {

/// Dense matrix of a linear operator on leaf vectors, column by column.
inline Eigen::MatrixXd assembleMatrix(
    const TreePtr& tree, const std::function<StepFunction(const StepFunction&)>& op) {
    auto k = static_cast<Eigen::Index>(tree->leafCount());
    Eigen::MatrixXd M(k, k);
    for (Eigen::Index j = 0; j < k; ++j) {
        StepFunction e = StepFunction::zero(tree);
        e[static_cast<std::uint64_t>(j)] = 1.0;
        StepFunction col = op(e);
        for (Eigen::Index i = 0; i < k; ++i) M(i, j) = col[static_cast<std::uint64_t>(i)];
    }
    return M;
}

inline Eigen::VectorXd toVector(const StepFunction& f) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(f.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = f[static_cast<std::uint64_t>(i)];
    return v;
}

inline StepFunction fromVector(const TreePtr& tree, const Eigen::VectorXd& v) {
    std::vector<double> x(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) x[static_cast<std::size_t>(i)] = v[i];
    return StepFunction(tree, std::move(x));
}

/// Exact operator norm of M on L^2(nu) where nu has the given per-leaf masses
/// (e.g. w_i * mu_i). Leaves with zero mass are quotiented out: they carry no
/// norm and their output is invisible in the target seminorm.
inline double weightedSpectralNorm(const Eigen::MatrixXd& M, const std::vector<double>& leafNu) {
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < M.rows(); ++i)
        if (leafNu[static_cast<std::size_t>(i)] > 0.0) keep.push_back(i);
    if (keep.empty()) return 0.0;
    Eigen::MatrixXd S(static_cast<Eigen::Index>(keep.size()), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t a = 0; a < keep.size(); ++a) {
        double ra = std::sqrt(leafNu[static_cast<std::size_t>(keep[a])]);
        for (std::size_t b = 0; b < keep.size(); ++b) {
            double rb = std::sqrt(leafNu[static_cast<std::size_t>(keep[b])]);
            S(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
                ra * M(keep[a], keep[b]) / rb;
        }
    }
    if (S.rows() == 0) return 0.0;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(S);
    return svd.singularValues().size() ? svd.singularValues()[0] : 0.0;
}

/// All singular values of M in the L^2(nu) geometry, descending.
inline std::vector<double> weightedSingularValues(const Eigen::MatrixXd& M,
                                                  const std::vector<double>& leafNu) {
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < M.rows(); ++i)
        if (leafNu[static_cast<std::size_t>(i)] > 0.0) keep.push_back(i);
    if (keep.empty()) return {};
    Eigen::MatrixXd S(static_cast<Eigen::Index>(keep.size()), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t a = 0; a < keep.size(); ++a) {
        double ra = std::sqrt(leafNu[static_cast<std::size_t>(keep[a])]);
        for (std::size_t b = 0; b < keep.size(); ++b) {
            double rb = std::sqrt(leafNu[static_cast<std::size_t>(keep[b])]);
            S(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
                ra * M(keep[a], keep[b]) / rb;
        }
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(S);
    std::vector<double> out(svd.singularValues().size());
    for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i) out[i] = svd.singularValues()[i];
    return out;
}

/// Largest singular value of a rectangular matrix (plain l2 geometry).
inline double spectralNorm(const Eigen::MatrixXd& M) {
    if (M.rows() == 0 || M.cols() == 0) return 0.0;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
    return svd.singularValues().size() ? svd.singularValues()[0] : 0.0;
}

/// Extremal singular values via the Gram spectrum (faster than a full SVD for
/// the frame-bound computation).
inline std::pair<double, double> gramExtremes(const Eigen::MatrixXd& M) {
    if (M.cols() == 0) return {0.0, 0.0};
    Eigen::MatrixXd G = M.transpose() * M;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
    double lo = es.eigenvalues().minCoeff();
    double hi = es.eigenvalues().maxCoeff();
    return {std::sqrt(std::max(lo, 0.0)), std::sqrt(std::max(hi, 0.0))};
}

}  // namespace dyad
