#include "lftid/numerics.hpp"

#include <algorithm>
#include <limits>

namespace lftid {

namespace {
Numerics g_numerics;
}

const Numerics& numerics() { return g_numerics; }

void set_numerics(const Numerics& n) { g_numerics = n; }

double rank_threshold(Index rows, Index cols, double sigma_max) {
    const double rel = numerics().rank_tol > 0.0
                           ? numerics().rank_tol
                           : static_cast<double>(std::max(rows, cols)) * std::numeric_limits<double>::epsilon();
    return rel * sigma_max;
}

namespace {

RankInfo rank_info(const Mat& m, bool rows_side) {
    RankInfo info;
    if (m.size() == 0) {
        info.full = (rows_side ? m.rows() : m.cols()) == 0;
        return info;
    }
    Eigen::JacobiSVD<Mat> svd(m);
    const Vec& s = svd.singularValues();
    info.sigma_max = s(0);
    const double tol = rank_threshold(m.rows(), m.cols(), info.sigma_max);
    info.rank = (s.array() > tol).count();
    const Index needed = rows_side ? m.rows() : m.cols();
    info.sigma_min = needed <= s.size() ? s(needed - 1) : 0.0;
    info.full = info.sigma_max > 0.0 && info.rank == needed;
    return info;
}

}  // namespace

RankInfo full_row_rank(const Mat& m) { return rank_info(m, true); }

RankInfo full_column_rank(const Mat& m) { return rank_info(m, false); }

bool numerically_singular(const CMat& m) {
    Eigen::JacobiSVD<CMat> svd(m);
    const auto& s = svd.singularValues();
    if (s.size() == 0) return false;
    return s(s.size() - 1) <= rank_threshold(m.rows(), m.cols(), s(0)) || s(0) == 0.0;
}

bool numerically_singular(const Mat& m) { return numerically_singular(CMat(m.cast<cplx>())); }

Mat right_null_space(const Mat& m) {
    if (m.rows() == 0) return Mat::Identity(m.cols(), m.cols());
    Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeFullV);
    const Vec& s = svd.singularValues();
    const double tol = rank_threshold(m.rows(), m.cols(), s.size() ? s(0) : 0.0);
    Index rank = 0;
    if (s.size() && s(0) > 0.0) rank = (s.array() > tol).count();
    return svd.matrixV().rightCols(m.cols() - rank);
}

Mat pseudo_inverse(const Mat& m) {
    Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vec& s = svd.singularValues();
    const double tol = rank_threshold(m.rows(), m.cols(), s.size() ? s(0) : 0.0);
    Vec inv = Vec::Zero(s.size());
    for (Index i = 0; i < s.size(); ++i)
        if (s(i) > tol && s(i) > 0.0) inv(i) = 1.0 / s(i);
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

Vec vectorize(const Mat& m) { return Eigen::Map<const Vec>(m.data(), m.size()); }

double relative_difference(const CMat& a, const CMat& b) {
    const double scale = std::max({a.norm(), b.norm(), std::numeric_limits<double>::min()});
    return (a - b).norm() / scale;
}

double relative_difference(const Mat& a, const Mat& b) {
    const double scale = std::max({a.norm(), b.norm(), std::numeric_limits<double>::min()});
    return (a - b).norm() / scale;
}

}  // namespace lftid
