#pragma once

#include <string>
#include <vector>

#include "lftid/errors.hpp"
#include "lftid/numerics.hpp"

namespace lftid {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

// Unknown parameters of the plant.
class ParameterVector {
public:
    ParameterVector() = default;
    explicit ParameterVector(Vec theta) : theta_(std::move(theta)) {}

    const Vec& values() const noexcept { return theta_; }
    Index size() const noexcept { return theta_.size(); }
    double operator[](Index i) const { return theta_(i); }

private:
    Vec theta_;
};

// Descriptor plant whose system matrices depend on theta through a linear
// fractional transformation:
//
//   [A B; C D] = [A_xx B_xu; C_yx D_yu]
//              + [B_xv; D_yv] (I - P(theta) D_zv)^-1 P(theta) [C_zx D_zu],
//   P(theta)   = sum_i theta_i P_i.
//
// E is fixed. All dimensions are validated on construction and the object is
// immutable afterwards.
class LftPlant {
public:
    struct Data {
        Mat E, A_xx, B_xu, B_xv, C_yx, C_zx, D_zu, D_zv, D_yu, D_yv;
        std::vector<Mat> basis;
        std::vector<Interval> theta_box;
    };

    explicit LftPlant(Data data);

    const Mat& E() const noexcept { return d_.E; }
    const Mat& A_xx() const noexcept { return d_.A_xx; }
    const Mat& B_xu() const noexcept { return d_.B_xu; }
    const Mat& B_xv() const noexcept { return d_.B_xv; }
    const Mat& C_yx() const noexcept { return d_.C_yx; }
    const Mat& C_zx() const noexcept { return d_.C_zx; }
    const Mat& D_zu() const noexcept { return d_.D_zu; }
    const Mat& D_zv() const noexcept { return d_.D_zv; }
    const Mat& D_yu() const noexcept { return d_.D_yu; }
    const Mat& D_yv() const noexcept { return d_.D_yv; }
    const std::vector<Mat>& basis() const noexcept { return d_.basis; }
    const std::vector<Interval>& theta_box() const noexcept { return d_.theta_box; }

    Index m_x() const noexcept { return d_.E.rows(); }
    Index m_u() const noexcept { return d_.B_xu.cols(); }
    Index m_y() const noexcept { return d_.C_yx.rows(); }
    Index m_v() const noexcept { return d_.B_xv.cols(); }
    Index m_z() const noexcept { return d_.C_zx.rows(); }
    Index m_theta() const noexcept { return static_cast<Index>(d_.basis.size()); }

    // P(theta) = sum theta_i P_i.
    Mat P(const ParameterVector& theta) const;

    bool in_box(const ParameterVector& theta) const;

    void require_parameter_size(const ParameterVector& theta) const;

private:
    Data d_;
};

struct SystemMatrices {
    Mat A, B, C, D;
};

// Closed-form system matrices for a given theta. Values outside theta_box are
// accepted (membership is reported by check_assumptions, not enforced).
SystemMatrices assemble(const LftPlant& plant, const ParameterVector& theta);

// H(s, theta) through the parameter-free TFMs:
//   H = G_yu + G_yv P (I - G_zv P)^-1 G_zu.
// Falls back to the state-space form when s is a generalized eigenvalue of (E, A_xx).
CMat eval_tfm(const LftPlant& plant, const ParameterVector& theta, cplx s);

// H(s, theta) = C (sE - A)^-1 B + D from the assembled matrices.
CMat eval_tfm_state_space(const LftPlant& plant, const ParameterVector& theta, cplx s);
CMat eval_tfm_state_space(const Mat& E, const SystemMatrices& sys, cplx s);

// The parameter-free 2x2 block TFM evaluated at s.
struct GBlocks {
    CMat yv, yu, zv, zu;
};
GBlocks eval_g(const LftPlant& plant, cplx s);

// k-th derivative of H(., theta) at s, k >= 1:
//   k! C [-(sE - A)^-1 E]^k (sE - A)^-1 B.
CMat tfm_derivative(const LftPlant& plant, const ParameterVector& theta, cplx s, int k);
CMat tfm_derivative(const Mat& E, const SystemMatrices& sys, cplx s, int k);

// Generalized eigen-structure of the pencil (E, A).
struct PencilSpectrum {
    bool regular = false;
    bool qz_indeterminate = false;  // every (alpha, beta) pair ~ (0, 0)
    bool probe_regular = false;     // some random s0 gives a nonsingular s0 E - A
    std::vector<cplx> finite;       // sorted by real part, then imaginary part
    Index infinite_count = 0;
};
PencilSpectrum analyze_pencil(const Mat& E, const Mat& A);

struct AssumptionReport {
    bool regular = false;
    bool well_posed = false;
    double well_posed_sigma_min = 0.0;
    bool stable = false;
    bool in_box = false;
    std::vector<cplx> eigenvalues;  // finite generalized eigenvalues of (E, A(theta))
    Index infinite_eigenvalues = 0;

    bool ok() const noexcept { return regular && well_posed && stable; }
    std::string describe() const;
};

// Reports regularity, well-posedness and stability; never throws for degenerate input.
AssumptionReport check_assumptions(const LftPlant& plant, const ParameterVector& theta);

// Solves m x = rhs through an SVD; throws SingularPencil(what) when m is numerically singular.
CMat solve_or_throw(const CMat& m, const CMat& rhs, const std::string& what);

}  // namespace lftid
