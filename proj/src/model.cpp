#include "lftid/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace lftid {

namespace {

void require_shape(const Mat& m, Index rows, Index cols, const char* name) {
    if (m.rows() != rows || m.cols() != cols) {
        std::ostringstream os;
        os << name << " is " << m.rows() << "x" << m.cols() << ", expected " << rows << "x" << cols;
        throw DimensionMismatch(os.str());
    }
}

template <class Err>
CMat svd_solve(const CMat& m, const CMat& rhs, const std::string& what) {
    Eigen::JacobiSVD<CMat> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    if (s.size() > 0 && (s(0) == 0.0 || s(s.size() - 1) <= rank_threshold(m.rows(), m.cols(), s(0))))
        throw Err(what);
    return svd.solve(rhs);
}

Mat wellposed_inverse(const LftPlant& plant, const Mat& P) {
    const Mat M = Mat::Identity(plant.m_v(), plant.m_v()) - P * plant.D_zv();
    return svd_solve<WellPosednessViolated>(M.cast<cplx>(), CMat::Identity(M.rows(), M.cols()),
                                            "I - P(theta) D_zv is singular: the plant is not well-posed")
        .real();
}

}  // namespace

CMat solve_or_throw(const CMat& m, const CMat& rhs, const std::string& what) {
    return svd_solve<SingularPencil>(m, rhs, what);
}

LftPlant::LftPlant(Data data) : d_(std::move(data)) {
    const Index mx = d_.E.rows();
    const Index mu = d_.B_xu.cols();
    const Index my = d_.C_yx.rows();
    const Index mv = d_.B_xv.cols();
    const Index mz = d_.C_zx.rows();
    require_shape(d_.E, mx, mx, "E");
    require_shape(d_.A_xx, mx, mx, "A_xx");
    require_shape(d_.B_xu, mx, mu, "B_xu");
    require_shape(d_.B_xv, mx, mv, "B_xv");
    require_shape(d_.C_yx, my, mx, "C_yx");
    require_shape(d_.C_zx, mz, mx, "C_zx");
    require_shape(d_.D_zu, mz, mu, "D_zu");
    require_shape(d_.D_zv, mz, mv, "D_zv");
    require_shape(d_.D_yu, my, mu, "D_yu");
    require_shape(d_.D_yv, my, mv, "D_yv");
    if (d_.basis.empty()) throw DimensionMismatch("the parameter basis must contain at least one matrix");
    for (std::size_t i = 0; i < d_.basis.size(); ++i)
        require_shape(d_.basis[i], mv, mz, ("P[" + std::to_string(i) + "]").c_str());
    if (d_.theta_box.empty()) d_.theta_box.assign(d_.basis.size(), Interval{-1.0, 1.0});
    if (d_.theta_box.size() != d_.basis.size())
        throw DimensionMismatch("theta_box must have one interval per basis matrix");
    for (const auto& iv : d_.theta_box) {
        if (!std::isfinite(iv.lo) || !std::isfinite(iv.hi) || iv.lo > iv.hi)
            throw DimensionMismatch("theta_box intervals must be finite and non-empty");
    }
}

void LftPlant::require_parameter_size(const ParameterVector& theta) const {
    if (theta.size() != m_theta()) {
        std::ostringstream os;
        os << "parameter vector has length " << theta.size() << ", plant expects " << m_theta();
        throw DimensionMismatch(os.str());
    }
}

Mat LftPlant::P(const ParameterVector& theta) const {
    require_parameter_size(theta);
    Mat p = Mat::Zero(m_v(), m_z());
    for (Index i = 0; i < m_theta(); ++i) p += theta[i] * d_.basis[static_cast<std::size_t>(i)];
    return p;
}

bool LftPlant::in_box(const ParameterVector& theta) const {
    if (theta.size() != m_theta()) return false;
    for (Index i = 0; i < theta.size(); ++i) {
        const auto& iv = d_.theta_box[static_cast<std::size_t>(i)];
        if (theta[i] < iv.lo || theta[i] > iv.hi) return false;
    }
    return true;
}

SystemMatrices assemble(const LftPlant& plant, const ParameterVector& theta) {
    const Mat P = plant.P(theta);
    const Mat K = wellposed_inverse(plant, P) * P;  // (I - P D_zv)^-1 P
    SystemMatrices sys;
    sys.A = plant.A_xx() + plant.B_xv() * K * plant.C_zx();
    sys.B = plant.B_xu() + plant.B_xv() * K * plant.D_zu();
    sys.C = plant.C_yx() + plant.D_yv() * K * plant.C_zx();
    sys.D = plant.D_yu() + plant.D_yv() * K * plant.D_zu();
    return sys;
}

CMat eval_tfm_state_space(const Mat& E, const SystemMatrices& sys, cplx s) {
    const CMat pencil = s * E.cast<cplx>() - sys.A.cast<cplx>();
    const CMat X = solve_or_throw(pencil, sys.B.cast<cplx>(), "s is a generalized eigenvalue of (E, A(theta))");
    return sys.C.cast<cplx>() * X + sys.D.cast<cplx>();
}

CMat eval_tfm_state_space(const LftPlant& plant, const ParameterVector& theta, cplx s) {
    return eval_tfm_state_space(plant.E(), assemble(plant, theta), s);
}

GBlocks eval_g(const LftPlant& plant, cplx s) {
    const Index mv = plant.m_v();
    const Index mu = plant.m_u();
    const CMat pencil = s * plant.E().cast<cplx>() - plant.A_xx().cast<cplx>();
    CMat rhs(plant.m_x(), mv + mu);
    rhs << plant.B_xv().cast<cplx>(), plant.B_xu().cast<cplx>();
    const CMat X = solve_or_throw(pencil, rhs, "s is a generalized eigenvalue of (E, A_xx)");
    const CMat Y = plant.C_yx().cast<cplx>() * X;
    const CMat Z = plant.C_zx().cast<cplx>() * X;
    GBlocks g;
    g.yv = plant.D_yv().cast<cplx>() + Y.leftCols(mv);
    g.yu = plant.D_yu().cast<cplx>() + Y.rightCols(mu);
    g.zv = plant.D_zv().cast<cplx>() + Z.leftCols(mv);
    g.zu = plant.D_zu().cast<cplx>() + Z.rightCols(mu);
    return g;
}

CMat eval_tfm(const LftPlant& plant, const ParameterVector& theta, cplx s) {
    const Mat P = plant.P(theta);
    wellposed_inverse(plant, P);
    GBlocks g;
    try {
        g = eval_g(plant, s);
    } catch (const SingularPencil&) {
        return eval_tfm_state_space(plant, theta, s);
    }
    const CMat Pc = P.cast<cplx>();
    const CMat loop = CMat::Identity(plant.m_z(), plant.m_z()) - g.zv * Pc;
    // With sE - A_xx invertible, I - G_zv P is singular exactly when sE - A(theta) is.
    const CMat inner = solve_or_throw(loop, g.zu, "s is a generalized eigenvalue of (E, A(theta))");
    return g.yu + g.yv * Pc * inner;
}

CMat tfm_derivative(const Mat& E, const SystemMatrices& sys, cplx s, int k) {
    if (k < 1) throw DimensionMismatch("derivative order must be positive");
    const CMat pencil = s * E.cast<cplx>() - sys.A.cast<cplx>();
    Eigen::JacobiSVD<CMat> svd(pencil, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    if (sv.size() > 0 && (sv(0) == 0.0 || sv(sv.size() - 1) <= rank_threshold(pencil.rows(), pencil.cols(), sv(0))))
        throw SingularPencil("s is a generalized eigenvalue of (E, A(theta))");
    const CMat Ec = E.cast<cplx>();
    CMat term = svd.solve(sys.B.cast<cplx>());
    double factorial = 1.0;
    for (int i = 1; i <= k; ++i) {
        term = -svd.solve(Ec * term);
        factorial *= i;
    }
    return factorial * (sys.C.cast<cplx>() * term);
}

CMat tfm_derivative(const LftPlant& plant, const ParameterVector& theta, cplx s, int k) {
    return tfm_derivative(plant.E(), assemble(plant, theta), s, k);
}

PencilSpectrum analyze_pencil(const Mat& E, const Mat& A) {
    PencilSpectrum out;
    const Index n = E.rows();
    if (n == 0) {
        out.regular = out.probe_regular = true;
        return out;
    }
    const double eps = std::numeric_limits<double>::epsilon();
    const double scale_e = std::max(E.norm(), std::numeric_limits<double>::min());
    const double scale_a = std::max(A.norm(), std::numeric_limits<double>::min());
    const double tol_beta = 100.0 * static_cast<double>(n) * eps * std::max(scale_e, scale_a);
    const double tol_alpha = 100.0 * static_cast<double>(n) * eps * std::max(scale_e, scale_a);

    Eigen::GeneralizedEigenSolver<Mat> ges(A, E, false);
    const auto alphas = ges.alphas();
    const auto betas = ges.betas();
    bool all_indeterminate = true;
    for (Index i = 0; i < n; ++i) {
        const bool a0 = std::abs(alphas(i)) <= tol_alpha;
        const bool b0 = std::abs(betas(i)) <= tol_beta;
        if (!(a0 && b0)) all_indeterminate = false;
        if (b0) {
            ++out.infinite_count;
        } else {
            out.finite.push_back(alphas(i) / betas(i));
        }
    }
    out.qz_indeterminate = all_indeterminate;

    // Three random probes of det(s0 E - A); fixed seed keeps the report reproducible.
    std::mt19937_64 rng(0x5eedULL);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    const double radius = 1.0 + scale_a / scale_e;
    for (int probe = 0; probe < 3 && !out.probe_regular; ++probe) {
        const cplx s0(radius * unit(rng), radius * unit(rng));
        const CMat m = s0 * E.cast<cplx>() - A.cast<cplx>();
        if (!numerically_singular(m)) out.probe_regular = true;
    }
    out.regular = !out.qz_indeterminate && out.probe_regular;
    if (!out.regular) {
        out.finite.clear();
        out.infinite_count = 0;
    }
    std::sort(out.finite.begin(), out.finite.end(), [](cplx a, cplx b) {
        return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
    });
    return out;
}

AssumptionReport check_assumptions(const LftPlant& plant, const ParameterVector& theta) {
    AssumptionReport rep;
    if (theta.size() != plant.m_theta()) return rep;
    rep.in_box = plant.in_box(theta);
    const Mat P = plant.P(theta);
    const Mat M = Mat::Identity(plant.m_v(), plant.m_v()) - P * plant.D_zv();
    const RankInfo wp = full_row_rank(M);
    rep.well_posed = wp.full;
    rep.well_posed_sigma_min = wp.sigma_min;
    if (!rep.well_posed) return rep;

    const SystemMatrices sys = assemble(plant, theta);
    const PencilSpectrum ps = analyze_pencil(plant.E(), sys.A);
    rep.regular = ps.regular;
    rep.eigenvalues = ps.finite;
    rep.infinite_eigenvalues = ps.infinite_count;
    rep.stable = ps.regular && std::all_of(ps.finite.begin(), ps.finite.end(), [](cplx l) { return l.real() < 0.0; });
    return rep;
}

std::string AssumptionReport::describe() const {
    std::ostringstream os;
    os << "regular=" << (regular ? "yes" : "no") << " well_posed=" << (well_posed ? "yes" : "no")
       << " stable=" << (stable ? "yes" : "no") << " in_box=" << (in_box ? "yes" : "no") << " eigenvalues=[";
    for (std::size_t i = 0; i < eigenvalues.size(); ++i) {
        if (i) os << ", ";
        os << eigenvalues[i].real();
        if (eigenvalues[i].imag() != 0.0) os << (eigenvalues[i].imag() > 0 ? "+" : "") << eigenvalues[i].imag() << "j";
    }
    os << "]";
    if (infinite_eigenvalues) os << " infinite=" << infinite_eigenvalues;
    return os.str();
}

}  // namespace lftid
