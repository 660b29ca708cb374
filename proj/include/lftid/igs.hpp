#pragma once

#include <string>
#include <vector>

#include "lftid/errors.hpp"
#include "lftid/numerics.hpp"

namespace lftid {

// Autonomous input generator  d/dt xi = Xi xi,  u = Pi xi.
class InputGenerator {
public:
    InputGenerator() = default;
    InputGenerator(Mat Xi, Mat Pi, Vec xi0);

    const Mat& Xi() const noexcept { return Xi_; }
    const Mat& Pi() const noexcept { return Pi_; }
    const Vec& xi0() const noexcept { return xi0_; }
    Index m_xi() const noexcept { return Xi_.rows(); }
    Index m_u() const noexcept { return Pi_.rows(); }

private:
    Mat Xi_, Pi_;
    Vec xi0_;
};

struct ComplexPair {
    double sigma = 0.0;
    double omega = 0.0;  // > 0
    cplx lambda() const { return {sigma, omega}; }
};

// Eigen-structure of Xi. Columns of T are ordered
//   [t_r1, ..., t_rmr, t_c1, conj(t_c1), ..., t_cmc, conj(t_cmc)]
// where t_ci belongs to sigma_i + j omega_i. Every eigenvector is scaled so its
// first non-negligible entry equals 1.
struct Spectrum {
    std::vector<double> real_eigs;
    std::vector<ComplexPair> complex_pairs;
    CMat T;
    CMat T_inv;
    // Pi t for each column of T (conjugate columns included).
    std::vector<CVec> pi_bars;
    std::vector<std::string> warnings;

    Index m_r() const noexcept { return static_cast<Index>(real_eigs.size()); }
    Index m_c() const noexcept { return static_cast<Index>(complex_pairs.size()); }
    Index m_xi() const noexcept { return m_r() + 2 * m_c(); }
    // m_r + 2 m_c: number of real regressor blocks per sample.
    Index blocks() const noexcept { return m_r() + 2 * m_c(); }
    // Number of distinct eigenvalues up to conjugation (m_r + m_c).
    Index modes() const noexcept { return m_r() + m_c(); }
    // Representative eigenvalue of mode i (reals first, then sigma + j omega).
    cplx mode_lambda(Index i) const;
    // Column of T / entry of pi_bars that carries mode i.
    Index mode_column(Index i) const { return i < m_r() ? i : m_r() + 2 * (i - m_r()); }
    // Eigenvalue belonging to column j of T.
    cplx column_lambda(Index j) const;
};

Spectrum decompose(const InputGenerator& gen);

// Real basis V with Xi V = V L, L block diagonal: real eigenvalues, then
// [[sigma, -omega], [omega, sigma]] per pair. V's pair columns are [Re t, -Im t].
Mat real_block_basis(const Spectrum& spec);

// xi(t) = expm(Xi t) xi(0).
Vec state_at(const InputGenerator& gen, double t);

struct XiBar {
    std::vector<double> real;
    std::vector<cplx> complex;
};

// Splits T^-1 xi into the real components and one complex value per pair.
XiBar xi_bar_components(const Spectrum& spec, const Vec& xi_t);

}  // namespace lftid
