#pragma once

#include <complex>

#include <Eigen/Dense>

namespace lftid {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using cplx = std::complex<double>;
using Index = Eigen::Index;

// Tolerances shared by every rank and distinctness decision in the library.
// Set once at start-up (the CLI does this from the `numerics` table); all
// later reads are concurrent-safe.
struct Numerics {
    // Relative singular-value threshold. Zero selects max(rows, cols) * eps.
    double rank_tol = 0.0;
    // Two generator eigenvalues are distinct when |l_i - l_j| > distinct_tol * (1 + max|l|).
    double distinct_tol = 1e-8;
    // Generator eigenvalues must stay shared_tol * (1 + spectral radius) away from plant eigenvalues.
    double shared_tol = 1e-6;
    // Eigenvector matrices with sigma_min / sigma_max below this are treated as defective.
    double defective_tol = 1e-8;
    // Imaginary residue allowed on quantities that must be real.
    double real_tol = 1e-8;
};

const Numerics& numerics();
void set_numerics(const Numerics& n);

// Scoped override, mostly for tests.
class NumericsGuard {
public:
    explicit NumericsGuard(const Numerics& n) : saved_(numerics()) { set_numerics(n); }
    ~NumericsGuard() { set_numerics(saved_); }
    NumericsGuard(const NumericsGuard&) = delete;
    NumericsGuard& operator=(const NumericsGuard&) = delete;

private:
    Numerics saved_;
};

struct RankInfo {
    bool full = false;
    double sigma_min = 0.0;  // smallest of the min(rows, cols) singular values (0 if the shape forbids full rank)
    double sigma_max = 0.0;
    Index rank = 0;
};

double rank_threshold(Index rows, Index cols, double sigma_max);

RankInfo full_row_rank(const Mat& m);
RankInfo full_column_rank(const Mat& m);

// True when the square matrix is singular under the shared rank tolerance.
bool numerically_singular(const CMat& m);
bool numerically_singular(const Mat& m);

// Columns span the right null space of m (numerical rank from the shared tolerance).
Mat right_null_space(const Mat& m);

// Moore-Penrose pseudo-inverse with the shared rank tolerance.
Mat pseudo_inverse(const Mat& m);

// Column-major vectorization.
Vec vectorize(const Mat& m);

double relative_difference(const CMat& a, const CMat& b);
double relative_difference(const Mat& a, const Mat& b);

}  // namespace lftid
