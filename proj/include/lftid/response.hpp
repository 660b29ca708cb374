#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "lftid/igs.hpp"
#include "lftid/model.hpp"

namespace lftid {

// Solution of  E X - Z = 0,  A X + B Pi - Z Xi = 0  and the transient seed
// xbar0 = E x(0) - Z xi(0).
struct SteadyStateMaps {
    Mat X, Z;
    Vec xbar0;
};

struct SampleSet {
    std::vector<double> times;
    Mat y;  // m_y x N, column k is y_m(t_k)
    double noise_sigma = 0.0;
    std::uint64_t seed = 0;

    Index size() const noexcept { return static_cast<Index>(times.size()); }
    Index m_y() const noexcept { return y.rows(); }
    // Throws DimensionMismatch unless times are strictly increasing and match y.
    void validate() const;
};

void write_samples_csv(std::ostream& os, const SampleSet& s);
void write_samples_csv(const std::string& path, const SampleSet& s);
SampleSet read_samples_csv(std::istream& is);
SampleSet read_samples_csv(const std::string& path);

// Generator with one real Jordan block: Xi = T L T^-1, L upper bidiagonal with lambda_r.
struct JordanGenerator {
    double lambda_r = 0.0;
    Index m_xi = 1;
    Mat T;
    Mat Pi_out;
    Vec xi0;

    Mat Lambda() const;
    Mat Xi() const;
};

// Throws SharedEigenvalue when a generator eigenvalue lies within
// shared_tol * (1 + spectral radius) of a finite eigenvalue of (E, A).
void require_disjoint_spectra(const Mat& E, const Mat& A, const std::vector<cplx>& generator_eigs);

SteadyStateMaps solve_steady_maps(const LftPlant& plant, const ParameterVector& theta, const InputGenerator& gen);
SteadyStateMaps solve_steady_maps(const LftPlant& plant, const ParameterVector& theta, const InputGenerator& gen,
                                  const Vec& x0);

// [H(l_1) pibar_1, ..., H(l_n) pibar_n] T^-1 (real).
Mat steady_matrix_from_tfm(const LftPlant& plant, const ParameterVector& theta, const Spectrum& spec);

// y_s(t) from the real-eigenvalue exponentials and the rotation blocks of each pair.
Vec steady_output(const LftPlant& plant, const ParameterVector& theta, const InputGenerator& gen, double t);

// Evaluates C L^-1{(sE - A)^-1} w at t > 0 for a regular pencil of index <= 1.
class TransientPropagator {
public:
    TransientPropagator(const Mat& E, const Mat& A, const Mat& C);
    Vec operator()(const Vec& w, double t) const;
    // Projected state-space form: y = C expm(F t) G w.
    const Mat& F() const noexcept { return F_; }
    const Mat& G() const noexcept { return G_; }

private:
    Mat C_, F_, G_;
    bool diagonal_ = false;
    CMat V_, Vinv_;
    CVec eigs_;
};

Vec transient_output(const LftPlant& plant, const ParameterVector& theta, const Vec& x0, const InputGenerator& gen,
                     double t);

// Noise-free outputs y(t_k) = y_s(t_k) + y_t(t_k), column k per instant.
Mat simulate_outputs(const LftPlant& plant, const ParameterVector& theta, const Vec& x0, const InputGenerator& gen,
                     const std::vector<double>& times);

// y_m(t_k) = y(t_k) + n(t_k), n iid N(0, sigma^2) drawn from std::mt19937_64(seed)
// with std::normal_distribution, in (k, output) order.
SampleSet simulate_samples(const LftPlant& plant, const ParameterVector& theta, const Vec& x0,
                           const InputGenerator& gen, const std::vector<double>& times, double sigma,
                           std::uint64_t seed);

// Steady-state matrix C X + D Pi for a single-Jordan-block generator, built from
// TFM values and derivatives at lambda_r.
Mat steady_matrix_jordan(const LftPlant& plant, const ParameterVector& theta, const JordanGenerator& jgen);

// H pi evaluated through the real and imaginary parts of H and pi.
CVec tangential_value(const CMat& H_at_lambda, const CVec& pi);

}  // namespace lftid
