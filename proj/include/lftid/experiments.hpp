#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "lftid/estimation.hpp"
#include "lftid/igs.hpp"
#include "lftid/model.hpp"
#include "lftid/response.hpp"

namespace lftid {

// Sampling gaps iid uniform on [min, max]; min == max gives a constant gap.
struct GapLaw {
    double min = 0.2;
    double max = 1.0;
};

// t_1 = t_start + g_1, t_k = t_{k-1} + g_k.
std::vector<double> generate_times(const GapLaw& law, Index N, double t_start, std::uint64_t seed);

// Smallest t after which every step response channel stays within
// band_fraction * |final value| of its final value. 1 ms grid out to
// 50 / |Re l| of the slowest eigenvalue. Throws Unstable.
double settle_time(const LftPlant& plant, const ParameterVector& theta, double band_fraction);

// sqrt(sum ((theta_i - hat_i) / theta_i)^2). Throws ZeroTrueParameter.
double relative_error(const ParameterVector& truth, const ParameterVector& estimate);

// Deterministic child seed for (master, a, b).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0);

enum class DlseStatus { Converged, MaxIter, NumericalFailure, Diverged };
std::string to_string(DlseStatus s);

struct DlseOptions {
    int max_iter = 200;
    double grad_tol = 1e-10;  // on the infinity norm of grad J
    double step_tol = 1e-12;  // relative step size regarded as stagnation
    double damping0 = 1e-3;
    double damping_up = 10.0;
    double damping_down = 10.0;
    double damping_max = 1e12;
    double diverge_norm = 1e6;
};

struct DlseResult {
    ParameterVector theta;
    ParameterVector init;
    double cost = 0.0;  // J(theta)
    int iterations = 0;
    DlseStatus status = DlseStatus::NumericalFailure;
};

// J(theta) = mean over samples of ||y_m(t_k) - y(t_k, theta)||^2 with the
// plant started at x0; infinite when the model cannot be evaluated at theta.
double dlse_cost(const LftPlant& plant, const InputGenerator& gen, const Vec& x0, const SampleSet& samples,
                 const ParameterVector& theta);

// Damped Gauss-Newton on J from the given start.
DlseResult dlse_fit(const LftPlant& plant, const InputGenerator& gen, const Vec& x0, const SampleSet& samples,
                    const ParameterVector& init, const DlseOptions& opt = {});

// Same, with the start drawn uniformly from the plant's theta_box.
DlseResult dlse_fit(const LftPlant& plant, const InputGenerator& gen, const Vec& x0, const SampleSet& samples,
                    std::uint64_t seed, const DlseOptions& opt = {});

ParameterVector draw_in_box(const LftPlant& plant, std::uint64_t seed);

// Generator with the real part of each mode moved to the given values (one per
// mode: reals first, then pairs); eigenvectors are kept.
InputGenerator with_real_parts(const InputGenerator& gen, const std::vector<double>& real_parts);

struct GeneratorCell {
    std::vector<double> real_parts;  // as passed to with_real_parts; empty keeps the generator
};

struct ExperimentConfig {
    std::optional<ParameterVector> theta_true;  // fixed truth; otherwise uniform over theta_box per trial
    Vec x0;                                     // empty means zero
    GapLaw gap;
    double settle = -1.0;                       // t_bar_s; negative means compute from nominal theta
    double settle_band = 1.3e-4;                // fraction of the final value defining "settled"
    Index pre_settle_samples = 10;
    std::vector<double> sigmas{0.25};
    std::vector<Index> Ns{100};
    std::vector<GeneratorCell> generators{GeneratorCell{}};
    int trials = 10;
    bool run_dlse = false;
    DlseOptions dlse;
    std::uint64_t seed = 1;
    unsigned threads = 0;  // 0: LFT_IDENT_THREADS or hardware concurrency
};

struct TrialResult {
    Index cell = 0;
    int trial = 0;
    double sigma = 0.0;
    Index N = 0;
    std::vector<double> real_parts;
    ParameterVector theta_true;
    std::optional<ParameterVector> theta_proposed;
    double ere_proposed = std::numeric_limits<double>::quiet_NaN();
    bool proposed_failed = false;
    std::string proposed_error;
    std::optional<DlseResult> dlse;
    double ere_dlse = std::numeric_limits<double>::quiet_NaN();
    bool dlse_failed = false;
    bool dlse_local_minimum = false;
    double noise_floor = 0.0;  // J at theta_true
    double fsN = 0.0;
    double seconds = 0.0;
};

struct CellSummary {
    double sigma = 0.0;
    Index N = 0;
    std::vector<double> real_parts;
    int trials = 0;
    double median_ere_proposed = 0.0;
    double mean_ere_proposed = 0.0;
    double median_ere_dlse = std::numeric_limits<double>::quiet_NaN();
    int dlse_fail_count = 0;
    int proposed_fail_count = 0;
    double mean_sq_error_proposed = 0.0;  // mean ||theta_hat - theta||^2
};

struct MonteCarloResult {
    std::vector<TrialResult> trials;
    std::vector<CellSummary> cells;
    std::uint64_t config_hash = 0;
    double settle = 0.0;
};

// One trial: draws truth, sampling instants and noise from seeds derived from
// (config.seed, cell, trial), runs the two-step estimator and optionally DLSE.
TrialResult run_trial(const LftPlant& plant, const InputGenerator& gen, const ExperimentConfig& cfg, double settle,
                      Index cell, double sigma, Index N, const GeneratorCell& gcell, int trial);

MonteCarloResult monte_carlo(const LftPlant& plant, const InputGenerator& gen, const ExperimentConfig& cfg);

// FNV-1a over a canonical text rendering of everything except the seed.
std::uint64_t config_hash(const LftPlant& plant, const InputGenerator& gen, const ExperimentConfig& cfg);

unsigned worker_count(unsigned requested);

void write_summary_csv(std::ostream& os, const MonteCarloResult& r);
void write_trials_csv(std::ostream& os, const MonteCarloResult& r);

}  // namespace lftid
