#pragma once

#include <string>

#include "lftid/experiments.hpp"
#include "lftid/igs.hpp"
#include "lftid/model.hpp"
#include "lftid/numerics.hpp"

namespace lftid {

// Everything one YAML run file describes. Layout:
//
//   plant:      E, A_xx, B_xu, B_xv, C_yx, C_zx, D_zu, D_zv, D_yu, D_yv  (row-major nested lists;
//               E defaults to I, D_* to zero), P: [list of matrices], theta_box: [[lo, hi], ...]
//   generator:  Xi, Pi, xi0
//   experiment: theta_true, x0, N, sigma, seed, gap: [min, max], settle_time, settle_band,
//               pre_settle_samples, threads, dlse: {max_iter, grad_tol},
//               montecarlo: {sigmas, Ns, generator_real_parts, trials, dlse, random_theta}
//   numerics:   rank_tol, distinct_tol, shared_tol, defective_tol, real_tol
struct RunSetup {
    LftPlant plant;
    InputGenerator generator;
    ExperimentConfig experiment;
    Numerics numerics;
    Index N = 100;
    double sigma = 0.0;
};

// Throws ConfigError on missing files, syntax errors and shape errors.
RunSetup load_config(const std::string& path);
RunSetup parse_config(const std::string& yaml_text);

}  // namespace lftid
