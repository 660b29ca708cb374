#include "lftid/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <iomanip>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

namespace lftid {

std::vector<double> generate_times(const GapLaw& law, Index N, double t_start, std::uint64_t seed) {
    if (t_start < 0.0) throw DimensionMismatch("t_start must be non-negative");
    if (!(law.min > 0.0) || law.max < law.min) throw DimensionMismatch("gap law needs 0 < min <= max");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> gap(law.min, law.max);
    std::vector<double> t;
    t.reserve(static_cast<std::size_t>(std::max<Index>(N, 0)));
    double now = t_start;
    for (Index k = 0; k < N; ++k) {
        now += law.min == law.max ? law.min : gap(rng);
        t.push_back(now);
    }
    return t;
}

double settle_time(const LftPlant& plant, const ParameterVector& theta, double band_fraction) {
    if (!(band_fraction > 0.0)) throw DimensionMismatch("settling band must be positive");
    const AssumptionReport rep = check_assumptions(plant, theta);
    if (!rep.well_posed) throw WellPosednessViolated("I - P(theta) D_zv is singular");
    if (!rep.regular) throw SingularPencil("the pencil (E, A(theta)) is not regular");
    if (!rep.stable) throw Unstable("the plant has an eigenvalue with non-negative real part; no step response settles");
    if (rep.eigenvalues.empty()) return 0.0;
    double slowest = -std::numeric_limits<double>::infinity();
    for (cplx l : rep.eigenvalues) slowest = std::max(slowest, l.real());
    const double horizon = 50.0 / std::abs(slowest);
    const double dt = 1e-3;
    const auto steps = static_cast<std::size_t>(std::ceil(horizon / dt));
    std::vector<double> grid(steps + 1);
    for (std::size_t i = 0; i <= steps; ++i) grid[i] = dt * static_cast<double>(i);

    const SystemMatrices sys = assemble(plant, theta);
    const CMat H0 = eval_tfm_state_space(plant.E(), sys, cplx(0.0, 0.0));
    double settle = 0.0;
    for (Index j = 0; j < plant.m_u(); ++j) {
        // Unit step on input j as the output of a constant generator.
        Mat Pi = Mat::Zero(plant.m_u(), 1);
        Pi(j, 0) = 1.0;
        const InputGenerator step(Mat::Zero(1, 1), Pi, Vec::Ones(1));
        const Mat Y = simulate_outputs(plant, theta, Vec::Zero(plant.m_x()), step, grid);
        for (Index i = 0; i < plant.m_y(); ++i) {
            const double yf = H0(i, j).real();
            double ref = std::abs(yf);
            if (ref <= 1e-12 * Y.row(i).cwiseAbs().maxCoeff()) ref = Y.row(i).cwiseAbs().maxCoeff();
            const double band = band_fraction * ref;
            for (Index k = static_cast<Index>(steps); k >= 0; --k) {
                if (std::abs(Y(i, k) - yf) > band) {
                    settle = std::max(settle, grid[static_cast<std::size_t>(std::min<Index>(k + 1, steps))]);
                    break;
                }
            }
        }
    }
    return settle;
}

double relative_error(const ParameterVector& truth, const ParameterVector& estimate) {
    if (truth.size() != estimate.size()) throw DimensionMismatch("parameter vectors differ in length");
    double acc = 0.0;
    for (Index i = 0; i < truth.size(); ++i) {
        if (truth[i] == 0.0) throw ZeroTrueParameter("relative error is undefined for a zero true parameter");
        const double r = (truth[i] - estimate[i]) / truth[i];
        acc += r * r;
    }
    return std::sqrt(acc);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b) {
    // splitmix64 finalizer applied to a mix of the three inputs.
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    return mix(mix(mix(master) ^ a) ^ (b * 0xd6e8feb86659fd93ULL));
}

std::string to_string(DlseStatus s) {
    switch (s) {
        case DlseStatus::Converged: return "converged";
        case DlseStatus::MaxIter: return "max_iter";
        case DlseStatus::NumericalFailure: return "numerical_failure";
        case DlseStatus::Diverged: return "diverged";
    }
    return "unknown";
}

namespace {

// Stacked residual y_m - y(theta); false when the model cannot be evaluated.
bool residual(const LftPlant& plant, const InputGenerator& gen, const Vec& x0, const SampleSet& samples,
              const Vec& theta, Vec& r) {
    try {
        const Mat Y = simulate_outputs(plant, ParameterVector(theta), x0, gen, samples.times);
        const Mat R = samples.y - Y;
        r = Eigen::Map<const Vec>(R.data(), R.size());
        return r.allFinite();
    } catch (const Error&) {
        return false;
    }
}

}  // namespace

double dlse_cost(const LftPlant& plant, const InputGenerator& gen, const Vec& x0, const SampleSet& samples,
                 const ParameterVector& theta) {
    Vec r;
    if (!residual(plant, gen, x0, samples, theta.values(), r)) return std::numeric_limits<double>::infinity();
    return r.squaredNorm() / static_cast<double>(std::max<Index>(samples.size(), 1));
}

DlseResult dlse_fit(const LftPlant& plant, const InputGenerator& gen, const Vec& x0, const SampleSet& samples,
                    const ParameterVector& init, const DlseOptions& opt) {
    plant.require_parameter_size(init);
    const Index p = init.size();
    const double n = static_cast<double>(std::max<Index>(samples.size(), 1));
    DlseResult out;
    out.init = init;
    out.theta = init;
    Vec theta = init.values();
    Vec r;
    if (!residual(plant, gen, x0, samples, theta, r)) {
        out.cost = std::numeric_limits<double>::infinity();
        out.status = DlseStatus::NumericalFailure;
        return out;
    }
    double cost = r.squaredNorm() / n;
    double damping = opt.damping0;
    out.status = DlseStatus::MaxIter;

    for (int it = 0; it < opt.max_iter; ++it) {
        out.iterations = it + 1;
        Mat J(r.size(), p);
        bool ok = true;
        for (Index i = 0; i < p && ok; ++i) {
            const double h = 1e-6 * (1.0 + std::abs(theta(i)));
            Vec tp = theta, tm = theta, rp, rm;
            tp(i) += h;
            tm(i) -= h;
            ok = residual(plant, gen, x0, samples, tp, rp) && residual(plant, gen, x0, samples, tm, rm);
            if (ok) J.col(i) = (rp - rm) / (2.0 * h);  // Jacobian of the residual
        }
        if (!ok || !J.allFinite()) {
            out.status = DlseStatus::NumericalFailure;
            break;
        }
        const Vec grad = 2.0 / n * J.transpose() * r;
        if (grad.cwiseAbs().maxCoeff() <= opt.grad_tol) {
            out.status = DlseStatus::Converged;
            break;
        }
        const Mat JtJ = J.transpose() * J;
        const Vec rhs = -J.transpose() * r;
        Vec scale = JtJ.diagonal().cwiseMax(1e-12 * std::max(1.0, JtJ.diagonal().maxCoeff()));
        bool accepted = false;
        Vec step;
        while (damping <= opt.damping_max) {
            Mat M = JtJ;
            M.diagonal() += damping * scale;
            step = M.ldlt().solve(rhs);
            if (step.allFinite()) {
                Vec rn;
                const Vec cand = theta + step;
                if (residual(plant, gen, x0, samples, cand, rn)) {
                    const double cn = rn.squaredNorm() / n;
                    if (cn < cost) {
                        theta = cand;
                        r = rn;
                        cost = cn;
                        damping = std::max(damping / opt.damping_down, 1e-15);
                        accepted = true;
                        break;
                    }
                }
            }
            damping *= opt.damping_up;
        }
        if (!accepted) {
            // No damping level reduces J any further: a stationary point to working precision.
            out.status = DlseStatus::Converged;
            break;
        }
        if (theta.norm() > opt.diverge_norm) {
            out.status = DlseStatus::Diverged;
            break;
        }
        if (step.norm() <= opt.step_tol * (theta.norm() + opt.step_tol)) {
            out.status = DlseStatus::Converged;
            break;
        }
    }
    out.theta = ParameterVector(theta);
    out.cost = cost;
    return out;
}

ParameterVector draw_in_box(const LftPlant& plant, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Vec t(plant.m_theta());
    for (Index i = 0; i < t.size(); ++i) {
        const Interval& iv = plant.theta_box()[static_cast<std::size_t>(i)];
        std::uniform_real_distribution<double> d(iv.lo, iv.hi);
        t(i) = iv.lo == iv.hi ? iv.lo : d(rng);
    }
    return ParameterVector(t);
}

DlseResult dlse_fit(const LftPlant& plant, const InputGenerator& gen, const Vec& x0, const SampleSet& samples,
                    std::uint64_t seed, const DlseOptions& opt) {
    return dlse_fit(plant, gen, x0, samples, draw_in_box(plant, seed), opt);
}

InputGenerator with_real_parts(const InputGenerator& gen, const std::vector<double>& real_parts) {
    const Spectrum spec = decompose(gen);
    if (static_cast<Index>(real_parts.size()) != spec.modes())
        throw DimensionMismatch("need one real part per generator mode");
    const Mat V = real_block_basis(spec);
    Mat L = Mat::Zero(spec.m_xi(), spec.m_xi());
    for (Index i = 0; i < spec.m_r(); ++i) L(i, i) = real_parts[static_cast<std::size_t>(i)];
    for (Index k = 0; k < spec.m_c(); ++k) {
        const Index j = spec.m_r() + 2 * k;
        const double s = real_parts[static_cast<std::size_t>(spec.m_r() + k)];
        const double w = spec.complex_pairs[static_cast<std::size_t>(k)].omega;
        L.block(j, j, 2, 2) << s, -w, w, s;
    }
    const Mat Xi = V * L * V.inverse();
    return InputGenerator(Xi, gen.Pi(), gen.xi0());
}

unsigned worker_count(unsigned requested) {
    unsigned n = requested;
    if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("LFT_IDENT_THREADS")) {
        const long cap = std::strtol(env, nullptr, 10);
        if (cap > 0) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
    }
    return std::max(1u, n);
}

namespace {

std::vector<double> mode_real_parts(const InputGenerator& gen) {
    const Spectrum spec = decompose(gen);
    std::vector<double> out;
    for (Index i = 0; i < spec.modes(); ++i) out.push_back(spec.mode_lambda(i).real());
    return out;
}

double median(std::vector<double> v) {
    v.erase(std::remove_if(v.begin(), v.end(), [](double x) { return !std::isfinite(x); }), v.end());
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

double mean(const std::vector<double>& v) {
    double s = 0.0;
    std::size_t c = 0;
    for (double x : v)
        if (std::isfinite(x)) {
            s += x;
            ++c;
        }
    return c ? s / static_cast<double>(c) : std::numeric_limits<double>::quiet_NaN();
}

// Stream identifiers for derive_seed.
enum Stream : std::uint64_t { kTruth = 1, kTimes = 2, kNoise = 3, kPreTimes = 4, kPreNoise = 5, kInit = 6 };

}  // namespace

TrialResult run_trial(const LftPlant& plant, const InputGenerator& gen, const ExperimentConfig& cfg, double settle,
                      Index cell, double sigma, Index N, const GeneratorCell& gcell, int trial) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto tr = static_cast<std::uint64_t>(trial);
    TrialResult res;
    res.cell = cell;
    res.trial = trial;
    res.sigma = sigma;
    res.N = N;
    res.theta_true = cfg.theta_true ? *cfg.theta_true : draw_in_box(plant, derive_seed(cfg.seed, kTruth, tr));
    const InputGenerator g = gcell.real_parts.empty() ? gen : with_real_parts(gen, gcell.real_parts);
    res.real_parts = mode_real_parts(g);
    const Vec x0 = cfg.x0.size() ? cfg.x0 : Vec::Zero(plant.m_x());

    // Streams depend on the trial only, so cells see common random numbers
    // (the first N instants and noise draws are shared across sample sizes).
    const std::vector<double> times = generate_times(cfg.gap, N, settle, derive_seed(cfg.seed, kTimes, tr));
    SampleSet samples;
    try {
        samples = simulate_samples(plant, res.theta_true, x0, g, times, sigma, derive_seed(cfg.seed, kNoise, tr));
    } catch (const Error& e) {
        res.proposed_failed = true;
        res.proposed_error = std::string("simulation failed: ") + e.what();
        res.dlse_failed = cfg.run_dlse;
        return res;
    }

    try {
        const Identification id = identify(plant, g, samples);
        res.theta_proposed = id.theta.theta;
        res.fsN = id.excitation.fsN;
        try {
            res.ere_proposed = relative_error(res.theta_true, id.theta.theta);
        } catch (const ZeroTrueParameter&) {
        }
    } catch (const Error& e) {
        res.proposed_failed = true;
        res.proposed_error = e.what();
    }

    if (cfg.run_dlse) {
        // Pre-settling instants: iid uniform on (0, t_bar_s), sorted.
        std::mt19937_64 rng(derive_seed(cfg.seed, kPreTimes, tr));
        std::uniform_real_distribution<double> u(0.0, settle);
        std::vector<double> pre;
        while (static_cast<Index>(pre.size()) < cfg.pre_settle_samples + 1) {
            const double t = u(rng);
            if (t > 0.0 && std::find(pre.begin(), pre.end(), t) == pre.end()) pre.push_back(t);
        }
        std::sort(pre.begin(), pre.end());
        SampleSet all;
        try {
            const SampleSet early =
                simulate_samples(plant, res.theta_true, x0, g, pre, sigma, derive_seed(cfg.seed, kPreNoise, tr));
            all.times = early.times;
            all.times.insert(all.times.end(), samples.times.begin(), samples.times.end());
            all.y.resize(samples.m_y(), static_cast<Index>(all.times.size()));
            all.y << early.y, samples.y;
            res.noise_floor = dlse_cost(plant, g, x0, all, res.theta_true);
            DlseResult d = dlse_fit(plant, g, x0, all, derive_seed(cfg.seed, kInit, tr), cfg.dlse);
            res.dlse_failed = d.status != DlseStatus::Converged;
            try {
                res.ere_dlse = relative_error(res.theta_true, d.theta);
            } catch (const ZeroTrueParameter&) {
            }
            res.dlse = std::move(d);
        } catch (const Error&) {
            res.dlse_failed = true;
        }
        if (std::isfinite(res.ere_dlse) && std::isfinite(res.ere_proposed))
            res.dlse_local_minimum = res.ere_dlse > 10.0 * res.ere_proposed;
    }
    res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

MonteCarloResult monte_carlo(const LftPlant& plant, const InputGenerator& gen, const ExperimentConfig& cfg) {
    if (cfg.trials < 1) throw DimensionMismatch("trials must be positive");
    for (Index N : cfg.Ns)
        if (N < 1) throw DimensionMismatch("N must be positive");
    MonteCarloResult out;
    out.config_hash = config_hash(plant, gen, cfg);
    out.settle = cfg.settle >= 0.0
                     ? cfg.settle
                     : settle_time(plant, ParameterVector(Vec::Zero(plant.m_theta())), cfg.settle_band);

    struct Cell {
        double sigma;
        Index N;
        GeneratorCell g;
    };
    std::vector<Cell> cells;
    for (const auto& g : cfg.generators)
        for (double s : cfg.sigmas)
            for (Index N : cfg.Ns) cells.push_back({s, N, g});

    const std::size_t total = cells.size() * static_cast<std::size_t>(cfg.trials);
    out.trials.resize(total);
    std::atomic<std::size_t> next{0};
    auto work = [&]() {
        for (std::size_t job = next++; job < total; job = next++) {
            const std::size_t c = job / static_cast<std::size_t>(cfg.trials);
            const int trial = static_cast<int>(job % static_cast<std::size_t>(cfg.trials));
            const Cell& cell = cells[c];
            out.trials[job] = run_trial(plant, gen, cfg, out.settle, static_cast<Index>(c), cell.sigma, cell.N, cell.g, trial);
        }
    };
    const unsigned workers = std::min<unsigned>(worker_count(cfg.threads), static_cast<unsigned>(std::max<std::size_t>(total, 1)));
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }

    for (std::size_t c = 0; c < cells.size(); ++c) {
        CellSummary s;
        s.sigma = cells[c].sigma;
        s.N = cells[c].N;
        s.trials = cfg.trials;
        std::vector<double> ep, ed, sq;
        for (int k = 0; k < cfg.trials; ++k) {
            const TrialResult& t = out.trials[c * static_cast<std::size_t>(cfg.trials) + static_cast<std::size_t>(k)];
            if (k == 0) s.real_parts = t.real_parts;
            if (t.proposed_failed) ++s.proposed_fail_count;
            ep.push_back(t.ere_proposed);
            if (t.theta_proposed) sq.push_back((t.theta_proposed->values() - t.theta_true.values()).squaredNorm());
            if (cfg.run_dlse) {
                if (t.dlse_failed) ++s.dlse_fail_count;
                else ed.push_back(t.ere_dlse);
            }
        }
        s.median_ere_proposed = median(ep);
        s.mean_ere_proposed = mean(ep);
        s.mean_sq_error_proposed = mean(sq);
        if (cfg.run_dlse) s.median_ere_dlse = median(ed);
        out.cells.push_back(s);
    }
    return out;
}

std::uint64_t config_hash(const LftPlant& plant, const InputGenerator& gen, const ExperimentConfig& cfg) {
    std::ostringstream os;
    os << std::setprecision(17);
    auto mat = [&](const char* name, const Mat& m) {
        os << name << ":" << m.rows() << "x" << m.cols();
        for (Index j = 0; j < m.cols(); ++j)
            for (Index i = 0; i < m.rows(); ++i) os << "," << m(i, j);
        os << ";";
    };
    mat("E", plant.E());
    mat("A_xx", plant.A_xx());
    mat("B_xu", plant.B_xu());
    mat("B_xv", plant.B_xv());
    mat("C_yx", plant.C_yx());
    mat("C_zx", plant.C_zx());
    mat("D_zu", plant.D_zu());
    mat("D_zv", plant.D_zv());
    mat("D_yu", plant.D_yu());
    mat("D_yv", plant.D_yv());
    for (const auto& P : plant.basis()) mat("P", P);
    for (const auto& iv : plant.theta_box()) os << "box:" << iv.lo << "," << iv.hi << ";";
    mat("Xi", gen.Xi());
    mat("Pi", gen.Pi());
    mat("xi0", gen.xi0());
    if (cfg.theta_true) mat("theta_true", cfg.theta_true->values());
    mat("x0", cfg.x0);
    os << "gap:" << cfg.gap.min << "," << cfg.gap.max << ";settle:" << cfg.settle << ";band:" << cfg.settle_band
       << ";pre:" << cfg.pre_settle_samples << ";trials:" << cfg.trials << ";dlse:" << cfg.run_dlse << ";";
    for (double s : cfg.sigmas) os << "sigma:" << s << ";";
    for (Index N : cfg.Ns) os << "N:" << N << ";";
    for (const auto& g : cfg.generators) {
        os << "gen:";
        for (double r : g.real_parts) os << r << ",";
        os << ";";
    }
    os << "dlse_opt:" << cfg.dlse.max_iter << "," << cfg.dlse.grad_tol << "," << cfg.dlse.step_tol << ","
       << cfg.dlse.damping0 << ";";
    const Numerics& num = numerics();
    os << "num:" << num.rank_tol << "," << num.distinct_tol << "," << num.shared_tol << "," << num.defective_tol << ","
       << num.real_tol << ";";

    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : os.str()) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

namespace {
void write_part(std::ostream& os, const std::vector<double>& parts, std::size_t i) {
    os << ",";
    if (i < parts.size()) os << parts[i];
}
}  // namespace

void write_summary_csv(std::ostream& os, const MonteCarloResult& r) {
    os << "sigma,N,sigma1,sigma2,trials,median_Ere_proposed,mean_Ere_proposed,median_Ere_dlse,dlse_fail_count\n";
    os << std::setprecision(10);
    for (const auto& c : r.cells) {
        os << c.sigma << "," << c.N;
        write_part(os, c.real_parts, 0);
        write_part(os, c.real_parts, 1);
        os << "," << c.trials << "," << c.median_ere_proposed << "," << c.mean_ere_proposed << ",";
        if (std::isfinite(c.median_ere_dlse)) os << c.median_ere_dlse;
        os << "," << c.dlse_fail_count << "\n";
    }
}

void write_trials_csv(std::ostream& os, const MonteCarloResult& r) {
    const Index nt = r.trials.empty() ? 0 : r.trials.front().theta_true.size();
    os << "cell,trial,sigma,N,sigma1,sigma2";
    for (Index i = 0; i < nt; ++i) os << ",theta_true_" << i + 1;
    for (Index i = 0; i < nt; ++i) os << ",theta_proposed_" << i + 1;
    os << ",Ere_proposed,proposed_failed";
    for (Index i = 0; i < nt; ++i) os << ",theta_dlse_" << i + 1;
    os << ",Ere_dlse,dlse_status,dlse_iterations,dlse_cost,noise_floor,dlse_local_minimum,fsN,seconds\n";
    os << std::setprecision(17);
    for (const auto& t : r.trials) {
        os << t.cell << "," << t.trial << "," << t.sigma << "," << t.N;
        write_part(os, t.real_parts, 0);
        write_part(os, t.real_parts, 1);
        for (Index i = 0; i < nt; ++i) os << "," << t.theta_true[i];
        for (Index i = 0; i < nt; ++i) {
            os << ",";
            if (t.theta_proposed) os << (*t.theta_proposed)[i];
        }
        os << "," << t.ere_proposed << "," << (t.proposed_failed ? 1 : 0);
        for (Index i = 0; i < nt; ++i) {
            os << ",";
            if (t.dlse) os << t.dlse->theta[i];
        }
        os << "," << t.ere_dlse << ",";
        if (t.dlse) os << to_string(t.dlse->status) << "," << t.dlse->iterations << "," << t.dlse->cost;
        else os << ",,";
        os << "," << t.noise_floor << "," << (t.dlse_local_minimum ? 1 : 0) << "," << t.fsN << "," << t.seconds << "\n";
    }
}

}  // namespace lftid
