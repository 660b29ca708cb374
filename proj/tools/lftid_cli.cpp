// Command-line front end: simulate, identify, excitation, montecarlo, baseline.
#include <filesystem>
#include <functional>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "lftid/config.hpp"
#include "lftid/estimation.hpp"
#include "lftid/experiments.hpp"
#include "lftid/response.hpp"

namespace fs = std::filesystem;
using namespace lftid;

namespace {

enum Exit { kOk = 0, kOther = 1, kConfig = 2, kModel = 3, kExcitation = 4, kIdentifiability = 5 };

struct Options {
    std::string config;
    std::string out;
    std::string samples;
    std::optional<std::uint64_t> seed;
    std::optional<double> sigma;
    std::optional<double> tol_rank;
    std::optional<Index> count;
};

RunSetup setup(const Options& o) {
    RunSetup s = load_config(o.config);
    if (o.tol_rank) {
        if (*o.tol_rank < 0) throw ConfigError("--tol-rank must be non-negative");
        s.numerics.rank_tol = *o.tol_rank;
    }
    if (o.seed) s.experiment.seed = *o.seed;
    if (o.sigma) {
        if (*o.sigma < 0) throw ConfigError("--sigma must be non-negative");
        s.sigma = *o.sigma;
        s.experiment.sigmas = {*o.sigma};
    }
    if (o.count) {
        if (*o.count < 1) throw ConfigError("--count must be positive");
        s.N = *o.count;
        s.experiment.Ns = {*o.count};
    }
    set_numerics(s.numerics);
    return s;
}

ParameterVector truth_or_nominal(const RunSetup& s) {
    return s.experiment.theta_true ? *s.experiment.theta_true : ParameterVector(Vec::Zero(s.plant.m_theta()));
}

double settle_of(const RunSetup& s) {
    return s.experiment.settle >= 0.0
               ? s.experiment.settle
               : settle_time(s.plant, ParameterVector(Vec::Zero(s.plant.m_theta())), s.experiment.settle_band);
}

// Fails with a model-assumption error when the plant at theta is unusable.
void require_model(const RunSetup& s, const ParameterVector& theta) {
    const AssumptionReport rep = check_assumptions(s.plant, theta);
    if (!rep.well_posed)
        throw WellPosednessViolated("I - P(theta) D_zv is singular, so the parameter loop is not well posed");
    if (!rep.regular) throw SingularPencil("the pencil sE - A(theta) is singular for every s (not regular)");
    if (!rep.stable) throw Unstable("the plant is not stable at theta: " + rep.describe());
    if (!rep.in_box) std::cerr << "warning: theta lies outside theta_box\n";
}

SampleSet simulate_from(const RunSetup& s) {
    const ParameterVector theta = truth_or_nominal(s);
    require_model(s, theta);
    const Spectrum spec = decompose(s.generator);
    for (const auto& w : spec.warnings) std::cerr << "warning: " << w << "\n";
    const Vec x0 = s.experiment.x0.size() ? s.experiment.x0 : Vec::Zero(s.plant.m_x());
    const double t0 = settle_of(s);
    const auto times = generate_times(s.experiment.gap, s.N, t0, derive_seed(s.experiment.seed, 2, 0));
    return simulate_samples(s.plant, theta, x0, s.generator, times, s.sigma, derive_seed(s.experiment.seed, 3, 0));
}

std::ofstream open_out(const fs::path& p) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream f(p);
    if (!f) throw ConfigError("cannot write " + p.string());
    return f;
}

int cmd_simulate(const Options& o) {
    const RunSetup s = setup(o);
    const SampleSet samples = simulate_from(s);
    if (o.out.empty()) {
        write_samples_csv(std::cout, samples);
    } else {
        auto f = open_out(o.out);
        write_samples_csv(f, samples);
        std::cout << "wrote " << samples.size() << " samples to " << o.out << "\n";
    }
    return kOk;
}

void print_theta(std::ostream& os, const char* name, const ParameterVector& t) {
    os << name;
    for (Index i = 0; i < t.size(); ++i) os << (i ? "," : "=") << t[i];
    os << "\n";
}

int cmd_identify(const Options& o) {
    const RunSetup s = setup(o);
    if (o.samples.empty()) throw ConfigError("identify needs --samples <file>");
    const SampleSet samples = read_samples_csv(o.samples);
    if (samples.m_y() != s.plant.m_y()) throw ConfigError("sample file has the wrong number of outputs");
    const Spectrum spec = decompose(s.generator);
    for (const auto& w : spec.warnings) std::cerr << "warning: " << w << "\n";

    const Identification id = identify(s.plant, s.generator, samples, s.experiment.theta_true);
    std::cout << std::setprecision(12);
    print_theta(std::cout, "theta_hat", id.theta.theta);
    std::cout << "residual=" << id.theta.residual << "\n";
    std::cout << "psi_sigma_min=" << id.theta.sigma_min << "\n";
    if (s.experiment.theta_true) {
        print_theta(std::cout, "theta_true", *s.experiment.theta_true);
        try {
            std::cout << "E_re=" << relative_error(*s.experiment.theta_true, id.theta.theta) << "\n";
        } catch (const ZeroTrueParameter&) {
            std::cout << "E_re=undefined (zero true parameter)\n";
        }
    }
    write_excitation_report(std::cout, id.excitation);
    if (!o.out.empty()) {
        const fs::path dir(o.out);
        fs::create_directories(dir);
        {
            auto f = open_out(dir / "theta.csv");
            f << "index,theta_hat\n" << std::setprecision(17);
            for (Index i = 0; i < id.theta.theta.size(); ++i) f << i + 1 << "," << id.theta.theta[i] << "\n";
        }
        {
            auto f = open_out(dir / "hbar.csv");
            write_tfm_estimate_csv(f, id.tfm);
        }
        {
            auto f = open_out(dir / "excitation.txt");
            write_excitation_report(f, id.excitation);
        }
        {
            auto f = open_out(dir / "residuals.csv");
            f << "k,t,residual\n" << std::setprecision(17);
            const Mat R = id.reg.Ybar - id.tfm.Hbar * id.reg.Ubar;
            for (Index k = 0; k < R.cols(); ++k)
                f << k << "," << samples.times[static_cast<std::size_t>(k)] << "," << R.col(k).norm() << "\n";
        }
    }
    return kOk;
}

int cmd_excitation(const Options& o) {
    const RunSetup s = setup(o);
    const SampleSet samples = o.samples.empty() ? simulate_from(s) : read_samples_csv(o.samples);
    const Spectrum spec = decompose(s.generator);
    const Regression reg = build_regression(s.plant, s.generator, spec, g_at_modes(s.plant, spec), samples);
    std::optional<ParametricSystem> ps;
    try {
        const TfmEstimate est = estimate_tfm(reg);
        ps = build_parametric(s.plant, spec, est, truth_or_nominal(s));
    } catch (const NotPersistentlyExciting&) {
    }
    const ExcitationReport rep = check_excitation(s.plant, spec, reg, ps ? &*ps : nullptr);
    std::ostream* os = &std::cout;
    std::ofstream f;
    if (!o.out.empty()) {
        f = open_out(o.out);
        os = &f;
    }
    write_excitation_report(*os, rep);
    if (os != &std::cout) write_excitation_report(std::cout, rep);
    return kOk;
}

int run_sweep(const Options& o, bool force_dlse) {
    RunSetup s = setup(o);
    if (force_dlse) s.experiment.run_dlse = true;
    const MonteCarloResult r = monte_carlo(s.plant, s.generator, s.experiment);
    std::cout << "config_hash=" << std::hex << std::setw(16) << std::setfill('0') << r.config_hash << std::dec
              << std::setfill(' ') << "\n";
    std::cout << "settle_time=" << r.settle << "\n";
    write_summary_csv(std::cout, r);
    if (!o.out.empty()) {
        const fs::path dir(o.out);
        fs::create_directories(dir);
        auto sf = open_out(dir / "summary.csv");
        write_summary_csv(sf, r);
        auto tf = open_out(dir / "trials.csv");
        write_trials_csv(tf, r);
    }
    return kOk;
}

int guarded(const std::function<int()>& body) {
    try {
        return body();
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const NotPersistentlyExciting& e) {
        std::cerr << "not persistently exciting: " << e.what() << "\n";
        return kExcitation;
    } catch (const NotIdentifiableFromData& e) {
        std::cerr << "not identifiable: " << e.what() << "\n";
        return kIdentifiability;
    } catch (const WellPosednessViolated& e) {
        std::cerr << "model assumption violated (well-posed parameter loop): " << e.what() << "\n";
        return kModel;
    } catch (const SharedEigenvalue& e) {
        std::cerr << "model assumption violated (steady-state maps need disjoint plant and generator spectra): "
                  << e.what() << "\n";
        return kModel;
    } catch (const NominalPoleCollision& e) {
        std::cerr << "model assumption violated (generator eigenvalues must avoid the nominal pencil's eigenvalues): "
                  << e.what() << "\n";
        return kModel;
    } catch (const SingularPencil& e) {
        std::cerr << "model assumption violated (regular pencil): " << e.what() << "\n";
        return kModel;
    } catch (const Unstable& e) {
        std::cerr << "model assumption violated (stable plant): " << e.what() << "\n";
        return kModel;
    } catch (const DefectiveGenerator& e) {
        std::cerr << "model assumption violated (generator with distinct eigenvalues): " << e.what() << "\n";
        return kModel;
    } catch (const UnsupportedIndex& e) {
        std::cerr << "model assumption violated (pencil index at most one): " << e.what() << "\n";
        return kModel;
    } catch (const ComponentNotReal& e) {
        std::cerr << "model assumption violated (real generator data): " << e.what() << "\n";
        return kModel;
    } catch (const SingularT& e) {
        std::cerr << "model assumption violated (invertible eigenvector matrix): " << e.what() << "\n";
        return kModel;
    } catch (const DimensionMismatch& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kOther;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Parameter identification for LFT-structured descriptor systems from non-uniform samples"};
    app.require_subcommand(1);
    Options o;

    auto common = [&o](CLI::App* sub, bool needs_samples) {
        sub->add_option("--config", o.config, "YAML run file (plant, generator, experiment, numerics)")->required();
        sub->add_option("--out", o.out, "output file (simulate, excitation) or directory (identify, montecarlo, baseline)");
        sub->add_option("--seed", o.seed, "master seed");
        sub->add_option("--sigma", o.sigma, "noise standard deviation");
        sub->add_option("--tol-rank", o.tol_rank, "relative singular-value threshold for rank decisions");
        sub->add_option("--count", o.count, "number of samples N");
        auto* s = sub->add_option("--samples", o.samples, "sample CSV (t,y_1,...)");
        if (needs_samples) s->required();
    };
    auto* sim = app.add_subcommand("simulate", "simulate noisy non-uniform samples");
    common(sim, false);
    auto* ide = app.add_subcommand("identify", "two-step estimate of theta from a sample file");
    common(ide, true);
    auto* exc = app.add_subcommand("excitation", "excitation and identifiability diagnostics");
    common(exc, false);
    auto* mc = app.add_subcommand("montecarlo", "Monte-Carlo sweep of the proposed estimator");
    common(mc, false);
    auto* base = app.add_subcommand("baseline", "Monte-Carlo sweep including the time-domain fit");
    common(base, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kConfig;
    }

    if (*sim) return guarded([&] { return cmd_simulate(o); });
    if (*ide) return guarded([&] { return cmd_identify(o); });
    if (*exc) return guarded([&] { return cmd_excitation(o); });
    if (*mc) return guarded([&] { return run_sweep(o, false); });
    if (*base) return guarded([&] { return run_sweep(o, true); });
    return kOther;
}
