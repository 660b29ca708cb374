#include "lftid/config.hpp"

#include <fstream>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace lftid {

namespace {

double number(const YAML::Node& n, const std::string& where) {
    try {
        return n.as<double>();
    } catch (const YAML::Exception&) {
        throw ConfigError(where + ": expected a number");
    }
}

Mat matrix(const YAML::Node& n, const std::string& where) {
    if (n.IsScalar()) return Mat::Constant(1, 1, number(n, where));
    if (!n.IsSequence()) throw ConfigError(where + ": expected a matrix (list of rows)");
    if (n.size() == 0) return Mat();
    const bool flat = n[0].IsScalar();
    if (flat) {
        // A single row written as a flat list.
        Mat m(1, static_cast<Index>(n.size()));
        for (std::size_t j = 0; j < n.size(); ++j) m(0, static_cast<Index>(j)) = number(n[j], where);
        return m;
    }
    const std::size_t cols = n[0].size();
    Mat m(static_cast<Index>(n.size()), static_cast<Index>(cols));
    for (std::size_t i = 0; i < n.size(); ++i) {
        if (!n[i].IsSequence() || n[i].size() != cols) throw ConfigError(where + ": rows have different lengths");
        for (std::size_t j = 0; j < cols; ++j)
            m(static_cast<Index>(i), static_cast<Index>(j)) = number(n[i][j], where);
    }
    return m;
}

Vec vec_of(const YAML::Node& n, const std::string& where) {
    if (n.IsScalar()) return Vec::Constant(1, number(n, where));
    if (!n.IsSequence()) throw ConfigError(where + ": expected a list of numbers");
    Vec v(static_cast<Index>(n.size()));
    for (std::size_t i = 0; i < n.size(); ++i) {
        if (n[i].IsSequence() && n[i].size() == 1) v(static_cast<Index>(i)) = number(n[i][0], where);
        else v(static_cast<Index>(i)) = number(n[i], where);
    }
    return v;
}

const YAML::Node require(const YAML::Node& parent, const char* key, const std::string& where) {
    const YAML::Node n = parent[key];
    if (!n) throw ConfigError(where + "." + key + " is missing");
    return n;
}

LftPlant read_plant(const YAML::Node& p) {
    LftPlant::Data d;
    d.A_xx = matrix(require(p, "A_xx", "plant"), "plant.A_xx");
    const Index mx = d.A_xx.rows();
    d.E = p["E"] ? matrix(p["E"], "plant.E") : Mat::Identity(mx, mx);
    d.B_xu = matrix(require(p, "B_xu", "plant"), "plant.B_xu");
    d.B_xv = matrix(require(p, "B_xv", "plant"), "plant.B_xv");
    d.C_yx = matrix(require(p, "C_yx", "plant"), "plant.C_yx");
    d.C_zx = matrix(require(p, "C_zx", "plant"), "plant.C_zx");
    const Index mu = d.B_xu.cols(), mv = d.B_xv.cols(), my = d.C_yx.rows(), mz = d.C_zx.rows();
    d.D_zu = p["D_zu"] ? matrix(p["D_zu"], "plant.D_zu") : Mat::Zero(mz, mu);
    d.D_zv = p["D_zv"] ? matrix(p["D_zv"], "plant.D_zv") : Mat::Zero(mz, mv);
    d.D_yu = p["D_yu"] ? matrix(p["D_yu"], "plant.D_yu") : Mat::Zero(my, mu);
    d.D_yv = p["D_yv"] ? matrix(p["D_yv"], "plant.D_yv") : Mat::Zero(my, mv);
    const YAML::Node P = require(p, "P", "plant");
    if (!P.IsSequence()) throw ConfigError("plant.P must be a list of matrices");
    for (std::size_t i = 0; i < P.size(); ++i) {
        Mat m = matrix(P[i], "plant.P[" + std::to_string(i) + "]");
        // A flat list for a column-shaped basis matrix is accepted.
        if (m.rows() == 1 && mz == 1 && m.cols() == mv && mv != 1) m = m.transpose().eval();
        d.basis.push_back(m);
    }
    if (const YAML::Node box = p["theta_box"]) {
        for (std::size_t i = 0; i < box.size(); ++i) {
            if (!box[i].IsSequence() || box[i].size() != 2) throw ConfigError("plant.theta_box entries must be [lo, hi]");
            d.theta_box.push_back({number(box[i][0], "plant.theta_box"), number(box[i][1], "plant.theta_box")});
        }
    }
    try {
        return LftPlant(std::move(d));
    } catch (const DimensionMismatch& e) {
        throw ConfigError(std::string("plant: ") + e.what());
    }
}

InputGenerator read_generator(const YAML::Node& g) {
    Mat Pi = matrix(require(g, "Pi", "generator"), "generator.Pi");
    try {
        return InputGenerator(matrix(require(g, "Xi", "generator"), "generator.Xi"), Pi,
                              vec_of(require(g, "xi0", "generator"), "generator.xi0"));
    } catch (const DimensionMismatch& e) {
        throw ConfigError(std::string("generator: ") + e.what());
    }
}

template <class T>
T get_or(const YAML::Node& n, const char* key, T fallback) {
    if (!n || !n[key]) return fallback;
    try {
        return n[key].as<T>();
    } catch (const YAML::Exception&) {
        throw ConfigError(std::string(key) + " has the wrong type");
    }
}

RunSetup build(const YAML::Node& root) {
    if (!root.IsMap()) throw ConfigError("config root must be a map");
    RunSetup s{read_plant(require(root, "plant", "config")), read_generator(require(root, "generator", "config")), {}, {}, 100,
               0.0};
    if (s.generator.m_u() != s.plant.m_u())
        throw ConfigError("generator.Pi must have one row per plant input");

    if (const YAML::Node num = root["numerics"]) {
        s.numerics.rank_tol = get_or(num, "rank_tol", s.numerics.rank_tol);
        s.numerics.distinct_tol = get_or(num, "distinct_tol", s.numerics.distinct_tol);
        s.numerics.shared_tol = get_or(num, "shared_tol", s.numerics.shared_tol);
        s.numerics.defective_tol = get_or(num, "defective_tol", s.numerics.defective_tol);
        s.numerics.real_tol = get_or(num, "real_tol", s.numerics.real_tol);
        if (s.numerics.rank_tol < 0 || s.numerics.distinct_tol <= 0 || s.numerics.shared_tol <= 0 ||
            s.numerics.defective_tol <= 0 || s.numerics.real_tol <= 0)
            throw ConfigError("numerics tolerances must be positive (rank_tol may be 0 for the default)");
    }

    ExperimentConfig& e = s.experiment;
    const YAML::Node ex = root["experiment"];
    if (ex) {
        if (ex["theta_true"]) {
            const Vec t = vec_of(ex["theta_true"], "experiment.theta_true");
            if (t.size() != s.plant.m_theta()) throw ConfigError("experiment.theta_true has the wrong length");
            e.theta_true = ParameterVector(t);
        }
        if (ex["x0"]) {
            e.x0 = vec_of(ex["x0"], "experiment.x0");
            if (e.x0.size() != s.plant.m_x()) throw ConfigError("experiment.x0 has the wrong length");
        }
        s.N = get_or<Index>(ex, "N", s.N);
        s.sigma = get_or(ex, "sigma", s.sigma);
        e.seed = get_or<std::uint64_t>(ex, "seed", e.seed);
        if (ex["gap"]) {
            const Vec g = vec_of(ex["gap"], "experiment.gap");
            if (g.size() != 2) throw ConfigError("experiment.gap must be [min, max]");
            e.gap = {g(0), g(1)};
        }
        e.settle = get_or(ex, "settle_time", e.settle);
        e.settle_band = get_or(ex, "settle_band", e.settle_band);
        e.pre_settle_samples = get_or<Index>(ex, "pre_settle_samples", e.pre_settle_samples);
        e.threads = get_or<unsigned>(ex, "threads", e.threads);
        if (const YAML::Node d = ex["dlse"]) {
            e.dlse.max_iter = get_or(d, "max_iter", e.dlse.max_iter);
            e.dlse.grad_tol = get_or(d, "grad_tol", e.dlse.grad_tol);
        }
        if (const YAML::Node mc = ex["montecarlo"]) {
            if (mc["sigmas"]) {
                const Vec v = vec_of(mc["sigmas"], "montecarlo.sigmas");
                e.sigmas.assign(v.data(), v.data() + v.size());
            } else {
                e.sigmas = {s.sigma};
            }
            if (mc["Ns"]) {
                e.Ns.clear();
                for (const auto& n : mc["Ns"]) e.Ns.push_back(n.as<Index>());
            } else {
                e.Ns = {s.N};
            }
            if (const YAML::Node rp = mc["generator_real_parts"]) {
                e.generators.clear();
                for (const auto& row : rp) {
                    const Vec v = vec_of(row, "montecarlo.generator_real_parts");
                    e.generators.push_back({std::vector<double>(v.data(), v.data() + v.size())});
                }
            }
            e.trials = get_or(mc, "trials", e.trials);
            e.run_dlse = get_or(mc, "dlse", e.run_dlse);
            if (get_or(mc, "random_theta", false)) e.theta_true.reset();
        } else {
            e.sigmas = {s.sigma};
            e.Ns = {s.N};
        }
    }
    if (s.N < 1) throw ConfigError("experiment.N must be positive");
    if (s.sigma < 0) throw ConfigError("experiment.sigma must be non-negative");
    if (!(e.gap.min > 0.0) || e.gap.max < e.gap.min) throw ConfigError("experiment.gap needs 0 < min <= max");
    if (!(e.settle_band > 0.0)) throw ConfigError("experiment.settle_band must be positive");
    if (e.pre_settle_samples < 0) throw ConfigError("experiment.pre_settle_samples must be non-negative");
    if (e.trials < 1) throw ConfigError("montecarlo.trials must be positive");
    for (double sg : e.sigmas)
        if (sg < 0) throw ConfigError("montecarlo.sigmas must be non-negative");
    for (Index n : e.Ns)
        if (n < 1) throw ConfigError("montecarlo.Ns must be positive");
    return s;
}

}  // namespace

RunSetup parse_config(const std::string& yaml_text) {
    try {
        return build(YAML::Load(yaml_text));
    } catch (const YAML::Exception& e) {
        throw ConfigError(std::string("config syntax: ") + e.what());
    }
}

RunSetup load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str());
}

}  // namespace lftid
