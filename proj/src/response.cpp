#include "lftid/response.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <memory>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

namespace lftid {

void SampleSet::validate() const {
    if (static_cast<Index>(times.size()) != y.cols())
        throw DimensionMismatch("sample times and measurements differ in count");
    for (std::size_t k = 1; k < times.size(); ++k) {
        if (!(times[k] > times[k - 1])) throw DimensionMismatch("sample times must be strictly increasing");
    }
}

void write_samples_csv(std::ostream& os, const SampleSet& s) {
    s.validate();
    os << "t";
    for (Index i = 0; i < s.m_y(); ++i) os << ",y_" << (i + 1);
    os << "\n" << std::setprecision(17);
    for (Index k = 0; k < s.size(); ++k) {
        os << s.times[static_cast<std::size_t>(k)];
        for (Index i = 0; i < s.m_y(); ++i) os << "," << s.y(i, k);
        os << "\n";
    }
}

void write_samples_csv(const std::string& path, const SampleSet& s) {
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot open " + path + " for writing");
    write_samples_csv(f, s);
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        const auto b = cell.find_first_not_of(" \t\r");
        const auto e = cell.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
    }
    return out;
}

}  // namespace

SampleSet read_samples_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw ConfigError("sample file is empty");
    const auto header = split_csv(line);
    if (header.size() < 2 || header[0] != "t") throw ConfigError("sample file header must be t,y_1,...");
    const Index my = static_cast<Index>(header.size()) - 1;
    std::vector<double> times;
    std::vector<std::vector<double>> rows;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto cells = split_csv(line);
        if (static_cast<Index>(cells.size()) != my + 1)
            throw ConfigError("sample file line " + std::to_string(lineno) + " has the wrong number of fields");
        std::vector<double> vals;
        try {
            for (const auto& c : cells) vals.push_back(std::stod(c));
        } catch (const std::exception&) {
            throw ConfigError("sample file line " + std::to_string(lineno) + " is not numeric");
        }
        times.push_back(vals[0]);
        rows.emplace_back(vals.begin() + 1, vals.end());
    }
    SampleSet s;
    s.times = std::move(times);
    s.y.resize(my, static_cast<Index>(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k)
        for (Index i = 0; i < my; ++i) s.y(i, static_cast<Index>(k)) = rows[k][static_cast<std::size_t>(i)];
    try {
        s.validate();
    } catch (const DimensionMismatch& e) {
        throw ConfigError(e.what());
    }
    return s;
}

SampleSet read_samples_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open sample file " + path);
    return read_samples_csv(f);
}

Mat JordanGenerator::Lambda() const {
    Mat L = Mat::Zero(m_xi, m_xi);
    for (Index i = 0; i < m_xi; ++i) {
        L(i, i) = lambda_r;
        if (i + 1 < m_xi) L(i, i + 1) = 1.0;
    }
    return L;
}

Mat JordanGenerator::Xi() const { return T * Lambda() * T.inverse(); }

void require_disjoint_spectra(const Mat& E, const Mat& A, const std::vector<cplx>& generator_eigs) {
    const PencilSpectrum ps = analyze_pencil(E, A);
    if (!ps.regular) throw SingularPencil("the pencil (E, A(theta)) is not regular");
    double radius = 0.0;
    for (cplx l : ps.finite) radius = std::max(radius, std::abs(l));
    for (cplx l : generator_eigs) radius = std::max(radius, std::abs(l));
    const double tol = numerics().shared_tol * (1.0 + radius);
    for (cplx g : generator_eigs) {
        for (cplx p : ps.finite) {
            if (std::abs(g - p) <= tol) {
                std::ostringstream os;
                os << "generator eigenvalue " << g << " coincides with plant eigenvalue " << p
                   << ": the steady-state equations EX = Z, AX + B Pi = Z Xi have no unique solution";
                throw SharedEigenvalue(os.str());
            }
        }
    }
}

namespace {

std::vector<cplx> column_eigs(const Spectrum& spec) {
    std::vector<cplx> out;
    for (Index j = 0; j < spec.m_xi(); ++j) out.push_back(spec.column_lambda(j));
    return out;
}

Mat checked_real(const CMat& m, const char* what) {
    const double tol = numerics().real_tol * (1.0 + m.cwiseAbs().maxCoeff());
    if (m.size() && m.imag().cwiseAbs().maxCoeff() > tol)
        throw ComponentNotReal(std::string(what) + " has a non-negligible imaginary part");
    return m.real();
}

CMat solve_shared(const CMat& m, const CMat& rhs) {
    try {
        return solve_or_throw(m, rhs, "");
    } catch (const SingularPencil&) {
        throw SharedEigenvalue("a generator eigenvalue is a generalized eigenvalue of (E, A(theta))");
    }
}

// X T column by column: x_j = (l_j E - A)^-1 B pibar_j.
struct ModalSteady {
    CMat X_T;  // X T
    Mat X;
};

ModalSteady modal_steady(const Mat& E, const SystemMatrices& sys, const Spectrum& spec) {
    require_disjoint_spectra(E, sys.A, column_eigs(spec));
    ModalSteady out;
    out.X_T.resize(E.rows(), spec.m_xi());
    const CMat Ec = E.cast<cplx>();
    const CMat Ac = sys.A.cast<cplx>();
    const CMat Bc = sys.B.cast<cplx>();
    for (Index j = 0; j < spec.m_xi(); ++j) {
        const cplx l = spec.column_lambda(j);
        out.X_T.col(j) = solve_shared(l * Ec - Ac, Bc * spec.pi_bars[static_cast<std::size_t>(j)]);
    }
    out.X = checked_real(out.X_T * spec.T_inv, "X");
    return out;
}

}  // namespace

SteadyStateMaps solve_steady_maps(const LftPlant& plant, const ParameterVector& theta, const InputGenerator& gen) {
    return solve_steady_maps(plant, theta, gen, Vec::Zero(plant.m_x()));
}

SteadyStateMaps solve_steady_maps(const LftPlant& plant, const ParameterVector& theta, const InputGenerator& gen,
                                  const Vec& x0) {
    if (gen.m_u() != plant.m_u()) throw DimensionMismatch("generator output size differs from plant input size");
    if (x0.size() != plant.m_x()) throw DimensionMismatch("x0 has the wrong length");
    const Spectrum spec = decompose(gen);
    const SystemMatrices sys = assemble(plant, theta);
    const ModalSteady ms = modal_steady(plant.E(), sys, spec);
    SteadyStateMaps maps;
    maps.X = ms.X;
    maps.Z = plant.E() * maps.X;
    maps.xbar0 = plant.E() * x0 - maps.Z * gen.xi0();
    return maps;
}

Mat steady_matrix_from_tfm(const LftPlant& plant, const ParameterVector& theta, const Spectrum& spec) {
    const Index n = spec.m_xi();
    if (spec.T.rows() != n || spec.T.cols() != n || static_cast<Index>(spec.pi_bars.size()) != n)
        throw DimensionMismatch("spectrum is inconsistent");
    if (numerically_singular(spec.T)) throw SingularT("eigenvector matrix T is singular");
    const SystemMatrices sys = assemble(plant, theta);
    require_disjoint_spectra(plant.E(), sys.A, column_eigs(spec));
    CMat HT(plant.m_y(), n);
    for (Index j = 0; j < n; ++j) {
        CMat H;
        try {
            H = eval_tfm_state_space(plant.E(), sys, spec.column_lambda(j));
        } catch (const SingularPencil&) {
            throw SharedEigenvalue("a generator eigenvalue is a generalized eigenvalue of (E, A(theta))");
        }
        HT.col(j) = H * spec.pi_bars[static_cast<std::size_t>(j)];
    }
    const CMat Tinv = spec.T.inverse();
    return checked_real(HT * Tinv, "steady-state matrix");
}

Vec steady_output(const LftPlant& plant, const ParameterVector& theta, const InputGenerator& gen, double t) {
    if (gen.m_u() != plant.m_u()) throw DimensionMismatch("generator output size differs from plant input size");
    const Spectrum spec = decompose(gen);
    const SystemMatrices sys = assemble(plant, theta);
    require_disjoint_spectra(plant.E(), sys.A, column_eigs(spec));
    const Mat V = real_block_basis(spec);
    const Vec eta0 = V.partialPivLu().solve(gen.xi0());
    const Mat PiV = gen.Pi() * V;

    auto tfm = [&](cplx s) {
        try {
            return eval_tfm_state_space(plant.E(), sys, s);
        } catch (const SingularPencil&) {
            throw SharedEigenvalue("a generator eigenvalue is a generalized eigenvalue of (E, A(theta))");
        }
    };

    Vec y = Vec::Zero(plant.m_y());
    for (Index i = 0; i < spec.m_r(); ++i) {
        const double l = spec.real_eigs[static_cast<std::size_t>(i)];
        const Mat H = tfm(l).real();
        y += H * PiV.col(i) * (std::exp(l * t) * eta0(i));
    }
    for (Index k = 0; k < spec.m_c(); ++k) {
        const ComplexPair& p = spec.complex_pairs[static_cast<std::size_t>(k)];
        const Index j = spec.m_r() + 2 * k;
        const CMat H = tfm(p.lambda());
        const Mat Hr = H.real(), Hi = H.imag();
        const Vec pr = PiV.col(j), pi = -PiV.col(j + 1);  // Pi Re(t), Pi Im(t)
        Mat W(plant.m_y(), 2);
        W.col(0) = Hr * pr - Hi * pi;
        W.col(1) = -(Hr * pi + Hi * pr);
        const double c = std::cos(p.omega * t), s = std::sin(p.omega * t);
        Mat rot(2, 2);
        rot << c, -s, s, c;
        y += std::exp(p.sigma * t) * (W * rot * eta0.segment(j, 2));
    }
    return y;
}

TransientPropagator::TransientPropagator(const Mat& E, const Mat& A, const Mat& C) : C_(C) {
    const Index n = E.rows();
    if (!numerically_singular(E)) {
        const auto lu = E.partialPivLu();
        F_ = lu.solve(A);
        G_ = lu.inverse();
    } else {
        const double scale = std::max(1.0, A.norm() / std::max(E.norm(), std::numeric_limits<double>::min()));
        const double shifts[] = {1.0, -1.0, 2.0, 0.5, -3.0, 7.0, 0.37};
        Index chosen = -1;
        for (Index i = 0; i < 7; ++i) {
            if (!numerically_singular(Mat(shifts[i] * scale * E - A))) {
                chosen = i;
                break;
            }
        }
        if (chosen < 0) throw SingularPencil("the pencil (E, A) is not regular");
        const double a = shifts[chosen] * scale;
        const Mat R = (a * E - A).partialPivLu().inverse();
        const Mat K = R * E;
        const Mat K2 = K * K;
        if (full_column_rank(K2).rank < full_column_rank(K).rank)
            throw UnsupportedIndex("the pencil (E, A) has index 2 or higher; impulsive modes are not simulated");
        const Mat KD = K * pseudo_inverse(K2 * K) * K;  // group inverse of K
        F_ = a * K * KD - KD;
        G_ = KD * R;
    }

    Eigen::EigenSolver<Mat> es(F_, true);
    if (es.info() == Eigen::Success && n > 0) {
        V_ = es.eigenvectors();
        Eigen::JacobiSVD<CMat> svd(V_);
        const auto& sv = svd.singularValues();
        if (sv(n - 1) > 1e-4 * sv(0)) {
            diagonal_ = true;
            eigs_ = es.eigenvalues();
            Vinv_ = V_.inverse();
            V_ = C_.cast<cplx>() * V_;
            Vinv_ = Vinv_ * G_.cast<cplx>();
        }
    }
}

Vec TransientPropagator::operator()(const Vec& w, double t) const {
    if (diagonal_) {
        CVec z = Vinv_ * w.cast<cplx>();
        for (Index i = 0; i < z.size(); ++i) z(i) *= std::exp(eigs_(i) * t);
        return (V_ * z).real();
    }
    const Mat eF = (F_ * t).exp();
    return C_ * (eF * (G_ * w));
}

Vec transient_output(const LftPlant& plant, const ParameterVector& theta, const Vec& x0, const InputGenerator& gen,
                     double t) {
    const SteadyStateMaps maps = solve_steady_maps(plant, theta, gen, x0);
    const SystemMatrices sys = assemble(plant, theta);
    const TransientPropagator prop(plant.E(), sys.A, sys.C);
    return prop(maps.xbar0, t);
}

Mat simulate_outputs(const LftPlant& plant, const ParameterVector& theta, const Vec& x0, const InputGenerator& gen,
                     const std::vector<double>& times) {
    if (gen.m_u() != plant.m_u()) throw DimensionMismatch("generator output size differs from plant input size");
    if (x0.size() != plant.m_x()) throw DimensionMismatch("x0 has the wrong length");
    const Spectrum spec = decompose(gen);
    const SystemMatrices sys = assemble(plant, theta);
    const ModalSteady ms = modal_steady(plant.E(), sys, spec);
    // Output matrix in eigen-coordinates: (C X + D Pi) T.
    const CMat MT = sys.C.cast<cplx>() * ms.X_T + sys.D.cast<cplx>() * gen.Pi().cast<cplx>() * spec.T;
    const CVec xibar0 = spec.T_inv * gen.xi0().cast<cplx>();
    const Vec xbar0 = plant.E() * x0 - plant.E() * ms.X * gen.xi0();
    const bool on_manifold = xbar0.norm() == 0.0;
    std::unique_ptr<TransientPropagator> prop;
    if (!on_manifold) prop = std::make_unique<TransientPropagator>(plant.E(), sys.A, sys.C);

    Mat Y(plant.m_y(), static_cast<Index>(times.size()));
    CVec z(spec.m_xi());
    for (std::size_t k = 0; k < times.size(); ++k) {
        const double t = times[k];
        for (Index j = 0; j < spec.m_xi(); ++j) z(j) = std::exp(spec.column_lambda(j) * t) * xibar0(j);
        Vec y = (MT * z).real();
        if (prop) y += (*prop)(xbar0, t);
        Y.col(static_cast<Index>(k)) = y;
    }
    return Y;
}

SampleSet simulate_samples(const LftPlant& plant, const ParameterVector& theta, const Vec& x0,
                           const InputGenerator& gen, const std::vector<double>& times, double sigma,
                           std::uint64_t seed) {
    for (std::size_t k = 0; k < times.size(); ++k) {
        if (times[k] < 0.0) throw DimensionMismatch("sample times must be non-negative");
        if (k && !(times[k] > times[k - 1])) throw DimensionMismatch("sample times must be strictly increasing");
    }
    SampleSet s;
    s.times = times;
    s.y = simulate_outputs(plant, theta, x0, gen, times);
    s.noise_sigma = sigma;
    s.seed = seed;
    if (sigma > 0.0) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> noise(0.0, sigma);
        for (Index k = 0; k < s.y.cols(); ++k)
            for (Index i = 0; i < s.y.rows(); ++i) s.y(i, k) += noise(rng);
    }
    return s;
}

Mat steady_matrix_jordan(const LftPlant& plant, const ParameterVector& theta, const JordanGenerator& jgen) {
    const Index n = jgen.m_xi;
    if (n < 1 || jgen.T.rows() != n || jgen.T.cols() != n || jgen.Pi_out.cols() != n)
        throw DimensionMismatch("Jordan generator dimensions are inconsistent");
    if (jgen.Pi_out.rows() != plant.m_u()) throw DimensionMismatch("generator output size differs from plant input size");
    const SystemMatrices sys = assemble(plant, theta);
    const cplx l(jgen.lambda_r, 0.0);
    std::vector<Mat> coeff;  // H^(k)(l) / k!
    coeff.push_back(eval_tfm_state_space(plant.E(), sys, l).real());
    double factorial = 1.0;
    for (Index k = 1; k < n; ++k) {
        factorial *= static_cast<double>(k);
        coeff.push_back(tfm_derivative(plant.E(), sys, l, static_cast<int>(k)).real() / factorial);
    }
    const Mat pibar = jgen.Pi_out * jgen.T;
    Mat MT = Mat::Zero(plant.m_y(), n);
    for (Index i = 0; i < n; ++i)
        for (Index k = 0; k <= i; ++k) MT.col(i) += coeff[static_cast<std::size_t>(k)] * pibar.col(i - k);
    return MT * jgen.T.inverse();
}

CVec tangential_value(const CMat& H_at_lambda, const CVec& pi) {
    if (H_at_lambda.cols() != pi.size()) throw DimensionMismatch("direction length differs from TFM column count");
    const Mat Hr = H_at_lambda.real(), Hi = H_at_lambda.imag();
    const Vec pr = pi.real(), pim = pi.imag();
    const Vec re = Hr * pr - Hi * pim;
    const Vec im = Hr * pim + Hi * pr;
    CVec out(re.size());
    for (Index i = 0; i < re.size(); ++i) out(i) = cplx(re(i), im(i));
    return out;
}

}  // namespace lftid
