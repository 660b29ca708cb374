#include "lftid/igs.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

namespace lftid {

InputGenerator::InputGenerator(Mat Xi, Mat Pi, Vec xi0) : Xi_(std::move(Xi)), Pi_(std::move(Pi)), xi0_(std::move(xi0)) {
    const Index n = Xi_.rows();
    if (Xi_.cols() != n) throw DimensionMismatch("Xi must be square");
    if (n == 0) throw DimensionMismatch("Xi must not be empty");
    if (Pi_.cols() != n) throw DimensionMismatch("Pi must have one column per generator state");
    if (xi0_.size() != n) throw DimensionMismatch("xi0 must have one entry per generator state");
}

cplx Spectrum::mode_lambda(Index i) const {
    if (i < m_r()) return {real_eigs[static_cast<std::size_t>(i)], 0.0};
    return complex_pairs[static_cast<std::size_t>(i - m_r())].lambda();
}

cplx Spectrum::column_lambda(Index j) const {
    if (j < m_r()) return {real_eigs[static_cast<std::size_t>(j)], 0.0};
    const Index k = (j - m_r()) / 2;
    const cplx l = complex_pairs[static_cast<std::size_t>(k)].lambda();
    return (j - m_r()) % 2 == 0 ? l : std::conj(l);
}

namespace {

CVec normalize_first_entry(CVec v) {
    const double vmax = v.cwiseAbs().maxCoeff();
    const double cutoff = std::sqrt(std::numeric_limits<double>::epsilon()) * vmax;
    for (Index i = 0; i < v.size(); ++i) {
        if (std::abs(v(i)) > cutoff) return v / v(i);
    }
    return v;
}

struct Candidate {
    cplx lambda;
    CVec vec;
};

}  // namespace

Spectrum decompose(const InputGenerator& gen) {
    const Numerics& num = numerics();
    Eigen::EigenSolver<Mat> es(gen.Xi(), true);
    if (es.info() != Eigen::Success) throw DefectiveGenerator("eigen-decomposition of Xi failed");
    const CVec lambdas = es.eigenvalues();
    const CMat vecs = es.eigenvectors();
    const Index n = lambdas.size();

    std::vector<Candidate> reals, pairs;
    for (Index i = 0; i < n; ++i) {
        const cplx l = lambdas(i);
        if (std::abs(l.imag()) <= num.real_tol * (1.0 + std::abs(l))) {
            CVec v = vecs.col(i).real().cast<cplx>();
            reals.push_back({cplx(l.real(), 0.0), normalize_first_entry(v)});
        } else if (l.imag() > 0.0) {
            pairs.push_back({l, normalize_first_entry(vecs.col(i))});
        }
    }
    if (static_cast<Index>(reals.size() + 2 * pairs.size()) != n)
        throw DefectiveGenerator("eigenvalues of Xi do not split into real values and conjugate pairs");

    std::sort(reals.begin(), reals.end(), [](const Candidate& a, const Candidate& b) { return a.lambda.real() < b.lambda.real(); });
    std::sort(pairs.begin(), pairs.end(), [](const Candidate& a, const Candidate& b) {
        return a.lambda.imag() != b.lambda.imag() ? a.lambda.imag() < b.lambda.imag() : a.lambda.real() < b.lambda.real();
    });

    Spectrum spec;
    spec.T.resize(n, n);
    Index col = 0;
    for (const auto& c : reals) {
        spec.real_eigs.push_back(c.lambda.real());
        spec.T.col(col++) = c.vec;
    }
    for (const auto& c : pairs) {
        spec.complex_pairs.push_back({c.lambda.real(), c.lambda.imag()});
        spec.T.col(col++) = c.vec;
        spec.T.col(col++) = c.vec.conjugate();
    }

    CMat unit = spec.T;
    for (Index j = 0; j < n; ++j) unit.col(j).normalize();
    Eigen::JacobiSVD<CMat> svd(unit);
    const auto& sv = svd.singularValues();
    if (sv(n - 1) < num.defective_tol * sv(0)) {
        std::ostringstream os;
        os << "Xi is defective or nearly so (eigenvector conditioning " << sv(n - 1) / sv(0) << ")";
        throw DefectiveGenerator(os.str());
    }
    spec.T_inv = spec.T.inverse();

    const CMat PiT = gen.Pi().cast<cplx>() * spec.T;
    for (Index j = 0; j < n; ++j) spec.pi_bars.emplace_back(PiT.col(j));

    double lmax = 0.0;
    for (Index i = 0; i < n; ++i) lmax = std::max(lmax, std::abs(lambdas(i)));
    for (Index i = 0; i < n; ++i) {
        for (Index j = i + 1; j < n; ++j) {
            if (std::abs(lambdas(i) - lambdas(j)) <= num.distinct_tol * (1.0 + lmax)) {
                std::ostringstream os;
                os << "NearRepeatedEigenvalues: generator eigenvalues " << lambdas(i) << " and " << lambdas(j)
                   << " are not distinct";
                spec.warnings.push_back(os.str());
            }
        }
    }
    for (Index i = 0; i < spec.modes(); ++i) {
        if (spec.mode_lambda(i).real() < 0.0) {
            std::ostringstream os;
            os << "generator eigenvalue " << spec.mode_lambda(i) << " has negative real part (decaying input)";
            spec.warnings.push_back(os.str());
        }
    }
    return spec;
}

Mat real_block_basis(const Spectrum& spec) {
    const Index n = spec.m_xi();
    Mat V(n, n);
    for (Index j = 0; j < spec.m_r(); ++j) V.col(j) = spec.T.col(j).real();
    for (Index k = 0; k < spec.m_c(); ++k) {
        const Index j = spec.m_r() + 2 * k;
        V.col(j) = spec.T.col(j).real();
        V.col(j + 1) = -spec.T.col(j).imag();
    }
    return V;
}

Vec state_at(const InputGenerator& gen, double t) {
    const Mat expXi = (gen.Xi() * t).exp();
    return expXi * gen.xi0();
}

XiBar xi_bar_components(const Spectrum& spec, const Vec& xi_t) {
    if (xi_t.size() != spec.m_xi()) throw DimensionMismatch("xi has the wrong length for this spectrum");
    const CVec z = spec.T_inv * xi_t.cast<cplx>();
    XiBar out;
    for (Index i = 0; i < spec.m_r(); ++i) {
        if (std::abs(z(i).imag()) > 1e-8 * (1.0 + std::abs(z(i).real()))) {
            std::ostringstream os;
            os << "component " << i << " of T^-1 xi should be real but has imaginary part " << z(i).imag();
            throw ComponentNotReal(os.str());
        }
        out.real.push_back(z(i).real());
    }
    for (Index k = 0; k < spec.m_c(); ++k) out.complex.push_back(z(spec.m_r() + 2 * k));
    return out;
}

}  // namespace lftid
