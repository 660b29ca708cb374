#include "lftid/estimation.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/KroneckerProduct>

namespace lftid {

std::vector<BlockTag> block_tags(const Spectrum& spec) {
    std::vector<BlockTag> tags;
    for (double l : spec.real_eigs) tags.push_back({cplx(l, 0.0), BlockTag::Part::Real});
    for (const auto& p : spec.complex_pairs) {
        tags.push_back({p.lambda(), BlockTag::Part::ComplexRe});
        tags.push_back({p.lambda(), BlockTag::Part::ComplexIm});
    }
    return tags;
}

std::vector<GBlocks> g_at_modes(const LftPlant& plant, const Spectrum& spec) {
    std::vector<GBlocks> out;
    for (Index i = 0; i < spec.modes(); ++i) {
        const cplx l = spec.mode_lambda(i);
        try {
            out.push_back(eval_g(plant, l));
        } catch (const SingularPencil&) {
            std::ostringstream os;
            os << "generator eigenvalue " << l
               << " is a generalized eigenvalue of the nominal pencil (E, A_xx); the parameter-free TFMs do not exist there";
            throw NominalPoleCollision(os.str());
        }
    }
    return out;
}

Mat stacked_hbar(const LftPlant& plant, const ParameterVector& theta, const Spectrum& spec) {
    const auto g = g_at_modes(plant, spec);
    const CMat P = plant.P(theta).cast<cplx>();
    const Index mz = plant.m_z();
    Mat out(plant.m_y(), spec.blocks() * mz);
    for (Index i = 0; i < spec.modes(); ++i) {
        const GBlocks& gi = g[static_cast<std::size_t>(i)];
        const CMat loop = CMat::Identity(mz, mz) - gi.zv * P;
        // Hbar = G_yv P (I - G_zv P)^-1, computed as the transpose solve.
        const CMat GP = gi.yv * P;
        const CMat Hb = solve_or_throw(loop.transpose(), GP.transpose(), "I - G_zv P(theta) is singular").transpose();
        if (i < spec.m_r()) {
            out.middleCols(i * mz, mz) = Hb.real();
        } else {
            const Index b = spec.m_r() + 2 * (i - spec.m_r());
            out.middleCols(b * mz, mz) = Hb.real();
            out.middleCols((b + 1) * mz, mz) = Hb.imag();
        }
    }
    return out;
}

Regression build_regression(const LftPlant& plant, const InputGenerator& gen, const SampleSet& samples) {
    const Spectrum spec = decompose(gen);
    return build_regression(plant, gen, spec, g_at_modes(plant, spec), samples);
}

Regression build_regression(const LftPlant& plant, const InputGenerator& gen, const Spectrum& spec,
                            const std::vector<GBlocks>& g, const SampleSet& samples) {
    samples.validate();
    if (samples.m_y() != plant.m_y()) throw DimensionMismatch("samples have the wrong output dimension");
    if (gen.m_u() != plant.m_u()) throw DimensionMismatch("generator output size differs from plant input size");
    const Index N = samples.size();
    const Index mz = plant.m_z(), mu = plant.m_u(), my = plant.m_y();
    const Index nb = spec.blocks();

    // Per-mode constants G_yu(l) pibar and G_zu(l) pibar.
    std::vector<CVec> gyu_pi, gzu_pi;
    std::vector<CVec> pis;
    for (Index i = 0; i < spec.modes(); ++i) {
        const CVec& pi = spec.pi_bars[static_cast<std::size_t>(spec.mode_column(i))];
        pis.push_back(pi);
        gyu_pi.push_back(g[static_cast<std::size_t>(i)].yu * pi);
        gzu_pi.push_back(g[static_cast<std::size_t>(i)].zu * pi);
    }

    Regression reg;
    reg.tags = block_tags(spec);
    reg.m_z = mz;
    reg.m_u = mu;
    reg.Ybar.resize(my, N);
    reg.Ubar.resize(nb * mz, N);
    reg.Utilde.resize(nb * mu, N);
    for (Index k = 0; k < N; ++k) {
        const Vec xi = state_at(gen, samples.times[static_cast<std::size_t>(k)]);
        const XiBar xb = xi_bar_components(spec, xi);
        Vec ybar = samples.y.col(k);
        for (Index i = 0; i < spec.m_r(); ++i) {
            const double c = xb.real[static_cast<std::size_t>(i)];
            const auto si = static_cast<std::size_t>(i);
            ybar -= c * gyu_pi[si].real();
            reg.Ubar.block(i * mz, k, mz, 1) = c * gzu_pi[si].real();
            reg.Utilde.block(i * mu, k, mu, 1) = c * pis[si].real();
        }
        for (Index j = 0; j < spec.m_c(); ++j) {
            const cplx c = xb.complex[static_cast<std::size_t>(j)];
            const auto si = static_cast<std::size_t>(spec.m_r() + j);
            ybar -= 2.0 * (c * gyu_pi[si]).real();
            const CVec ub = c * gzu_pi[si];
            const CVec ut = c * pis[si];
            const Index b = spec.m_r() + 2 * j;
            reg.Ubar.block(b * mz, k, mz, 1) = 2.0 * ub.real();
            reg.Ubar.block((b + 1) * mz, k, mz, 1) = -2.0 * ub.imag();
            reg.Utilde.block(b * mu, k, mu, 1) = ut.real();
            reg.Utilde.block((b + 1) * mu, k, mu, 1) = ut.imag();
        }
        reg.Ybar.col(k) = ybar;
    }
    return reg;
}

TfmEstimate estimate_tfm(const Regression& reg) {
    const Index rows = reg.Ubar.rows();
    const Index N = reg.Ubar.cols();
    if (N < rows) {
        std::ostringstream os;
        os << "only " << N << " samples for " << rows << " regressor rows; the data cannot be persistently exciting";
        throw NotPersistentlyExciting(os.str(), 0.0);
    }
    const RankInfo ri = full_row_rank(reg.Ubar);
    if (!ri.full) {
        std::ostringstream os;
        os << "the regressor matrix is rank deficient (smallest singular value " << ri.sigma_min << ")";
        throw NotPersistentlyExciting(os.str(), ri.sigma_min);
    }
    TfmEstimate est;
    est.N = N;
    est.m_z = reg.m_z;
    est.tags = reg.tags;
    const Mat gram = reg.Ubar * reg.Ubar.transpose();
    est.Phi = gram.ldlt().solve(Mat::Identity(rows, rows));
    est.Phi = 0.5 * (est.Phi + est.Phi.transpose());
    // Orthogonal factorization of Ubar^T for the estimate itself.
    est.Hbar = reg.Ubar.transpose().colPivHouseholderQr().solve(reg.Ybar.transpose()).transpose();
    return est;
}

TfmEstimate update_tfm(const TfmEstimate& est, const Vec& y_new, const Vec& u_new) {
    if (u_new.size() != est.Phi.rows() || y_new.size() != est.Hbar.rows())
        throw DimensionMismatch("new sample has the wrong dimensions");
    TfmEstimate out = est;
    const Vec Pu = est.Phi * u_new;
    const double denom = 1.0 + u_new.dot(Pu);
    out.Phi = est.Phi - Pu * Pu.transpose() / denom;
    out.Hbar = est.Hbar + (y_new - est.Hbar * u_new) * Pu.transpose() / denom;
    out.N = est.N + 1;
    return out;
}

Mat psi_p(const LftPlant& plant) {
    Mat out(plant.m_v() * plant.m_z(), plant.m_theta());
    for (Index k = 0; k < plant.m_theta(); ++k) out.col(k) = vectorize(plant.basis()[static_cast<std::size_t>(k)]);
    return out;
}

Mat psi_g(const LftPlant& plant, const Spectrum& spec, const ParameterVector& theta) {
    const auto g = g_at_modes(plant, spec);
    const CMat P = plant.P(theta).cast<cplx>();
    const Index mv = plant.m_v(), mz = plant.m_z(), my = plant.m_y();
    const Index rows_per = my * mz;
    Mat out(rows_per * spec.blocks(), mv * mz);
    const Mat Iz = Mat::Identity(mz, mz);
    for (Index i = 0; i < spec.modes(); ++i) {
        const GBlocks& gi = g[static_cast<std::size_t>(i)];
        const CMat loop = CMat::Identity(mv, mv) - P * gi.zv;
        // G_yv (I - P G_zv)^-1 through the transpose solve.
        const CMat Xc = solve_or_throw(loop.transpose(), gi.yv.transpose(),
                                       "a generator eigenvalue is a generalized eigenvalue of (E, A(theta))")
                            .transpose();
        if (i < spec.m_r()) {
            out.middleRows(i * rows_per, rows_per) = Eigen::kroneckerProduct(Iz, Mat(Xc.real()));
        } else {
            const Index b = spec.m_r() + 2 * (i - spec.m_r());
            out.middleRows(b * rows_per, rows_per) = Eigen::kroneckerProduct(Iz, Mat(Xc.real()));
            out.middleRows((b + 1) * rows_per, rows_per) = Eigen::kroneckerProduct(Iz, Mat(Xc.imag()));
        }
    }
    return out;
}

void require_identifiable_at(const LftPlant& plant, const Spectrum& spec, const ParameterVector& theta) {
    const RankInfo ri = full_column_rank(psi_g(plant, spec, theta) * psi_p(plant));
    if (!ri.full) {
        std::ostringstream os;
        os << "theta is not identifiable from TFM values at the generator eigenvalues (smallest singular value "
           << ri.sigma_min << ")";
        throw NotIdentifiableFromData(os.str(), ri.sigma_min);
    }
}

ParametricSystem build_parametric(const LftPlant& plant, const Spectrum& spec, const TfmEstimate& est,
                                  const std::optional<ParameterVector>& reference_theta) {
    const Index mz = plant.m_z(), my = plant.m_y(), nt = plant.m_theta();
    if (est.m_z != mz || est.Hbar.rows() != my || est.Hbar.cols() != spec.blocks() * mz)
        throw DimensionMismatch("TFM estimate does not match the plant and spectrum");
    const auto g = g_at_modes(plant, spec);
    const Index rows_per = my * mz;
    ParametricSystem ps;
    ps.Psi.resize(rows_per * spec.blocks(), nt);
    ps.hbar.resize(rows_per * spec.blocks());

    auto fill = [&](Index block, const Mat& X) {
        for (Index k = 0; k < nt; ++k)
            ps.Psi.block(block * rows_per, k, rows_per, 1) = vectorize(X * plant.basis()[static_cast<std::size_t>(k)]);
        ps.hbar.segment(block * rows_per, rows_per) = vectorize(est.block(block));
    };

    for (Index i = 0; i < spec.m_r(); ++i) {
        const GBlocks& gi = g[static_cast<std::size_t>(i)];
        fill(i, gi.yv.real() + est.block(i) * gi.zv.real());
    }
    for (Index j = 0; j < spec.m_c(); ++j) {
        const GBlocks& gi = g[static_cast<std::size_t>(spec.m_r() + j)];
        const Index b = spec.m_r() + 2 * j;
        const Mat Hr = est.block(b), Hi = est.block(b + 1);
        const Mat yvr = gi.yv.real(), yvi = gi.yv.imag(), zvr = gi.zv.real(), zvi = gi.zv.imag();
        fill(b, yvr + Hr * zvr - Hi * zvi);
        fill(b + 1, yvi + Hr * zvi + Hi * zvr);
    }
    ps.Psi_p = psi_p(plant);
    if (reference_theta) {
        ps.reference_theta = reference_theta;
        ps.Psi_g = psi_g(plant, spec, *reference_theta);
    }
    return ps;
}

ThetaEstimate estimate_theta(const ParametricSystem& ps) {
    const RankInfo ri = full_column_rank(ps.Psi);
    if (!ri.full) {
        std::ostringstream os;
        os << "the parametric regressor lacks full column rank (smallest singular value " << ri.sigma_min
           << "); theta is not identifiable from these TFM values";
        throw NotIdentifiableFromData(os.str(), ri.sigma_min);
    }
    ThetaEstimate out;
    const Vec theta = ps.Psi.colPivHouseholderQr().solve(ps.hbar);
    out.theta = ParameterVector(theta);
    out.residual = (ps.Psi * theta - ps.hbar).norm();
    out.sigma_min = ri.sigma_min;
    return out;
}

Mat gzu_block_matrix(const Spectrum& spec, const std::vector<GBlocks>& g) {
    if (g.empty()) return Mat();
    const Index mz = g.front().zu.rows(), mu = g.front().zu.cols();
    Mat out = Mat::Zero(spec.blocks() * mz, spec.blocks() * mu);
    for (Index i = 0; i < spec.m_r(); ++i)
        out.block(i * mz, i * mu, mz, mu) = g[static_cast<std::size_t>(i)].zu.real();
    for (Index j = 0; j < spec.m_c(); ++j) {
        const CMat& G = g[static_cast<std::size_t>(spec.m_r() + j)].zu;
        const Index b = spec.m_r() + 2 * j;
        out.block(b * mz, b * mu, mz, mu) = G.real();
        out.block(b * mz, (b + 1) * mu, mz, mu) = -G.imag();
        out.block((b + 1) * mz, b * mu, mz, mu) = -G.imag();
        out.block((b + 1) * mz, (b + 1) * mu, mz, mu) = -G.real();
    }
    return out;
}

ExcitationReport check_excitation(const LftPlant& plant, const Spectrum& spec, const Regression& reg,
                                  const ParametricSystem* ps) {
    ExcitationReport rep;
    const auto g = g_at_modes(plant, spec);
    rep.gzu_block = gzu_block_matrix(spec, g);
    const RankInfo gi = full_row_rank(rep.gzu_block);
    rep.gzu_frr = {gi.full, gi.sigma_min};
    const RankInfo ui = full_row_rank(reg.Ubar);
    rep.ubar_frr = {ui.full, ui.sigma_min};
    rep.gzu_null = right_null_space(rep.gzu_block);
    Mat aug(reg.Utilde.rows(), reg.Utilde.cols() + rep.gzu_null.cols());
    aug << reg.Utilde, rep.gzu_null;
    const RankInfo ai = full_row_rank(aug);
    rep.augmented_frr = {ai.full, ai.sigma_min};
    if (reg.Utilde.rows() > 0) {
        const Mat gram = reg.Utilde * reg.Utilde.transpose();
        Eigen::SelfAdjointEigenSolver<Mat> es(gram, Eigen::EigenvaluesOnly);
        rep.fsN = std::max(0.0, es.eigenvalues()(0));
    }
    if (ps) {
        const RankInfo pi = full_column_rank(ps->Psi);
        rep.psi_fcr = RankCheck{pi.full, pi.sigma_min};
        if (ps->Psi_g.size() > 0) {
            const RankInfo ii = full_column_rank(ps->Psi_g * ps->Psi_p);
            rep.identifiable_at_theta = RankCheck{ii.full, ii.sigma_min};
        }
    }
    return rep;
}

namespace {
const char* pass(bool ok) { return ok ? "PASS" : "FAIL"; }
}  // namespace

void write_excitation_report(std::ostream& os, const ExcitationReport& rep) {
    os << std::setprecision(10);
    os << "gzu_full_row_rank=" << (rep.gzu_frr.ok ? "true" : "false") << "\n";
    os << "gzu_sigma_min=" << rep.gzu_frr.sigma_min << "\n";
    os << "ubar_full_row_rank=" << (rep.ubar_frr.ok ? "true" : "false") << "\n";
    os << "ubar_sigma_min=" << rep.ubar_frr.sigma_min << "\n";
    os << "utilde_gzu_null_full_row_rank=" << (rep.augmented_frr.ok ? "true" : "false") << "\n";
    os << "utilde_gzu_null_sigma_min=" << rep.augmented_frr.sigma_min << "\n";
    os << "fsN=" << rep.fsN << "\n";
    if (rep.psi_fcr) {
        os << "psi_full_column_rank=" << (rep.psi_fcr->ok ? "true" : "false") << "\n";
        os << "psi_sigma_min=" << rep.psi_fcr->sigma_min << "\n";
    }
    if (rep.identifiable_at_theta) {
        os << "identifiable_at_theta=" << (rep.identifiable_at_theta->ok ? "true" : "false") << "\n";
        os << "psi_g_psi_p_sigma_min=" << rep.identifiable_at_theta->sigma_min << "\n";
    }
    os << pass(rep.gzu_frr.ok) << " block G_zu over generator modes has full row rank\n";
    os << pass(rep.augmented_frr.ok) << " [Utilde, null(G_zu block)] has full row rank\n";
}

void write_tfm_estimate_csv(std::ostream& os, const TfmEstimate& est) {
    os << "block,lambda_re,lambda_im,part,row,col,value\n" << std::setprecision(17);
    for (std::size_t b = 0; b < est.tags.size(); ++b) {
        const BlockTag& t = est.tags[b];
        const char* part = t.part == BlockTag::Part::Real ? "real" : t.part == BlockTag::Part::ComplexRe ? "re" : "im";
        const Mat blk = est.block(static_cast<Index>(b));
        for (Index i = 0; i < blk.rows(); ++i)
            for (Index j = 0; j < blk.cols(); ++j)
                os << b << "," << t.lambda.real() << "," << t.lambda.imag() << "," << part << "," << i << "," << j << ","
                   << blk(i, j) << "\n";
    }
}

Identification identify(const LftPlant& plant, const InputGenerator& gen, const SampleSet& samples,
                        const std::optional<ParameterVector>& reference_theta) {
    Identification out;
    out.spec = decompose(gen);
    const auto g = g_at_modes(plant, out.spec);
    out.reg = build_regression(plant, gen, out.spec, g, samples);
    out.tfm = estimate_tfm(out.reg);
    out.parametric = build_parametric(plant, out.spec, out.tfm, reference_theta);
    out.excitation = check_excitation(plant, out.spec, out.reg, &out.parametric);
    out.theta = estimate_theta(out.parametric);
    if (!reference_theta) {
        // Post-hoc audit at the estimate.
        out.parametric.reference_theta = out.theta.theta;
        try {
            out.parametric.Psi_g = psi_g(plant, out.spec, out.theta.theta);
            out.excitation = check_excitation(plant, out.spec, out.reg, &out.parametric);
        } catch (const SingularPencil&) {
            out.parametric.Psi_g.resize(0, 0);
        }
    }
    return out;
}

}  // namespace lftid
