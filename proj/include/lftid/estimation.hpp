#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lftid/igs.hpp"
#include "lftid/model.hpp"
#include "lftid/response.hpp"

namespace lftid {

// Which generator eigenvalue a block of width m_z belongs to, and which part.
struct BlockTag {
    enum class Part { Real, ComplexRe, ComplexIm };
    cplx lambda;
    Part part = Part::Real;
};

std::vector<BlockTag> block_tags(const Spectrum& spec);

// Parameter-free TFMs at each mode of the spectrum (reals, then one per pair).
// Throws NominalPoleCollision when a mode is a generalized eigenvalue of (E, A_xx).
std::vector<GBlocks> g_at_modes(const LftPlant& plant, const Spectrum& spec);

// Hbar(s, theta) = G_yv P (I - G_zv P)^-1 stacked as [Hbar_r | Re Hbar_c, Im Hbar_c].
Mat stacked_hbar(const LftPlant& plant, const ParameterVector& theta, const Spectrum& spec);

struct Regression {
    Mat Ybar;    // m_y x N
    Mat Ubar;    // blocks*m_z x N
    Mat Utilde;  // blocks*m_u x N
    std::vector<BlockTag> tags;
    Index m_z = 0;
    Index m_u = 0;
};

Regression build_regression(const LftPlant& plant, const InputGenerator& gen, const SampleSet& samples);
Regression build_regression(const LftPlant& plant, const InputGenerator& gen, const Spectrum& spec,
                            const std::vector<GBlocks>& g, const SampleSet& samples);

struct TfmEstimate {
    Mat Hbar;  // m_y x blocks*m_z
    Mat Phi;   // (Ubar Ubar^T)^-1
    Index N = 0;
    Index m_z = 0;
    std::vector<BlockTag> tags;

    Mat block(Index i) const { return Hbar.middleCols(i * m_z, m_z); }
};

// Hbar = Ybar Ubar^T (Ubar Ubar^T)^-1. Throws NotPersistentlyExciting when Ubar
// lacks full row rank.
TfmEstimate estimate_tfm(const Regression& reg);

// One recursive least-squares step with a new column (y_new, u_new).
TfmEstimate update_tfm(const TfmEstimate& est, const Vec& y_new, const Vec& u_new);

struct ParametricSystem {
    Mat Psi;    // m_y*m_z*blocks x m_theta
    Vec hbar;
    Mat Psi_p;  // m_v*m_z x m_theta, columns vec(P_k)
    Mat Psi_g;  // m_y*m_z*blocks x m_v*m_z, empty unless a reference theta was given
    std::optional<ParameterVector> reference_theta;
};

// Psi theta = hbar + e from the estimated blocks. Psi_g is evaluated at
// reference_theta when supplied.
ParametricSystem build_parametric(const LftPlant& plant, const Spectrum& spec, const TfmEstimate& est,
                                  const std::optional<ParameterVector>& reference_theta = std::nullopt);

// Psi_g(theta): one (I_{m_z} kron G_yv (I - P G_zv)^-1) block per regressor block
// (real and imaginary parts for pairs).
Mat psi_g(const LftPlant& plant, const Spectrum& spec, const ParameterVector& theta);
Mat psi_p(const LftPlant& plant);

// Throws NotIdentifiableFromData unless Psi_g(theta) Psi_p has full column rank.
void require_identifiable_at(const LftPlant& plant, const Spectrum& spec, const ParameterVector& theta);

struct ThetaEstimate {
    ParameterVector theta;
    double residual = 0.0;   // ||Psi theta - hbar||
    double sigma_min = 0.0;  // smallest singular value of Psi
};

// Least-squares solution of Psi theta = hbar through a column-pivoted QR.
// Throws NotIdentifiableFromData when Psi lacks full column rank.
ThetaEstimate estimate_theta(const ParametricSystem& ps);

struct RankCheck {
    bool ok = false;
    double sigma_min = 0.0;
};

struct ExcitationReport {
    Mat gzu_block;             // block-diagonal G_zu over the generator modes
    RankCheck gzu_frr;         // necessary condition
    RankCheck ubar_frr;        // Ubar full row rank
    RankCheck augmented_frr;   // [Utilde, null(G_zu block)] full row rank
    Mat gzu_null;              // right null-space basis of gzu_block
    double fsN = 0.0;          // lambda_min(Utilde Utilde^T)
    std::optional<RankCheck> psi_fcr;
    std::optional<RankCheck> identifiable_at_theta;  // rank of Psi_g Psi_p

    bool persistently_exciting() const { return gzu_frr.ok && augmented_frr.ok; }
};

// Block-diagonal G_zu: G_zu(l_r) for real modes, [[Re G, -Im G], [-Im G, -Re G]] per pair.
Mat gzu_block_matrix(const Spectrum& spec, const std::vector<GBlocks>& g);

ExcitationReport check_excitation(const LftPlant& plant, const Spectrum& spec, const Regression& reg,
                                  const ParametricSystem* ps = nullptr);

void write_excitation_report(std::ostream& os, const ExcitationReport& rep);
void write_tfm_estimate_csv(std::ostream& os, const TfmEstimate& est);

// Both identification steps on one sample set.
struct Identification {
    Spectrum spec;
    Regression reg;
    TfmEstimate tfm;
    ParametricSystem parametric;
    ThetaEstimate theta;
    ExcitationReport excitation;
};

Identification identify(const LftPlant& plant, const InputGenerator& gen, const SampleSet& samples,
                        const std::optional<ParameterVector>& reference_theta = std::nullopt);

}  // namespace lftid
