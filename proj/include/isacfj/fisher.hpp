// SPDX-License-Identifier: Apache-2.0
//
// isacfj - secure multicarrier ISAC simulation with sensing-guided friendly jamming
// Copyright (C) 2026 The isacfj Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef ISACFJ_FISHER_HPP
#define ISACFJ_FISHER_HPP

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "isacfj/channel.hpp"
#include "isacfj/numerics.hpp"

namespace isacfj {

/// Which power factor multiplies the closed-form Fisher information:
/// the per-subcarrier jamming power zeta, or a fixed sensing SNR.
enum class FimScaling { jam_power, sensing_snr };

enum class CrlbConvention {
    scalar, ///< 1 / J_ww
    matrix, ///< (J^-1)_ww
};

enum class FimSource { closed_form, covariance_form, nonparametric };

const char* to_string(FimSource s);

/// Steering response and its angle derivatives at a fixed look direction.
struct SensingModel {
    ArrayGeometry geom;
    SteeringMode mode = SteeringMode::bistatic;
    double theta = 0.0;
    double phi = 0.0;
    CMat G;
    CMat dG_dtheta;
    CMat dG_dphi;
    double sigma_s2 = 1.0;
    double snr_sense = 1.0;
    FimScaling scaling = FimScaling::jam_power;
    std::optional<CMat> noise_cov; ///< colored noise covariance (rows of G)

    static SensingModel make(const ArrayGeometry& geom, SteeringMode mode, double theta, double phi,
                             double sigma_s2 = 1.0);

    const CMat& derivative(Angle which) const { return which == Angle::theta ? dG_dtheta : dG_dphi; }
    void validate() const;
};

/// J_w = (2 c / sigma_s2) ||A_w v||^2 with c = zeta or the sensing SNR.
double fim_closed_form(const SensingModel& sm, const CVec& v, double zeta, Angle which);

/// Full 2x2 matrix with entries (2 c / sigma_s2) Re((A_i v)^H (A_j v)).
RMat fim_matrix_closed_form(const SensingModel& sm, const CVec& v, double zeta);

/// (2 / sigma_s2) sum_n tr(R_s[n] A^H A) with R_s[n] = S[n] S[n]^H, or
/// 2 sum_n tr(R_s[n] A^H Sigma^-1 A) when a noise covariance is set.
double fim_covariance_form(const SensingModel& sm, std::span<const CMat> probing, Angle which);

/// Same quantity evaluated as sum_n ||A S[n]||_F^2 (whitened if colored).
double fim_frobenius_form(const SensingModel& sm, std::span<const CMat> probing, Angle which);

/// 1/J, or +infinity when J is not positive.
double crlb_from_information(double j);

struct CrlbPair {
    double theta;
    double phi;
};

CrlbPair crlb(const RMat& j, CrlbConvention conv = CrlbConvention::scalar);

// ------------------------------------------------------------------------
// Nonparametric estimation
// ------------------------------------------------------------------------

struct PerturbationSet {
    int d = 2;
    std::vector<RVec> deltas;
    double scale = 0.05;

    int count() const { return static_cast<int>(deltas.size()); }
    void validate() const;

    /// scale * {e1, e2, (e1+e2)/sqrt2, (e1-e2)/sqrt2, ...}, truncated or
    /// cycled to `count` entries.
    static PerturbationSet structured(double scale, int count = 4);
    /// i.i.d. N(0, scale^2) entries, redrawn until U is well conditioned.
    static PerturbationSet gaussian(double scale, int count, Stream& rng);
};

/// Row i is [delta_1^2, ..., delta_d^2, 2 delta_1 delta_2, ...].
RMat build_u_matrix(const PerturbationSet& ps);
RVec u_row(const RVec& delta);

/// Symmetric matrix from [diagonal..., upper off-diagonals row by row].
RMat fvec_to_mat(const RVec& f, int d);
RVec mat_to_fvec(const RMat& j);

/// f = 2 (U^T U)^-1 U^T d.
RVec ls_fim(const RMat& u, const RVec& d_vec);

struct FimEstimate {
    RMat J;
    RVec f_vec;
    RMat U;
    RVec d_vec;
    double crlb_theta = 0.0;
    double crlb_phi = 0.0;
    FimSource source = FimSource::nonparametric;
    CrlbConvention convention = CrlbConvention::scalar;
    bool converged = true;
    int iterations = 0;
};

struct RefineOptions {
    int max_iter = 200;
    double tol = 1e-8;
    CrlbConvention convention = CrlbConvention::scalar;
};

/// Minimizes ||2d - U f||^2 with the anchored entries held at their LS
/// values and mat(f) PSD. Projected gradient; the projection onto the
/// anchored PSD set uses Dykstra's alternating scheme.
FimEstimate psd_refine(const RVec& f_ls, const RMat& u, const RVec& d_vec, std::vector<int> anchors = {},
                       const RefineOptions& opt = {});

struct DiscriminatorConfig {
    int hidden = 128;
    int steps = 300;
    double step_size = 1e-3;
    int batch = 128;
    int samples = 5000;
};

/// Draws `count` echo snapshots at the given angles, one per row, as real
/// feature vectors.
using EchoSampler = std::function<RMat(double theta, double phi, int count, Stream& rng)>;

/// y = sqrt(zeta) G(theta, phi) v + n with n ~ CN(0, sigma_s2 I),
/// flattened to [Re y, Im y].
EchoSampler gaussian_echo_sampler(const SensingModel& sm, const CVec& v, double zeta);

/// Donsker-Varadhan lower bound on KL(P || Q) from a trained critic,
/// evaluated on all samples and clipped at zero.
double dv_divergence(const RMat& p_samples, const RMat& q_samples, const DiscriminatorConfig& cfg, Stream& rng);

/// One divergence per perturbation: KL(p(theta, phi) || p(theta + d1, phi + d2)).
RVec estimate_divergences(const EchoSampler& sampler, double theta, double phi, const PerturbationSet& ps,
                          const DiscriminatorConfig& cfg, Stream& rng);

/// Divergences, least squares and PSD refinement in one call.
FimEstimate fim_nonparametric(const SensingModel& sm, const CVec& v, double zeta, const PerturbationSet& ps,
                              const DiscriminatorConfig& cfg, Stream& rng,
                              CrlbConvention conv = CrlbConvention::scalar);

FimEstimate fim_estimate_closed_form(const SensingModel& sm, const CVec& v, double zeta,
                                     CrlbConvention conv = CrlbConvention::scalar);

/// Unit beam on which both angles carry equal closed-form information.
/// Throws when one angle dominates for every beam.
CVec balanced_probe_beam(const SensingModel& sm);

struct FimValidationReport {
    RMat closed_form;           ///< reference J
    std::vector<RMat> estimates; ///< one nonparametric J per seed
    double rel_err_theta = 0.0; ///< mean over seeds of |J_est - J| / J, theta entry
    double rel_err_phi = 0.0;
    double tolerance = 0.15;
    bool pass = false;
};

/// Nonparametric against closed-form diagonal information over `seeds`
/// independent estimator runs.
FimValidationReport fim_validate(const SensingModel& sm, const CVec& v, double zeta, const PerturbationSet& ps,
                                 const DiscriminatorConfig& cfg, int seeds, std::uint64_t master,
                                 double tolerance = 0.15);

} // namespace isacfj

#endif
