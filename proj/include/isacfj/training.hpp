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

#ifndef ISACFJ_TRAINING_HPP
#define ISACFJ_TRAINING_HPP

#include <functional>
#include <string>
#include <vector>

#include "isacfj/beamforming.hpp"
#include "isacfj/channel.hpp"
#include "isacfj/fisher.hpp"
#include "isacfj/neural.hpp"
#include "isacfj/rates.hpp"

namespace isacfj {

enum class EncoderKind { dtte, fc };
enum class FimPipeline { closed_form, nonparametric };
enum class Objective { sum_secrecy, worst_user };

struct TrainConfig {
    int epochs_stage1 = 200;
    int steps_per_epoch = 8; ///< mini-batches per epoch (1024 messages at batch 128)
    int iters_stage2 = 20;
    int batch = 128;
    double step_size = 1e-3;
    /// Cosine decay of the encoder step size to this fraction by the last
    /// epoch; 1 keeps it constant.
    double step_size_final = 0.05;
    double lambda = 1.0;
    double crlb0_theta = 1e-3; ///< linear (-30 dB)
    double crlb0_phi = 1e-3;
    int msg_alphabet = 4;
    int candidate_count = 16;
    int reinit_after = 5;
    EncoderKind encoder = EncoderKind::dtte;
    FimPipeline fisher = FimPipeline::closed_form;
    Objective objective = Objective::sum_secrecy;
    CrlbConvention convention = CrlbConvention::scalar;
    int tt_rank = 8;
    double quant_delta = 0.0; ///< post-training core quantization; 0 = off
    /// Jamming power fractions tried by the power search (0 excluded).
    std::vector<double> jam_fractions{0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5};
    int proxy_eve_draws = 4;
    /// Phase-noise variance used for augmentation; 0 trains for ideal hardware.
    double robust_pn_variance = 0.0;
    int robust_draws = 4;
    DiscriminatorConfig discriminator;
    double perturbation_scale = 0.05;
    int perturbation_count = 4;

    void validate() const;
};

/// Everything the base station knows or is simulated with for one draw.
struct ProblemInstance {
    ArrayGeometry geom;
    SteeringMode mode = SteeringMode::planar_kronecker;
    ChannelRealization ch;
    CsiEstimate csi;
    AngleState angles;
    PowerAllocation pa;
    PowerMode power_mode = PowerMode::average;
    /// Carriers that probe and jam; empty = all (fully overlapping).
    std::vector<bool> sense_carriers;
    /// Sampled eavesdropper channel sets over which the worst-case secrecy
    /// objective is defined; empty = draw proxy sets.
    std::vector<std::vector<CMat>> eve_candidates;

    int n_sub() const { return ch.n_sub(); }
    int users() const { return ch.users(); }
    bool senses(int n) const { return sense_carriers.empty() || sense_carriers[static_cast<std::size_t>(n)]; }
    /// Sensing model at the estimated angles.
    SensingModel sensing() const;
};

// ------------------------------------------------------------------------
// Features and encoders
// ------------------------------------------------------------------------

/// [Re vec(H_hat), Im vec(H_hat), gamma, zeta, theta_hat, phi_hat, n/N] for
/// the 1-based subcarrier index n. vec() stacks columns; gamma is the
/// mean user power on the carrier.
RVec build_features(const CsiEstimate& csi, const PowerAllocation& pa, const AngleState& angles, int n, int n_total);

/// Feature matrix with one row per subcarrier.
RMat build_feature_matrix(const CsiEstimate& csi, const PowerAllocation& pa, const AngleState& angles);

int feature_length(int users, int n_tx);

/// Two near-square factors of n (the smaller first), or of n + 1 when n is prime.
std::vector<int> tt_input_modes(int n);

/// Maps per-subcarrier features to (K + 1) * 2 N_t reals: K user beams and
/// one jamming beam as [Re, Im] halves.
class BeamEncoder {
public:
    BeamEncoder() = default;
    static BeamEncoder make(EncoderKind kind, int n_tx, int users, double p_max, Stream& rng, int tt_rank = 8);

    RMat forward(const RMat& features, nn::Mode mode);
    void backward(const RMat& grad_out);
    std::vector<nn::ParamView> params() { return net_.params(); }
    void zero_grad() { net_.zero_grad(); }
    std::size_t param_count() { return net_.param_count(); }
    void quantize(double delta);

    EncoderKind kind() const { return kind_; }
    int input_dim() const { return input_dim_; }
    int output_dim() const { return output_dim_; }
    nn::Network& network() { return net_; }
    const nn::Network& network() const { return net_; }

private:
    nn::Network net_;
    EncoderKind kind_ = EncoderKind::dtte;
    int input_dim_ = 0;
    int padded_dim_ = 0;
    int output_dim_ = 0;
    RVec input_scale_;
};

/// Deep TT encoder: TT(in -> 20*6, ranks (1, r, 1)) -> ReLU -> FC(120 -> 123)
/// -> ReLU -> FC(123 -> out).
nn::Network make_dtte(const std::vector<int>& in_modes, int out_dim, int tt_rank, Stream& rng);
/// FC(in -> 128) -> ReLU -> FC(128 -> out) -> BatchNorm.
nn::Network make_fc_encoder(int in_dim, int out_dim, Stream& rng);
/// FC(2 -> 128) -> ReLU -> FC(128 -> M); softmax is folded into the loss.
nn::Network make_decoder(int alphabet, Stream& rng);

struct DecodedBeams {
    CMat user_beams; ///< N_t x K, unit-norm columns
    CVec fj_beam;    ///< unit-norm, in the span of `null_basis`
};

/// Unit-normalized user beams and the null-space projected jamming beam.
DecodedBeams decode_beams(const RVec& out, const CMat& null_basis, int users, int n_tx);

/// Chain rule through decode_beams. `g_user` and `g_fj` are d/dRe + j d/dIm
/// gradients with respect to the unit-norm beams; the result is the
/// gradient with respect to the encoder output row.
RVec encode_beam_gradient(const RVec& out, const CMat& null_basis, int users, int n_tx, const CMat& g_user,
                          const CVec& g_fj);

// ------------------------------------------------------------------------
// Losses
// ------------------------------------------------------------------------

/// -sum R + lambda * sum_n (CRLB_theta[n] + CRLB_phi[n]).
double total_loss(const RateReport& rates, const std::vector<CrlbPair>& crlbs, double lambda);

/// Closed-form CRLB of beam v at power zeta and d CRLB / dv (d/dRe + j d/dIm).
struct CrlbGradient {
    CrlbPair crlb;
    CVec d_theta;
    CVec d_phi;
};
CrlbGradient crlb_gradient(const SensingModel& sm, const CVec& v, double zeta);

// ------------------------------------------------------------------------
// Stage 1
// ------------------------------------------------------------------------

struct EpochLog {
    int epoch = 0;
    double loss = 0.0;
    double cross_entropy = 0.0;
    double rate_loss = 0.0;
    double crlb_penalty = 0.0;
    double sum_secrecy = 0.0;
    double crlb_theta_db = 0.0;
    double crlb_phi_db = 0.0;
    bool accepted = false;
};

struct Stage1Result {
    BeamEncoder encoder;
    nn::Network decoder;
    std::vector<CMat> user_beams;
    std::vector<CVec> fj_beams;
    std::vector<EpochLog> log;
    double decoder_accuracy = 0.0;
};

/// Trains encoder and decoder on one problem instance. The rate and CRLB
/// terms are computed on the estimated channel; the cross-entropy term
/// trains the decoder on equalized symbols.
Stage1Result stage1_comm_training(const TrainConfig& cfg, const ProblemInstance& inst, Stream& rng);

/// Decoder accuracy on a fresh batch of equalized symbols.
double decoder_accuracy(nn::Network& decoder, const ProblemInstance& inst, const std::vector<CMat>& user_beams,
                        const std::vector<CVec>& fj_beams, int alphabet, int samples, Stream& rng);

// ------------------------------------------------------------------------
// Stage 2
// ------------------------------------------------------------------------

using FimFunction = std::function<FimEstimate(const CVec& v, double zeta, Stream& rng)>;

FimFunction make_fim_function(const TrainConfig& cfg, const SensingModel& sm);

struct FjCandidate {
    CVec v;
    FimEstimate fim;
    bool feasible = false;
    double trace = 0.0;
};

bool crlb_accept(double crlb_theta, double crlb_phi, double crlb0_theta, double crlb0_phi);

/// Index of the threshold-satisfying candidate with the largest trace(J),
/// or -1 when none satisfies both thresholds.
int select_fj_beam(const std::vector<FjCandidate>& candidates);

FjCandidate evaluate_candidate(const CVec& v, double zeta, const FimFunction& fim, double crlb0_theta,
                               double crlb0_phi, Stream& rng);

struct Stage2Result {
    CVec v;
    FimEstimate fim;
    bool feasible = false;
    int accepted = 0;
    int rejected = 0;
    std::vector<int> accept_log; ///< 1 per accepted iteration, 0 per rejection
};

/// Probes candidates in the null space of h_hat, accepting only beams
/// whose CRLBs both meet the thresholds, and returns the accepted beam with
/// the largest FIM trace. The refined candidate follows the trace gradient
/// of the analytic model `sm`.
Stage2Result stage2_fj_optimization(const TrainConfig& cfg, const CMat& h_hat, const CVec& v_init, double zeta,
                                    const SensingModel& sm, const FimFunction& fim, Stream& rng);

// ------------------------------------------------------------------------
// Power search, non-overlap, full pipeline
// ------------------------------------------------------------------------

/// Smallest jamming power meeting both CRLB thresholds with beam v.
double min_jam_power(const SensingModel& sm, const CVec& v, double crlb0_theta, double crlb0_phi,
                     CrlbConvention conv = CrlbConvention::scalar);

struct PowerSearchResult {
    double jam_fraction = 0.0;
    PowerAllocation pa;
    double objective = 0.0;
    bool feasible = false;
};

/// Picks the jamming fraction that maximizes design secrecy against proxy
/// eavesdropper channels on the estimated channel, subject to the CRLB
/// power floor on every sensing carrier. With a robust variance set, the
/// objective is averaged over phase-noise draws.
PowerSearchResult search_jam_power(const TrainConfig& cfg, const ProblemInstance& inst,
                                   const BeamformingSolution& beams, Stream& rng);

struct SubcarrierAllocation {
    std::vector<int> comm_set;  ///< 0-based indices
    std::vector<int> sense_set; ///< 0-based indices
    std::vector<bool> sense_mask(int n_total) const;
};

/// Contiguous communication-only prefix of round(frac * N) carriers.
SubcarrierAllocation nonoverlap_allocate(int n_total, double frac_comm_only);

struct TrainResult {
    BeamformingSolution beams;
    std::vector<FimEstimate> fims; ///< per subcarrier (zero on comm-only carriers)
    std::vector<bool> accepted;
    bool feasible = false;
    double jam_fraction = 0.0;
    std::vector<EpochLog> log;
    double decoder_accuracy = 0.0;
};

/// Stage 2 and power search on top of a stage-1 result.
TrainResult finish_training(const TrainConfig& cfg, const ProblemInstance& inst, const Stage1Result& s1,
                            Stream& rng);

/// Full pipeline: stage 1, stage 2 per sensing carrier, power search.
TrainResult multicarrier_train(const TrainConfig& cfg, const ProblemInstance& inst, Stream& rng);

/// Same beams with jamming removed (zero power, zero beam).
BeamformingSolution jamming_off(const BeamformingSolution& beams, PowerMode mode);

/// Per-antenna Wiener phase walks along the subcarrier axis (N_t x N).
RMat antenna_phase_draw(int n_tx, int n_sub, double variance, Stream& rng);

void write_training_log(const std::string& path, const std::vector<EpochLog>& log);

} // namespace isacfj

#endif
