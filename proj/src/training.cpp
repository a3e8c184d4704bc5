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

#include "isacfj/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "isacfj/waveform.hpp"

namespace isacfj {

void TrainConfig::validate() const
{
    if (epochs_stage1 < 0 || iters_stage2 < 0 || steps_per_epoch < 1)
        throw Error("train config: epoch and iteration counts must be non-negative");
    if (batch < 1)
        throw Error("train config: batch must be positive");
    if (!(step_size > 0.0))
        throw Error("train config: step size must be positive");
    if (!(step_size_final > 0.0 && step_size_final <= 1.0))
        throw Error("train config: final step size fraction must lie in (0, 1]");
    if (!(lambda >= 0.0))
        throw Error("train config: lambda must be non-negative");
    if (!(crlb0_theta > 0.0) || !(crlb0_phi > 0.0))
        throw Error("train config: CRLB thresholds must be positive in linear scale");
    if (msg_alphabet < 2)
        throw Error("train config: message alphabet needs at least two codewords");
    if (candidate_count < 0 || reinit_after < 1)
        throw Error("train config: invalid candidate settings");
    if (tt_rank < 1)
        throw Error("train config: TT rank must be positive");
    if (quant_delta < 0.0)
        throw Error("train config: quantization step must be non-negative");
    if (jam_fractions.empty())
        throw Error("train config: jamming fraction grid is empty");
    for (double f : jam_fractions)
        if (!(f > 0.0 && f < 1.0))
            throw Error("train config: jamming fractions must lie in (0, 1)");
    if (proxy_eve_draws < 1 || robust_draws < 1 || robust_pn_variance < 0.0)
        throw Error("train config: invalid proxy or robustness settings");
}

SensingModel ProblemInstance::sensing() const
{
    return SensingModel::make(geom, mode, angles.theta_hat, angles.phi_hat, ch.sigma_s2);
}

// ------------------------------------------------------------------------
// Features and encoders
// ------------------------------------------------------------------------

int feature_length(int users, int n_tx)
{
    return 2 * users * n_tx + 5;
}

RVec build_features(const CsiEstimate& csi, const PowerAllocation& pa, const AngleState& angles, int n, int n_total)
{
    if (n_total < 1 || n < 0 || n > n_total)
        throw Error("build_features: subcarrier index out of range");
    const int idx = std::max(n, 1) - 1;
    if (idx >= static_cast<int>(csi.h_hat.size()) || idx >= pa.n_sub())
        throw Error("build_features: CSI or power allocation too short");
    const CMat& h = csi.h_hat[static_cast<std::size_t>(idx)];
    const Eigen::Index m = h.size();
    RVec z(2 * m + 5);
    for (Eigen::Index c = 0; c < h.cols(); ++c)
        for (Eigen::Index r = 0; r < h.rows(); ++r) {
            z(c * h.rows() + r) = h(r, c).real();
            z(m + c * h.rows() + r) = h(r, c).imag();
        }
    z(2 * m) = pa.comm_power.col(idx).mean();
    z(2 * m + 1) = pa.jam_power(idx);
    z(2 * m + 2) = angles.theta_hat;
    z(2 * m + 3) = angles.phi_hat;
    z(2 * m + 4) = static_cast<double>(n) / n_total;
    return z;
}

RMat build_feature_matrix(const CsiEstimate& csi, const PowerAllocation& pa, const AngleState& angles)
{
    const int n_total = static_cast<int>(csi.h_hat.size());
    if (n_total < 1)
        throw Error("build_feature_matrix: no subcarriers");
    const int len = static_cast<int>(csi.h_hat.front().size()) * 2 + 5;
    RMat z(n_total, len);
    for (int n = 0; n < n_total; ++n)
        z.row(n) = build_features(csi, pa, angles, n + 1, n_total).transpose();
    return z;
}

std::vector<int> tt_input_modes(int n)
{
    if (n < 2)
        throw Error("tt_input_modes: width must be at least 2");
    for (int width = n;; ++width) {
        for (int d = static_cast<int>(std::sqrt(static_cast<double>(width))); d > 1; --d)
            if (width % d == 0)
                return {d, width / d};
    }
}

nn::Network make_dtte(const std::vector<int>& in_modes, int out_dim, int tt_rank, Stream& rng)
{
    nn::Network net;
    net.add<nn::TTDense>(nn::TTLayerSpec::random(in_modes, {20, 6}, {1, tt_rank, 1}, rng), false);
    net.add<nn::ReLU>();
    net.add<nn::Dense>(120, 123, rng);
    net.add<nn::ReLU>();
    net.add<nn::Dense>(123, out_dim, rng);
    return net;
}

nn::Network make_fc_encoder(int in_dim, int out_dim, Stream& rng)
{
    nn::Network net;
    net.add<nn::Dense>(in_dim, 128, rng);
    net.add<nn::ReLU>();
    net.add<nn::Dense>(128, out_dim, rng);
    net.add<nn::BatchNorm>(out_dim);
    return net;
}

nn::Network make_decoder(int alphabet, Stream& rng)
{
    nn::Network net;
    net.add<nn::Dense>(2, 128, rng);
    net.add<nn::ReLU>();
    net.add<nn::Dense>(128, alphabet, rng);
    return net;
}

BeamEncoder BeamEncoder::make(EncoderKind kind, int n_tx, int users, double p_max, Stream& rng, int tt_rank)
{
    if (n_tx < 1 || users < 1 || !(p_max > 0.0))
        throw Error("encoder: invalid dimensions or power budget");
    BeamEncoder enc;
    enc.kind_ = kind;
    enc.input_dim_ = feature_length(users, n_tx);
    enc.output_dim_ = (users + 1) * 2 * n_tx;
    enc.input_scale_ = RVec::Ones(enc.input_dim_);
    enc.input_scale_(2 * users * n_tx) = 1.0 / p_max;
    enc.input_scale_(2 * users * n_tx + 1) = 1.0 / p_max;
    if (kind == EncoderKind::dtte) {
        const auto modes = tt_input_modes(enc.input_dim_);
        enc.padded_dim_ = modes[0] * modes[1];
        enc.net_ = make_dtte(modes, enc.output_dim_, tt_rank, rng);
    } else {
        enc.padded_dim_ = enc.input_dim_;
        enc.net_ = make_fc_encoder(enc.input_dim_, enc.output_dim_, rng);
    }
    return enc;
}

RMat BeamEncoder::forward(const RMat& features, nn::Mode mode)
{
    if (features.cols() != input_dim_)
        throw Error("encoder: feature width " + std::to_string(features.cols()) + " expected " +
                    std::to_string(input_dim_));
    RMat x = RMat::Zero(features.rows(), padded_dim_);
    x.leftCols(input_dim_) = features * input_scale_.asDiagonal();
    // Batch statistics need at least two rows.
    if (features.rows() < 2)
        mode = nn::Mode::infer;
    return net_.forward(x, mode);
}

void BeamEncoder::backward(const RMat& grad_out)
{
    net_.backward(grad_out);
}

void BeamEncoder::quantize(double delta)
{
    for (std::size_t i = 0; i < net_.size(); ++i)
        if (auto* tt = dynamic_cast<nn::TTDense*>(&net_.layer(i)))
            tt->spec = nn::quantize_cores(tt->spec, nn::QuantizationSpec{delta});
}

namespace {

CVec complex_segment(const RVec& out, Eigen::Index offset, int n_tx)
{
    CVec u(n_tx);
    for (int i = 0; i < n_tx; ++i)
        u(i) = cplx(out(offset + i), out(offset + n_tx + i));
    return u;
}

void put_segment(RVec& g, Eigen::Index offset, const CVec& u)
{
    const Eigen::Index n = u.size();
    for (Eigen::Index i = 0; i < n; ++i) {
        g(offset + i) = u(i).real();
        g(offset + n + i) = u(i).imag();
    }
}

CVec safe_normalize(const CVec& u, const CVec& fallback)
{
    const double nrm = u.norm();
    return nrm > 1e-300 ? CVec(u / nrm) : fallback;
}

CVec unit(int n, int i)
{
    CVec e = CVec::Zero(n);
    e(i) = 1.0;
    return e;
}

// d/du of u/||u|| applied to a gradient g with respect to the normalized vector.
CVec normalize_backward(const CVec& u, const CVec& g)
{
    const double nrm = u.norm();
    if (!(nrm > 1e-300))
        return CVec::Zero(u.size());
    const CVec f = u / nrm;
    return (g - f * f.dot(g).real()) / nrm;
}

} // namespace

DecodedBeams decode_beams(const RVec& out, const CMat& null_basis, int users, int n_tx)
{
    if (out.size() != (users + 1) * 2 * n_tx)
        throw Error("decode_beams: output width mismatch");
    if (null_basis.rows() != n_tx || null_basis.cols() < 1)
        throw Error("decode_beams: null-space basis has the wrong shape");
    DecodedBeams db;
    db.user_beams.resize(n_tx, users);
    for (int k = 0; k < users; ++k)
        db.user_beams.col(k) = safe_normalize(complex_segment(out, 2L * k * n_tx, n_tx), unit(n_tx, 0));
    const CVec u = complex_segment(out, 2L * users * n_tx, n_tx);
    const CVec w = null_basis * (null_basis.adjoint() * u);
    db.fj_beam = safe_normalize(w, null_basis.col(0));
    return db;
}

RVec encode_beam_gradient(const RVec& out, const CMat& null_basis, int users, int n_tx, const CMat& g_user,
                          const CVec& g_fj)
{
    RVec g = RVec::Zero(out.size());
    for (int k = 0; k < users; ++k) {
        const CVec u = complex_segment(out, 2L * k * n_tx, n_tx);
        put_segment(g, 2L * k * n_tx, normalize_backward(u, g_user.col(k)));
    }
    const CVec u = complex_segment(out, 2L * users * n_tx, n_tx);
    const CVec w = null_basis * (null_basis.adjoint() * u);
    const CVec gw = normalize_backward(w, g_fj);
    put_segment(g, 2L * users * n_tx, null_basis * (null_basis.adjoint() * gw));
    return g;
}

// ------------------------------------------------------------------------
// Losses
// ------------------------------------------------------------------------

double total_loss(const RateReport& rates, const std::vector<CrlbPair>& crlbs, double lambda)
{
    double penalty = 0.0;
    for (const auto& c : crlbs)
        penalty += c.theta + c.phi;
    return -rates.user_rates.sum() + lambda * penalty;
}

CrlbGradient crlb_gradient(const SensingModel& sm, const CVec& v, double zeta)
{
    CrlbGradient out;
    const double c = 2.0 * (sm.scaling == FimScaling::jam_power ? zeta : sm.snr_sense) / sm.sigma_s2;
    auto one = [&](const CMat& a, double& crlb_value, CVec& grad) {
        const CVec av = a * v;
        const double j = c * av.squaredNorm();
        crlb_value = crlb_from_information(j);
        grad = j > 0.0 ? CVec(-crlb_value * 2.0 * (a.adjoint() * av) / av.squaredNorm()) : CVec::Zero(v.size());
    };
    one(sm.dG_dtheta, out.crlb.theta, out.d_theta);
    one(sm.dG_dphi, out.crlb.phi, out.d_phi);
    return out;
}

// ------------------------------------------------------------------------
// Stage 1
// ------------------------------------------------------------------------

namespace {

// Per-user rates in nats on one carrier.
RVec carrier_rates(const CMat& h, const CMat& f, const CVec& v, const RVec& gamma, double zeta, double sigma2)
{
    const Eigen::Index users = f.cols();
    RVec r(users);
    const CMat hf = h * f;
    const CVec hv = h * v;
    for (Eigen::Index k = 0; k < users; ++k) {
        double interf = sigma2 + zeta * std::norm(hv(k));
        for (Eigen::Index j = 0; j < users; ++j)
            if (j != k)
                interf += gamma(j) * std::norm(hf(k, j));
        r(k) = std::log1p(gamma(k) * std::norm(hf(k, k)) / interf);
    }
    return r;
}

CMat rotate_columns(const CMat& h, const RVec& phase)
{
    CMat out = h;
    for (Eigen::Index i = 0; i < h.cols(); ++i)
        out.col(i) *= std::polar(1.0, phase(i));
    return out;
}

cplx psk_symbol(int msg, int alphabet)
{
    if (alphabet == 4)
        return qpsk_map(msg);
    return std::polar(1.0, 2.0 * std::numbers::pi * (msg + 0.5) / alphabet);
}

struct DecoderBatch {
    RMat x;
    std::vector<int> labels;
};

DecoderBatch decoder_batch(const ProblemInstance& inst, const std::vector<CMat>& f, const std::vector<CVec>& v,
                           int alphabet, int count, Stream& rng)
{
    const int n_sub = inst.n_sub();
    const int users = inst.users();
    const double sigma = std::sqrt(inst.ch.sigma_c2);
    DecoderBatch b{RMat(count, 2), std::vector<int>(static_cast<std::size_t>(count))};
    for (int i = 0; i < count; ++i) {
        const int n = static_cast<int>(rng.below(static_cast<std::uint64_t>(n_sub)));
        const int k = static_cast<int>(rng.below(static_cast<std::uint64_t>(users)));
        const int msg = static_cast<int>(rng.below(static_cast<std::uint64_t>(alphabet)));
        const CMat& h = inst.csi.h_hat[static_cast<std::size_t>(n)];
        const CMat hf = h.row(k) * f[static_cast<std::size_t>(n)];
        cplx y = std::sqrt(inst.pa.comm_power(k, n)) * hf(0, k) * psk_symbol(msg, alphabet);
        for (int j = 0; j < users; ++j)
            if (j != k) {
                const int other = static_cast<int>(rng.below(static_cast<std::uint64_t>(alphabet)));
                y += std::sqrt(inst.pa.comm_power(j, n)) * hf(0, j) * psk_symbol(other, alphabet);
            }
        const cplx hv = (h.row(k) * v[static_cast<std::size_t>(n)])(0);
        y += std::sqrt(inst.pa.jam_power(n)) * hv * rng.cnormal(1.0);
        if (sigma > 0.0)
            y += rng.cnormal(inst.ch.sigma_c2);
        const cplx gain = std::sqrt(inst.pa.comm_power(k, n)) * hf(0, k);
        const cplx z = std::abs(gain) > 0.0 ? y / gain : y;
        b.x(i, 0) = z.real();
        b.x(i, 1) = z.imag();
        b.labels[static_cast<std::size_t>(i)] = msg;
    }
    return b;
}

double max_crlb(const std::vector<CrlbPair>& crlbs, bool theta)
{
    double worst = 0.0;
    bool any = false;
    for (const auto& c : crlbs) {
        worst = std::max(worst, theta ? c.theta : c.phi);
        any = true;
    }
    return any ? worst : std::numeric_limits<double>::infinity();
}

double db_or_inf(double x)
{
    return x > 0.0 && std::isfinite(x) ? to_db(x) : std::numeric_limits<double>::infinity();
}

BeamformingSolution assemble(const std::vector<CMat>& f, const std::vector<CVec>& v, const PowerAllocation& pa)
{
    BeamformingSolution b;
    b.user_beams = f;
    b.fj_beams = v;
    b.pa = pa;
    return b;
}

} // namespace

double decoder_accuracy(nn::Network& decoder, const ProblemInstance& inst, const std::vector<CMat>& user_beams,
                        const std::vector<CVec>& fj_beams, int alphabet, int samples, Stream& rng)
{
    const DecoderBatch b = decoder_batch(inst, user_beams, fj_beams, alphabet, samples, rng);
    const RMat logits = decoder.forward(b.x, nn::Mode::infer);
    int correct = 0;
    for (int i = 0; i < samples; ++i) {
        Eigen::Index arg;
        logits.row(i).maxCoeff(&arg);
        correct += static_cast<int>(arg) == b.labels[static_cast<std::size_t>(i)];
    }
    return static_cast<double>(correct) / samples;
}

Stage1Result stage1_comm_training(const TrainConfig& cfg, const ProblemInstance& inst, Stream& rng)
{
    cfg.validate();
    inst.ch.validate();
    inst.pa.validate();
    const int n_sub = inst.n_sub();
    const int users = inst.users();
    const int n_tx = inst.ch.n_tx();
    if (static_cast<int>(inst.csi.h_hat.size()) != n_sub || inst.pa.n_sub() != n_sub || inst.pa.users() != users)
        throw Error("stage 1: CSI, power allocation and channel disagree in shape");

    std::vector<CMat> basis;
    for (int n = 0; n < n_sub; ++n)
        basis.push_back(null_space(inst.csi.h_hat[static_cast<std::size_t>(n)]));
    const SensingModel sm = inst.sensing();
    const RMat features = build_feature_matrix(inst.csi, inst.pa, inst.angles);

    Stream init_rng = rng.substream(1);
    Stream batch_rng = rng.substream(2);
    Stream robust_rng = rng.substream(3);
    Stage1Result res;
    res.encoder = BeamEncoder::make(cfg.encoder, n_tx, users, inst.pa.p_max, init_rng, cfg.tt_rank);
    res.decoder = make_decoder(cfg.msg_alphabet, init_rng);
    nn::AdamState adam_enc, adam_dec;
    adam_enc.step_size = cfg.step_size;
    adam_dec.step_size = cfg.step_size;

    RVec weights = RVec::Ones(users);
    PowerAllocation pa = inst.pa;
    std::vector<CMat> f(static_cast<std::size_t>(n_sub));
    std::vector<CVec> v(static_cast<std::size_t>(n_sub));

    auto decode_all = [&](const RMat& out) {
        for (int n = 0; n < n_sub; ++n) {
            const DecodedBeams db = decode_beams(out.row(n).transpose(), basis[static_cast<std::size_t>(n)], users, n_tx);
            f[static_cast<std::size_t>(n)] = db.user_beams;
            v[static_cast<std::size_t>(n)] = db.fj_beam;
        }
    };

    for (int epoch = 1; epoch <= cfg.epochs_stage1; ++epoch) {
        const double progress = cfg.epochs_stage1 > 1 ? (epoch - 1.0) / (cfg.epochs_stage1 - 1.0) : 1.0;
        adam_enc.step_size = cfg.step_size * (cfg.step_size_final + (1.0 - cfg.step_size_final) * 0.5 *
                                                                       (1.0 + std::cos(std::numbers::pi * progress)));
        double ce_sum = 0.0, rate_sum = 0.0, pen_sum = 0.0;
        std::vector<CrlbPair> crlbs;
        for (int step = 0; step < cfg.steps_per_epoch; ++step) {
            const RMat out = res.encoder.forward(features, nn::Mode::train);
            decode_all(out);
            pa = enforce_power(pa, assemble(f, v, pa), inst.power_mode);

            // Phase draws for robust training, shared by every carrier this epoch.
            std::vector<RMat> phases;
            if (cfg.robust_pn_variance > 0.0)
                for (int r = 0; r < cfg.robust_draws; ++r)
                    phases.push_back(antenna_phase_draw(n_tx, n_sub, cfg.robust_pn_variance, robust_rng));

            // Worst-user objective: weight the user with the smallest total rate.
            RMat rates = RMat::Zero(users, n_sub);
            for (int n = 0; n < n_sub; ++n)
                rates.col(n) = carrier_rates(inst.csi.h_hat[static_cast<std::size_t>(n)], f[static_cast<std::size_t>(n)],
                                             v[static_cast<std::size_t>(n)], pa.comm_power.col(n), pa.jam_power(n),
                                             inst.ch.sigma_c2);
            if (cfg.objective == Objective::worst_user) {
                Eigen::Index worst;
                rates.rowwise().sum().minCoeff(&worst);
                weights.setZero();
                weights(worst) = 1.0;
            }

            RMat grad_out(n_sub, out.cols());
            double rate_loss = 0.0, penalty = 0.0;
            crlbs.clear();
            for (int n = 0; n < n_sub; ++n) {
                const auto& h = inst.csi.h_hat[static_cast<std::size_t>(n)];
                const auto& fn = f[static_cast<std::size_t>(n)];
                const auto& vn = v[static_cast<std::size_t>(n)];
                CMat g_user = CMat::Zero(n_tx, users);
                CVec g_fj = CVec::Zero(n_tx);
                if (phases.empty()) {
                    const RateGradient g = sum_rate_gradient(h, fn, vn, pa.comm_power.col(n), pa.jam_power(n),
                                                             inst.ch.sigma_c2, weights);
                    g_user = -g.d_user;
                    rate_loss -= weights.dot(rates.col(n));
                } else {
                    for (const auto& ph : phases) {
                        const CMat h_eff = rotate_columns(h, ph.col(n));
                        const RateGradient g = sum_rate_gradient(h_eff, fn, vn, pa.comm_power.col(n), pa.jam_power(n),
                                                                 inst.ch.sigma_c2, weights);
                        g_user -= g.d_user / static_cast<double>(phases.size());
                        g_fj -= g.d_jam / static_cast<double>(phases.size());
                        rate_loss -= weights.dot(carrier_rates(h_eff, fn, vn, pa.comm_power.col(n), pa.jam_power(n),
                                                               inst.ch.sigma_c2)) /
                                     static_cast<double>(phases.size());
                    }
                }
                if (inst.senses(n) && pa.jam_power(n) > 0.0) {
                    const CrlbGradient cg = crlb_gradient(sm, vn, pa.jam_power(n));
                    crlbs.push_back(cg.crlb);
                    if (std::isfinite(cg.crlb.theta) && std::isfinite(cg.crlb.phi)) {
                        penalty += cfg.lambda * (cg.crlb.theta + cg.crlb.phi);
                        g_fj += cfg.lambda * (cg.d_theta + cg.d_phi);
                    }
                }
                grad_out.row(n) = encode_beam_gradient(out.row(n).transpose(), basis[static_cast<std::size_t>(n)], users,
                                                       n_tx, g_user, g_fj)
                                      .transpose();
            }
            res.encoder.zero_grad();
            res.encoder.backward(grad_out);
            nn::adam_step(adam_enc, res.encoder.params());

            // Decoder on equalized symbols; no gradient reaches the encoder.
            const DecoderBatch db = decoder_batch(inst, f, v, cfg.msg_alphabet, cfg.batch, batch_rng);
            const RMat logits = res.decoder.forward(db.x, nn::Mode::train);
            const nn::LossResult ce = nn::softmax_cross_entropy(logits, db.labels);
            res.decoder.zero_grad();
            res.decoder.backward(ce.grad);
            nn::adam_step(adam_dec, res.decoder.params());
            ce_sum += ce.loss;
            rate_sum += rate_loss;
            pen_sum += penalty;
        }
        const double steps = static_cast<double>(cfg.steps_per_epoch);

        EpochLog entry;
        entry.epoch = epoch;
        entry.cross_entropy = ce_sum / steps;
        entry.rate_loss = rate_sum / steps;
        entry.crlb_penalty = pen_sum / steps;
        entry.loss = entry.cross_entropy + entry.rate_loss + entry.crlb_penalty;
        entry.sum_secrecy = evaluate_rates(inst.ch, {}, assemble(f, v, pa)).sum_secrecy;
        entry.crlb_theta_db = db_or_inf(max_crlb(crlbs, true));
        entry.crlb_phi_db = db_or_inf(max_crlb(crlbs, false));
        entry.accepted = !crlbs.empty();
        for (const auto& c : crlbs)
            entry.accepted = entry.accepted && crlb_accept(c.theta, c.phi, cfg.crlb0_theta, cfg.crlb0_phi);
        if (!std::isfinite(entry.loss)) {
            std::ostringstream msg;
            msg << "stage 1: loss diverged at epoch " << epoch << " (cross-entropy " << entry.cross_entropy
                << ", rate " << entry.rate_loss << ", penalty " << entry.crlb_penalty << ")";
            throw Error(msg.str());
        }
        res.log.push_back(entry);
    }

    if (cfg.quant_delta > 0.0)
        res.encoder.quantize(cfg.quant_delta);
    decode_all(res.encoder.forward(features, nn::Mode::train));
    res.user_beams = f;
    res.fj_beams = v;
    Stream acc_rng = rng.substream(4);
    res.decoder_accuracy = decoder_accuracy(res.decoder, inst, f, v, cfg.msg_alphabet, 1000, acc_rng);
    return res;
}

// ------------------------------------------------------------------------
// Stage 2
// ------------------------------------------------------------------------

FimFunction make_fim_function(const TrainConfig& cfg, const SensingModel& sm)
{
    const CrlbConvention conv = cfg.convention;
    if (cfg.fisher == FimPipeline::closed_form)
        return [sm, conv](const CVec& v, double zeta, Stream&) { return fim_estimate_closed_form(sm, v, zeta, conv); };
    const PerturbationSet ps = PerturbationSet::structured(cfg.perturbation_scale, cfg.perturbation_count);
    const DiscriminatorConfig dc = cfg.discriminator;
    return [sm, conv, ps, dc](const CVec& v, double zeta, Stream& rng) {
        return fim_nonparametric(sm, v, zeta, ps, dc, rng, conv);
    };
}

bool crlb_accept(double crlb_theta, double crlb_phi, double crlb0_theta, double crlb0_phi)
{
    return crlb_theta <= crlb0_theta && crlb_phi <= crlb0_phi;
}

int select_fj_beam(const std::vector<FjCandidate>& candidates)
{
    int best = -1;
    for (std::size_t i = 0; i < candidates.size(); ++i)
        if (candidates[i].feasible && (best < 0 || candidates[i].trace > candidates[static_cast<std::size_t>(best)].trace))
            best = static_cast<int>(i);
    return best;
}

FjCandidate evaluate_candidate(const CVec& v, double zeta, const FimFunction& fim, double crlb0_theta,
                               double crlb0_phi, Stream& rng)
{
    FjCandidate c;
    c.v = v;
    c.fim = fim(v, zeta, rng);
    c.trace = c.fim.J.trace();
    c.feasible = crlb_accept(c.fim.crlb_theta, c.fim.crlb_phi, crlb0_theta, crlb0_phi);
    return c;
}


Stage2Result stage2_fj_optimization(const TrainConfig& cfg, const CMat& h_hat, const CVec& v_init, double zeta,
                                    const SensingModel& sm, const FimFunction& fim, Stream& rng)
{
    cfg.validate();
    const CMat basis = null_space(h_hat);
    const int n_tx = static_cast<int>(h_hat.cols());
    if (v_init.size() != n_tx)
        throw Error("stage 2: initial beam length differs from the transmit array size");
    const CMat proj = basis * basis.adjoint();
    const CMat kernel = sm.dG_dtheta.adjoint() * sm.dG_dtheta + sm.dG_dphi.adjoint() * sm.dG_dphi;

    auto random_beam = [&]() {
        const CVec c = random_cn(static_cast<int>(basis.cols()), 1, rng).col(0);
        return CVec((basis * c).normalized());
    };
    auto fime = [](const FjCandidate& c) { return c.fim.crlb_theta + c.fim.crlb_phi; };

    CVec start = proj * v_init;
    start = start.norm() > 1e-300 ? CVec(start.normalized()) : random_beam();

    Stage2Result res;
    std::vector<FjCandidate> archive;
    FjCandidate current = evaluate_candidate(start, zeta, fim, cfg.crlb0_theta, cfg.crlb0_phi, rng);
    if (current.feasible)
        archive.push_back(current);
    int consecutive = 0;

    for (int it = 0; it < cfg.iters_stage2; ++it) {
        std::vector<FjCandidate> cands;
        // Trace-gradient step projected back onto the null space.
        CVec step = proj * (kernel * current.v);
        step = step.norm() > 1e-300 ? CVec((current.v + step / kernel.norm()).normalized()) : current.v;
        step = (proj * step).normalized();
        cands.push_back(evaluate_candidate(step, zeta, fim, cfg.crlb0_theta, cfg.crlb0_phi, rng));
        for (int c = 0; c < cfg.candidate_count; ++c)
            cands.push_back(evaluate_candidate(random_beam(), zeta, fim, cfg.crlb0_theta, cfg.crlb0_phi, rng));

        int best = -1;
        for (std::size_t i = 0; i < cands.size(); ++i) {
            if (cands[i].feasible)
                archive.push_back(cands[i]);
            if (best < 0 || fime(cands[i]) < fime(cands[static_cast<std::size_t>(best)]))
                best = static_cast<int>(i);
        }
        const FjCandidate& pick = cands[static_cast<std::size_t>(best)];
        if (pick.feasible && fime(pick) <= fime(current)) {
            current = pick;
            consecutive = 0;
            ++res.accepted;
            res.accept_log.push_back(1);
        } else {
            ++res.rejected;
            res.accept_log.push_back(0);
            if (++consecutive >= cfg.reinit_after) {
                current = evaluate_candidate(random_beam(), zeta, fim, cfg.crlb0_theta, cfg.crlb0_phi, rng);
                if (current.feasible)
                    archive.push_back(current);
                consecutive = 0;
            }
        }
    }

    const int sel = select_fj_beam(archive);
    if (sel >= 0) {
        res.v = archive[static_cast<std::size_t>(sel)].v;
        res.fim = archive[static_cast<std::size_t>(sel)].fim;
        res.feasible = true;
    } else {
        res.v = current.v;
        res.fim = current.fim;
        res.feasible = false;
    }
    return res;
}

// ------------------------------------------------------------------------
// Power search, non-overlap, full pipeline
// ------------------------------------------------------------------------

double min_jam_power(const SensingModel& sm, const CVec& v, double crlb0_theta, double crlb0_phi, CrlbConvention conv)
{
    const CrlbPair unit_power = crlb(fim_matrix_closed_form(sm, v, 1.0), conv);
    if (sm.scaling == FimScaling::sensing_snr)
        return crlb_accept(unit_power.theta, unit_power.phi, crlb0_theta, crlb0_phi)
                   ? 0.0
                   : std::numeric_limits<double>::infinity();
    return std::max(unit_power.theta / crlb0_theta, unit_power.phi / crlb0_phi);
}

namespace {

PowerAllocation allocation_for(const ProblemInstance& inst, double fraction)
{
    const int users = inst.users();
    const int n_sub = inst.n_sub();
    PowerAllocation pa = PowerAllocation::uniform(users, n_sub, inst.pa.p_max, fraction, inst.power_mode);
    const double budget = PowerAllocation::subcarrier_budget(inst.pa.p_max, n_sub, inst.power_mode);
    for (int n = 0; n < n_sub; ++n)
        if (!inst.senses(n)) {
            pa.comm_power.col(n).setConstant(budget / users);
            pa.jam_power(n) = 0.0;
        }
    return pa;
}

} // namespace

PowerSearchResult search_jam_power(const TrainConfig& cfg, const ProblemInstance& inst,
                                   const BeamformingSolution& beams, Stream& rng)
{
    const SensingModel sm = inst.sensing();
    const int n_sub = inst.n_sub();
    std::vector<double> floor(static_cast<std::size_t>(n_sub), 0.0);
    for (int n = 0; n < n_sub; ++n)
        if (inst.senses(n))
            floor[static_cast<std::size_t>(n)] =
                min_jam_power(sm, beams.fj_beams[static_cast<std::size_t>(n)], cfg.crlb0_theta, cfg.crlb0_phi,
                              cfg.convention);

    // The base station sees only the estimated channel; eavesdroppers are proxies.
    // CSI error adds rho times the carrier's transmit power as interference.
    ChannelRealization design = inst.ch;
    design.h_users = inst.csi.h_hat;
    design.sigma_c2 += inst.csi.rho_csi * PowerAllocation::subcarrier_budget(inst.pa.p_max, n_sub, inst.power_mode);
    std::vector<std::vector<CMat>> proxies = inst.eve_candidates;
    if (proxies.empty())
        for (int i = 0; i < cfg.proxy_eve_draws; ++i)
            proxies.push_back(gen_eve_channels(inst.geom, n_sub, rng));
    std::vector<RMat> phases;
    if (cfg.robust_pn_variance > 0.0)
        for (int r = 0; r < cfg.robust_draws; ++r)
            phases.push_back(antenna_phase_draw(inst.ch.n_tx(), n_sub, cfg.robust_pn_variance, rng));

    PowerSearchResult best;
    bool have = false;
    double largest = -1.0;
    PowerSearchResult fallback;
    for (double fraction : cfg.jam_fractions) {
        BeamformingSolution b = beams;
        b.pa = allocation_for(inst, fraction);
        bool ok = true;
        for (int n = 0; n < n_sub; ++n)
            if (inst.senses(n) && b.pa.jam_power(n) < floor[static_cast<std::size_t>(n)])
                ok = false;
        double value = 0.0;
        auto score = [&](const EvalOptions& opt) {
            const RateReport r = evaluate_rates(design, proxies, b, opt);
            return cfg.objective == Objective::worst_user ? r.worst_user_secrecy() : r.sum_secrecy;
        };
        if (phases.empty()) {
            value = score(EvalOptions{});
        } else {
            for (const auto& ph : phases) {
                EvalOptions opt;
                opt.antenna_phase = ph;
                value += score(opt) / static_cast<double>(phases.size());
            }
        }
        if (fraction > largest) {
            largest = fraction;
            fallback = {fraction, b.pa, value, false};
        }
        if (ok && (!have || value > best.objective)) {
            best = {fraction, b.pa, value, true};
            have = true;
        }
    }
    return have ? best : fallback;
}

std::vector<bool> SubcarrierAllocation::sense_mask(int n_total) const
{
    std::vector<bool> mask(static_cast<std::size_t>(n_total), false);
    for (int n : sense_set)
        mask.at(static_cast<std::size_t>(n)) = true;
    return mask;
}

SubcarrierAllocation nonoverlap_allocate(int n_total, double frac_comm_only)
{
    if (n_total < 1)
        throw Error("nonoverlap_allocate: subcarrier count must be positive");
    if (!(frac_comm_only >= 0.0 && frac_comm_only <= 1.0))
        throw Error("nonoverlap_allocate: fraction must lie in [0, 1]");
    const int n_comm = static_cast<int>(std::lround(frac_comm_only * n_total));
    SubcarrierAllocation a;
    for (int n = 0; n < n_total; ++n)
        (n < n_comm ? a.comm_set : a.sense_set).push_back(n);
    return a;
}

TrainResult finish_training(const TrainConfig& cfg, const ProblemInstance& inst, const Stage1Result& s1,
                            Stream& rng)
{
    const int n_sub = inst.n_sub();
    const SensingModel sm = inst.sensing();
    const FimFunction fim = make_fim_function(cfg, sm);
    TrainResult res;
    res.log = s1.log;
    res.decoder_accuracy = s1.decoder_accuracy;
    res.beams.user_beams = s1.user_beams;
    res.beams.fj_beams = s1.fj_beams;
    res.beams.pa = inst.pa;

    Stream s2_rng = rng.substream(10);
    for (int n = 0; n < n_sub; ++n) {
        if (!inst.senses(n) || inst.pa.jam_power(n) <= 0.0)
            continue;
        Stream carrier_rng = s2_rng.substream(static_cast<std::uint64_t>(n));
        const Stage2Result s2 = stage2_fj_optimization(cfg, inst.csi.h_hat[static_cast<std::size_t>(n)],
                                                       s1.fj_beams[static_cast<std::size_t>(n)],
                                                       inst.pa.jam_power(n), sm, fim, carrier_rng);
        res.beams.fj_beams[static_cast<std::size_t>(n)] = s2.v;
    }

    Stream power_rng = rng.substream(11);
    const PowerSearchResult ps = search_jam_power(cfg, inst, res.beams, power_rng);
    res.beams.pa = enforce_power(ps.pa, res.beams, inst.power_mode);
    res.jam_fraction = ps.jam_fraction;

    Stream final_rng = rng.substream(12);
    res.feasible = ps.feasible;
    res.fims.resize(static_cast<std::size_t>(n_sub));
    res.accepted.assign(static_cast<std::size_t>(n_sub), false);
    for (int n = 0; n < n_sub; ++n) {
        FimEstimate& fe = res.fims[static_cast<std::size_t>(n)];
        const double zeta = res.beams.pa.jam_power(n);
        if (!inst.senses(n) || zeta <= 0.0) {
            fe = fim_estimate_closed_form(sm, res.beams.fj_beams[static_cast<std::size_t>(n)], 0.0, cfg.convention);
            continue;
        }
        fe = fim(res.beams.fj_beams[static_cast<std::size_t>(n)], zeta, final_rng);
        res.accepted[static_cast<std::size_t>(n)] = crlb_accept(fe.crlb_theta, fe.crlb_phi, cfg.crlb0_theta,
                                                                cfg.crlb0_phi);
        res.feasible = res.feasible && res.accepted[static_cast<std::size_t>(n)];
    }
    return res;
}

TrainResult multicarrier_train(const TrainConfig& cfg, const ProblemInstance& inst, Stream& rng)
{
    Stream s1_rng = rng.substream(20);
    const Stage1Result s1 = stage1_comm_training(cfg, inst, s1_rng);
    Stream rest = rng.substream(21);
    return finish_training(cfg, inst, s1, rest);
}

BeamformingSolution jamming_off(const BeamformingSolution& beams, PowerMode mode)
{
    BeamformingSolution out = beams;
    const int users = beams.users();
    for (int n = 0; n < beams.n_sub(); ++n) {
        out.pa.comm_power.col(n).array() += beams.pa.jam_power(n) / users;
        out.pa.jam_power(n) = 0.0;
        out.fj_beams[static_cast<std::size_t>(n)].setZero();
    }
    out.pa = enforce_power(out.pa, out, mode);
    return out;
}

RMat antenna_phase_draw(int n_tx, int n_sub, double variance, Stream& rng)
{
    RMat ph(n_tx, n_sub);
    for (int i = 0; i < n_tx; ++i)
        ph.row(i) = wiener_phase(n_sub, variance, rng).transpose();
    return ph;
}

void write_training_log(const std::string& path, const std::vector<EpochLog>& log)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error("training log: cannot open '" + path + "'");
    out << "epoch,loss,sum_secrecy,crlb_theta_db,crlb_phi_db,accepted\n";
    char buf[256];
    for (const auto& e : log) {
        std::snprintf(buf, sizeof buf, "%d,%.12g,%.12g,%.12g,%.12g,%d\n", e.epoch, e.loss, e.sum_secrecy,
                      e.crlb_theta_db, e.crlb_phi_db, e.accepted ? 1 : 0);
        out << buf;
    }
    if (!out)
        throw Error("training log: write failed");
}

} // namespace isacfj
