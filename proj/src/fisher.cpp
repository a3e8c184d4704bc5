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

#include "isacfj/fisher.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "isacfj/neural.hpp"

namespace isacfj {

const char* to_string(FimSource s)
{
    switch (s) {
    case FimSource::closed_form: return "closed_form";
    case FimSource::covariance_form: return "covariance_form";
    case FimSource::nonparametric: return "nonparametric";
    }
    return "unknown";
}

SensingModel SensingModel::make(const ArrayGeometry& geom, SteeringMode mode, double theta, double phi,
                                double sigma_s2)
{
    SensingModel sm;
    sm.geom = geom;
    sm.mode = mode;
    sm.theta = theta;
    sm.phi = phi;
    sm.G = steering_matrix(geom, mode, theta, phi);
    sm.dG_dtheta = steering_derivative(geom, mode, theta, phi, Angle::theta);
    sm.dG_dphi = steering_derivative(geom, mode, theta, phi, Angle::phi);
    sm.sigma_s2 = sigma_s2;
    sm.validate();
    return sm;
}

void SensingModel::validate() const
{
    if (dG_dtheta.rows() != G.rows() || dG_dtheta.cols() != G.cols() || dG_dphi.rows() != G.rows() ||
        dG_dphi.cols() != G.cols())
        throw Error("sensing model: derivative shapes differ from the steering matrix");
    if (!(sigma_s2 > 0.0))
        throw Error("sensing model: noise power must be positive");
    if (noise_cov) {
        const CMat& s = *noise_cov;
        if (s.rows() != G.rows() || s.cols() != G.rows())
            throw Error("sensing model: noise covariance must be square with the echo dimension");
        if ((s - s.adjoint()).norm() > 1e-10 * std::max(1.0, s.norm()))
            throw Error("sensing model: noise covariance is not Hermitian");
        Eigen::LLT<CMat> llt(s);
        if (llt.info() != Eigen::Success)
            throw Error("sensing model: noise covariance is not positive definite");
    }
}

namespace {

double power_factor(const SensingModel& sm, double zeta)
{
    return sm.scaling == FimScaling::jam_power ? zeta : sm.snr_sense;
}

void check_beam(const CVec& v, double zeta, const SensingModel& sm)
{
    if (zeta < 0.0)
        throw Error("fim: jamming power must be non-negative");
    if (!(v.norm() > 0.0))
        throw Error("fim: beam must be non-zero");
    if (v.size() != sm.G.cols())
        throw Error("fim: beam length differs from the transmit array size");
}

} // namespace

double fim_closed_form(const SensingModel& sm, const CVec& v, double zeta, Angle which)
{
    check_beam(v, zeta, sm);
    return 2.0 * power_factor(sm, zeta) / sm.sigma_s2 * (sm.derivative(which) * v).squaredNorm();
}

RMat fim_matrix_closed_form(const SensingModel& sm, const CVec& v, double zeta)
{
    check_beam(v, zeta, sm);
    const CVec a = sm.dG_dtheta * v;
    const CVec b = sm.dG_dphi * v;
    const double c = 2.0 * power_factor(sm, zeta) / sm.sigma_s2;
    RMat j(2, 2);
    j(0, 0) = c * a.squaredNorm();
    j(1, 1) = c * b.squaredNorm();
    j(0, 1) = j(1, 0) = c * a.dot(b).real();
    return j;
}

namespace {

void check_probing(const SensingModel& sm, std::span<const CMat> probing)
{
    sm.validate();
    for (const auto& s : probing)
        if (s.rows() != sm.G.cols())
            throw Error("fim: probing matrix rows must equal the transmit array size");
}

} // namespace

double fim_covariance_form(const SensingModel& sm, std::span<const CMat> probing, Angle which)
{
    check_probing(sm, probing);
    const CMat& a = sm.derivative(which);
    CMat kernel;
    double scale;
    if (sm.noise_cov) {
        kernel = a.adjoint() * sm.noise_cov->llt().solve(a);
        scale = 2.0;
    } else {
        kernel = a.adjoint() * a;
        scale = 2.0 / sm.sigma_s2;
    }
    double total = 0.0;
    for (const auto& s : probing) {
        const CMat r = s * s.adjoint();
        total += (r * kernel).trace().real();
    }
    return scale * total;
}

double fim_frobenius_form(const SensingModel& sm, std::span<const CMat> probing, Angle which)
{
    check_probing(sm, probing);
    const CMat& a = sm.derivative(which);
    double total = 0.0;
    if (sm.noise_cov) {
        Eigen::LLT<CMat> llt(*sm.noise_cov);
        const CMat l = llt.matrixL();
        for (const auto& s : probing)
            total += l.triangularView<Eigen::Lower>().solve(a * s).squaredNorm();
        return 2.0 * total;
    }
    for (const auto& s : probing)
        total += (a * s).squaredNorm();
    return 2.0 / sm.sigma_s2 * total;
}

double crlb_from_information(double j)
{
    return j > 0.0 ? 1.0 / j : std::numeric_limits<double>::infinity();
}

CrlbPair crlb(const RMat& j, CrlbConvention conv)
{
    if (j.rows() != 2 || j.cols() != 2)
        throw Error("crlb: expected a 2x2 Fisher matrix");
    if (conv == CrlbConvention::scalar)
        return {crlb_from_information(j(0, 0)), crlb_from_information(j(1, 1))};
    const double det = j(0, 0) * j(1, 1) - j(0, 1) * j(1, 0);
    if (!(det > 0.0)) {
        constexpr double inf = std::numeric_limits<double>::infinity();
        return {inf, inf};
    }
    return {j(1, 1) / det, j(0, 0) / det};
}

// ------------------------------------------------------------------------
// Perturbations and least squares
// ------------------------------------------------------------------------

namespace {

int dim_from_fvec(Eigen::Index len)
{
    const int d = static_cast<int>(std::lround((std::sqrt(8.0 * static_cast<double>(len) + 1.0) - 1.0) / 2.0));
    if (d * (d + 1) / 2 != len || d < 1)
        throw Error("fim: vector length is not a triangular number");
    return d;
}

int column_rank(const RMat& u)
{
    Eigen::JacobiSVD<RMat> svd(u);
    const RVec& s = svd.singularValues();
    if (s.size() == 0 || s(0) == 0.0)
        return 0;
    int r = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(i) > 1e-10 * s(0))
            ++r;
    return r;
}

double condition_number(const RMat& u)
{
    Eigen::JacobiSVD<RMat> svd(u);
    const RVec& s = svd.singularValues();
    return s(s.size() - 1) > 0.0 ? s(0) / s(s.size() - 1) : std::numeric_limits<double>::infinity();
}

} // namespace

void PerturbationSet::validate() const
{
    if (d < 1)
        throw Error("perturbations: dimension must be positive");
    const int need = d * (d + 1) / 2;
    if (count() < need)
        throw Error("perturbations: need at least " + std::to_string(need) + " perturbations, got " +
                    std::to_string(count()));
    for (const auto& delta : deltas)
        if (delta.size() != d)
            throw Error("perturbations: vector length differs from the parameter dimension");
}

PerturbationSet PerturbationSet::structured(double scale, int count)
{
    if (!(scale > 0.0))
        throw Error("perturbations: scale must be positive");
    PerturbationSet ps;
    ps.scale = scale;
    for (int i = 0; i < count; ++i) {
        const double a = std::numbers::pi * i / count;
        RVec delta(2);
        delta << std::cos(a), std::sin(a);
        ps.deltas.push_back(scale * delta);
    }
    ps.validate();
    return ps;
}

PerturbationSet PerturbationSet::gaussian(double scale, int count, Stream& rng)
{
    if (!(scale > 0.0))
        throw Error("perturbations: scale must be positive");
    for (int attempt = 0; attempt < 1000; ++attempt) {
        PerturbationSet ps;
        ps.scale = scale;
        for (int i = 0; i < count; ++i) {
            RVec delta(2);
            delta << scale * rng.normal(), scale * rng.normal();
            ps.deltas.push_back(delta);
        }
        ps.validate();
        if (condition_number(build_u_matrix(ps)) < 50.0)
            return ps;
    }
    throw Error("perturbations: could not draw a well-conditioned set");
}

RVec u_row(const RVec& delta)
{
    const Eigen::Index d = delta.size();
    RVec row(d * (d + 1) / 2);
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < d; ++i)
        row(k++) = delta(i) * delta(i);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = i + 1; j < d; ++j)
            row(k++) = 2.0 * delta(i) * delta(j);
    return row;
}

RMat build_u_matrix(const PerturbationSet& ps)
{
    ps.validate();
    RMat u(ps.count(), ps.d * (ps.d + 1) / 2);
    for (int i = 0; i < ps.count(); ++i)
        u.row(i) = u_row(ps.deltas[static_cast<std::size_t>(i)]).transpose();
    if (column_rank(u) < u.cols())
        throw Error("perturbations: design matrix U is rank deficient; redraw the perturbations");
    return u;
}

RMat fvec_to_mat(const RVec& f, int d)
{
    if (f.size() != d * (d + 1) / 2)
        throw Error("fim: vector length does not match the dimension");
    RMat j(d, d);
    Eigen::Index k = 0;
    for (int i = 0; i < d; ++i)
        j(i, i) = f(k++);
    for (int i = 0; i < d; ++i)
        for (int c = i + 1; c < d; ++c)
            j(i, c) = j(c, i) = f(k++);
    return j;
}

RVec mat_to_fvec(const RMat& j)
{
    const Eigen::Index d = j.rows();
    RVec f(d * (d + 1) / 2);
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < d; ++i)
        f(k++) = j(i, i);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index c = i + 1; c < d; ++c)
            f(k++) = j(i, c);
    return f;
}

RVec ls_fim(const RMat& u, const RVec& d_vec)
{
    if (u.rows() != d_vec.size())
        throw Error("ls_fim: U rows differ from the number of divergences");
    const RMat utu = u.transpose() * u;
    Eigen::LDLT<RMat> ldlt(utu);
    if (ldlt.info() != Eigen::Success || column_rank(u) < u.cols())
        throw Error("ls_fim: U^T U is singular");
    return 2.0 * ldlt.solve(u.transpose() * d_vec);
}

// ------------------------------------------------------------------------
// PSD refinement
// ------------------------------------------------------------------------

namespace {

struct AnchorMap {
    int d;
    std::vector<std::pair<int, int>> pos; // matrix position of each f entry
};

AnchorMap anchor_map(int d)
{
    AnchorMap m{d, {}};
    for (int i = 0; i < d; ++i)
        m.pos.emplace_back(i, i);
    for (int i = 0; i < d; ++i)
        for (int c = i + 1; c < d; ++c)
            m.pos.emplace_back(i, c);
    return m;
}

RMat project_anchors(RMat x, const AnchorMap& map, const std::vector<int>& anchors, const RVec& values)
{
    for (int k : anchors) {
        const auto [i, c] = map.pos[static_cast<std::size_t>(k)];
        x(i, c) = x(c, i) = values(k);
    }
    return x;
}

// Frobenius-nearest point of {anchored entries fixed} intersected with the PSD cone.
RMat project_feasible(const RMat& y, const AnchorMap& map, const std::vector<int>& anchors, const RVec& values)
{
    RMat x = y;
    RMat p = RMat::Zero(y.rows(), y.cols());
    RMat q = RMat::Zero(y.rows(), y.cols());
    for (int it = 0; it < 2000; ++it) {
        const RMat a = project_anchors(x + p, map, anchors, values);
        p = x + p - a;
        RMat s = a + q;
        s = 0.5 * (s + s.transpose());
        const RMat xn = psd_project(s);
        q = s - xn;
        const double change = (xn - x).norm();
        x = xn;
        if (change <= 1e-15 * std::max(1.0, x.norm()))
            break;
    }
    return x;
}

} // namespace

FimEstimate psd_refine(const RVec& f_ls, const RMat& u, const RVec& d_vec, std::vector<int> anchors,
                       const RefineOptions& opt)
{
    const int d = dim_from_fvec(f_ls.size());
    if (u.cols() != f_ls.size() || u.rows() != d_vec.size())
        throw Error("psd_refine: shape mismatch between U, f and d");
    if (anchors.empty())
        for (int i = 0; i < d; ++i)
            anchors.push_back(i);
    for (int k : anchors)
        if (k < 0 || k >= f_ls.size())
            throw Error("psd_refine: anchor index out of range");

    FimEstimate fe;
    fe.U = u;
    fe.d_vec = d_vec;
    fe.convention = opt.convention;
    const RMat j_ls = fvec_to_mat(f_ls, d);
    const AnchorMap map = anchor_map(d);

    auto finish = [&](const RMat& j) {
        fe.J = j;
        fe.f_vec = mat_to_fvec(j);
        if (d == 2) {
            const CrlbPair c = crlb(j, opt.convention);
            fe.crlb_theta = c.theta;
            fe.crlb_phi = c.phi;
        }
        return fe;
    };

    if (min_eigenvalue(j_ls) >= 0.0)
        return finish(j_ls);

    // Anchored diagonal entries below zero admit no PSD completion.
    for (int k : anchors) {
        const auto [i, c] = map.pos[static_cast<std::size_t>(k)];
        if (i == c && f_ls(k) < 0.0) {
            fe.converged = false;
            return finish(psd_project(j_ls));
        }
    }

    // Metric weights: off-diagonal f entries appear twice in the Frobenius norm.
    RVec w = RVec::Ones(f_ls.size());
    for (Eigen::Index k = d; k < f_ls.size(); ++k)
        w(k) = 2.0;
    const RVec w_isqrt = w.cwiseSqrt().cwiseInverse();
    const RMat hess = 2.0 * u.transpose() * u;
    const RMat scaled = w_isqrt.asDiagonal() * hess * w_isqrt.asDiagonal();
    Eigen::SelfAdjointEigenSolver<RMat> es(scaled);
    const double lip = es.eigenvalues().maxCoeff();
    const double eta = lip > 0.0 ? 1.0 / lip : 1.0;

    RMat x = project_feasible(j_ls, map, anchors, f_ls);
    fe.converged = false;
    for (int it = 1; it <= opt.max_iter; ++it) {
        const RVec f = mat_to_fvec(x);
        const RVec grad = -2.0 * u.transpose() * (2.0 * d_vec - u * f);
        const RVec step = f - eta * grad.cwiseQuotient(w);
        const RMat xn = project_feasible(fvec_to_mat(step, d), map, anchors, f_ls);
        const double change = (xn - x).norm();
        x = xn;
        fe.iterations = it;
        if (change <= opt.tol * std::max(1.0, x.norm())) {
            fe.converged = true;
            break;
        }
    }
    return finish(x);
}

// ------------------------------------------------------------------------
// Divergence estimation
// ------------------------------------------------------------------------

EchoSampler gaussian_echo_sampler(const SensingModel& sm, const CVec& v, double zeta)
{
    if (zeta < 0.0)
        throw Error("echo sampler: jamming power must be non-negative");
    if (v.size() != sm.G.cols())
        throw Error("echo sampler: beam length differs from the transmit array size");
    std::optional<CMat> chol;
    if (sm.noise_cov)
        chol = CMat(sm.noise_cov->llt().matrixL());
    const ArrayGeometry geom = sm.geom;
    const SteeringMode mode = sm.mode;
    const double sigma2 = sm.sigma_s2;
    return [geom, mode, sigma2, v, zeta, chol](double theta, double phi, int count, Stream& rng) {
        const CVec mean = std::sqrt(zeta) * steering_matrix(geom, mode, theta, phi) * v;
        const Eigen::Index m = mean.size();
        RMat out(count, 2 * m);
        for (int s = 0; s < count; ++s) {
            CVec noise(m);
            for (Eigen::Index i = 0; i < m; ++i)
                noise(i) = rng.cnormal(chol ? 1.0 : sigma2);
            if (chol)
                noise = *chol * noise;
            const CVec y = mean + noise;
            out.row(s).head(m) = y.real().transpose();
            out.row(s).tail(m) = y.imag().transpose();
        }
        return out;
    };
}

namespace {

double log_mean_exp(const RVec& t)
{
    const double mx = t.maxCoeff();
    return mx + std::log((t.array() - mx).exp().mean());
}

} // namespace

double dv_divergence(const RMat& p_samples, const RMat& q_samples, const DiscriminatorConfig& cfg, Stream& rng)
{
    if (p_samples.cols() != q_samples.cols() || p_samples.rows() < 1 || q_samples.rows() < 1)
        throw Error("dv_divergence: sample sets must be non-empty with equal widths");
    if (cfg.hidden < 1 || cfg.batch < 1 || cfg.steps < 0)
        throw Error("dv_divergence: invalid discriminator configuration");

    // A fixed affine map of the features leaves the divergence unchanged.
    const Eigen::Index dim = p_samples.cols();
    RMat pooled(p_samples.rows() + q_samples.rows(), dim);
    pooled << p_samples, q_samples;
    const RVec mean = pooled.colwise().mean().transpose();
    RVec inv_std = ((pooled.rowwise() - mean.transpose()).array().square().colwise().mean()).sqrt().transpose();
    for (Eigen::Index i = 0; i < dim; ++i)
        inv_std(i) = inv_std(i) > 0.0 ? 1.0 / inv_std(i) : 1.0;
    auto normalize = [&](const RMat& x) -> RMat {
        return (x.rowwise() - mean.transpose()).array().rowwise() * inv_std.transpose().array();
    };
    const RMat p = normalize(p_samples);
    const RMat q = normalize(q_samples);

    nn::Network net;
    net.add<nn::Dense>(static_cast<int>(dim), cfg.hidden, rng);
    net.add<nn::ReLU>();
    net.add<nn::Dense>(cfg.hidden, 1, rng);
    nn::AdamState adam;
    adam.step_size = cfg.step_size;

    const int b = cfg.batch;
    RMat x(2 * b, dim);
    for (int step = 0; step < cfg.steps; ++step) {
        for (int i = 0; i < b; ++i) {
            x.row(i) = p.row(static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(p.rows()))));
            x.row(b + i) = q.row(static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(q.rows()))));
        }
        const RMat t = net.forward(x, nn::Mode::train);
        const RVec tq = t.col(0).tail(b);
        const double bound = t.col(0).head(b).mean() - log_mean_exp(tq);
        if (!std::isfinite(bound)) {
            std::ostringstream msg;
            msg << "dv_divergence: critic diverged at step " << step << " (bound " << bound << ")";
            throw Error(msg.str());
        }
        RMat grad(2 * b, 1);
        grad.col(0).head(b).setConstant(-1.0 / b);
        const RVec e = (tq.array() - tq.maxCoeff()).exp();
        grad.col(0).tail(b) = e / e.sum();
        net.zero_grad();
        net.backward(grad);
        nn::adam_step(adam, net.params());
    }

    const RVec tp = net.forward(p, nn::Mode::infer).col(0);
    const RVec tq = net.forward(q, nn::Mode::infer).col(0);
    const double estimate = tp.mean() - log_mean_exp(tq);
    if (!std::isfinite(estimate))
        throw Error("dv_divergence: non-finite final estimate");
    return std::max(0.0, estimate);
}

RVec estimate_divergences(const EchoSampler& sampler, double theta, double phi, const PerturbationSet& ps,
                          const DiscriminatorConfig& cfg, Stream& rng)
{
    ps.validate();
    if (ps.d != 2)
        throw Error("estimate_divergences: angular perturbations must be two-dimensional");
    if (cfg.samples < 1)
        throw Error("estimate_divergences: sample count must be positive");
    RVec d(ps.count());
    for (int i = 0; i < ps.count(); ++i) {
        Stream sp = rng.substream(static_cast<std::uint64_t>(i), 0);
        Stream sq = rng.substream(static_cast<std::uint64_t>(i), 1);
        Stream sc = rng.substream(static_cast<std::uint64_t>(i), 2);
        const RVec& delta = ps.deltas[static_cast<std::size_t>(i)];
        const RMat p = sampler(theta, phi, cfg.samples, sp);
        const RMat q = sampler(theta + delta(0), phi + delta(1), cfg.samples, sq);
        d(i) = dv_divergence(p, q, cfg, sc);
    }
    return d;
}

FimEstimate fim_nonparametric(const SensingModel& sm, const CVec& v, double zeta, const PerturbationSet& ps,
                              const DiscriminatorConfig& cfg, Stream& rng, CrlbConvention conv)
{
    const EchoSampler sampler = gaussian_echo_sampler(sm, v, zeta);
    const RVec d = estimate_divergences(sampler, sm.theta, sm.phi, ps, cfg, rng);
    const RMat u = build_u_matrix(ps);
    const RVec f = ls_fim(u, d);
    RefineOptions opt;
    opt.convention = conv;
    FimEstimate fe = psd_refine(f, u, d, {}, opt);
    fe.source = FimSource::nonparametric;
    return fe;
}

FimEstimate fim_estimate_closed_form(const SensingModel& sm, const CVec& v, double zeta, CrlbConvention conv)
{
    FimEstimate fe;
    fe.J = fim_matrix_closed_form(sm, v, zeta);
    fe.f_vec = mat_to_fvec(fe.J);
    fe.source = FimSource::closed_form;
    fe.convention = conv;
    const CrlbPair c = crlb(fe.J, conv);
    fe.crlb_theta = c.theta;
    fe.crlb_phi = c.phi;
    return fe;
}

CVec balanced_probe_beam(const SensingModel& sm)
{
    const CMat mt = sm.dG_dtheta.adjoint() * sm.dG_dtheta;
    const CMat mp = sm.dG_dphi.adjoint() * sm.dG_dphi;
    auto top = [](const CMat& m) {
        Eigen::SelfAdjointEigenSolver<CMat> es(m);
        return CVec(es.eigenvectors().col(m.rows() - 1));
    };
    auto gap = [&](const CVec& v) { return (v.adjoint() * (mp - mt) * v)(0).real(); };
    const CVec a = top(mp - mt);
    CVec b = top(mt);
    if (gap(b) >= 0.0)
        b = top(mt - mp);
    if (!(gap(a) > 0.0) || !(gap(b) < 0.0))
        throw Error("balanced_probe_beam: one angle dominates for every beam");
    // Bisection along the arc from a (phi dominates) to b (theta dominates).
    double lo = 0.0, hi = std::numbers::pi / 2.0;
    CVec v = a;
    for (int i = 0; i < 100; ++i) {
        const double t = 0.5 * (lo + hi);
        v = (std::cos(t) * a + std::sin(t) * b).normalized();
        (gap(v) > 0.0 ? lo : hi) = t;
    }
    return v;
}

FimValidationReport fim_validate(const SensingModel& sm, const CVec& v, double zeta, const PerturbationSet& ps,
                                 const DiscriminatorConfig& cfg, int seeds, std::uint64_t master, double tolerance)
{
    if (seeds < 1)
        throw Error("fim_validate: need at least one seed");
    FimValidationReport rep;
    rep.tolerance = tolerance;
    rep.closed_form = fim_matrix_closed_form(sm, v, zeta);
    for (int s = 0; s < seeds; ++s) {
        Stream rng(derive_seed(master, static_cast<std::uint64_t>(s)));
        const FimEstimate fe = fim_nonparametric(sm, v, zeta, ps, cfg, rng);
        rep.estimates.push_back(fe.J);
        rep.rel_err_theta += std::abs(fe.J(0, 0) - rep.closed_form(0, 0)) / rep.closed_form(0, 0) / seeds;
        rep.rel_err_phi += std::abs(fe.J(1, 1) - rep.closed_form(1, 1)) / rep.closed_form(1, 1) / seeds;
    }
    rep.pass = rep.rel_err_theta <= tolerance && rep.rel_err_phi <= tolerance;
    return rep;
}

} // namespace isacfj
