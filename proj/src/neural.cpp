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

#include "isacfj/neural.hpp"

#include <cmath>
#include <numeric>

namespace isacfj::nn {

namespace {

int product(const std::vector<int>& v)
{
    return std::accumulate(v.begin(), v.end(), 1, std::multiplies<>());
}

void require_cache(bool cached, const char* who)
{
    if (!cached)
        throw Error(std::string(who) + ": backward called without a forward cache");
}

} // namespace

// ------------------------------------------------------------------------
// TT primitives
// ------------------------------------------------------------------------

int TTLayerSpec::in_dim() const { return product(in_modes); }
int TTLayerSpec::out_dim() const { return product(out_modes); }

void TTLayerSpec::validate() const
{
    const std::size_t q = in_modes.size();
    if (q == 0 || out_modes.size() != q)
        throw Error("tt: input and output mode lists must be non-empty and of equal length");
    if (ranks.size() != q + 1 || ranks.front() != 1 || ranks.back() != 1)
        throw Error("tt: ranks must have q+1 entries with boundary ranks equal to 1");
    for (std::size_t k = 0; k < q; ++k)
        if (in_modes[k] < 1 || out_modes[k] < 1 || ranks[k] < 1 || ranks[k + 1] < 1)
            throw Error("tt: modes and ranks must be positive");
    if (cores.size() != q)
        throw Error("tt: core count differs from the number of modes");
    for (std::size_t k = 0; k < q; ++k)
        if (cores[k].size() != core_size(static_cast<int>(k)))
            throw Error("tt: core " + std::to_string(k) + " has the wrong size");
}

TTLayerSpec TTLayerSpec::zeros(std::vector<int> in_modes, std::vector<int> out_modes, std::vector<int> ranks)
{
    TTLayerSpec tt{std::move(in_modes), std::move(out_modes), std::move(ranks), {}};
    if (tt.ranks.size() != tt.in_modes.size() + 1)
        throw Error("tt: ranks must have q+1 entries");
    for (int k = 0; k < tt.order(); ++k)
        tt.cores.push_back(RVec::Zero(tt.core_size(k)));
    tt.validate();
    return tt;
}

TTLayerSpec TTLayerSpec::random(std::vector<int> in_modes, std::vector<int> out_modes, std::vector<int> ranks,
                                Stream& rng)
{
    TTLayerSpec tt = zeros(std::move(in_modes), std::move(out_modes), std::move(ranks));
    double paths = 1.0;
    for (int k = 1; k < tt.order(); ++k)
        paths *= tt.ranks[k];
    const double s = std::pow(2.0 / (tt.in_dim() * paths), 1.0 / (2.0 * tt.order()));
    for (auto& c : tt.cores)
        for (Eigen::Index i = 0; i < c.size(); ++i)
            c(i) = s * rng.normal();
    return tt;
}

RMat tt_materialize(const TTLayerSpec& tt)
{
    tt.validate();
    // Forwarding the identity materializes W one column at a time.
    const RMat eye = RMat::Identity(tt.in_dim(), tt.in_dim());
    return tt_forward_batch(tt, eye).transpose();
}

namespace {

// One contraction step. `in` has layout [B][P][n][R][ra]; `out` gets [B][P][m][R][rb].
void tt_step(const TTLayerSpec& tt, int k, Eigen::Index batch, Eigen::Index p_dim, Eigen::Index r_dim,
             const std::vector<double>& in, std::vector<double>& out)
{
    const int nk = tt.in_modes[k], mk = tt.out_modes[k], ra = tt.ranks[k], rb = tt.ranks[k + 1];
    const RVec& g = tt.cores[k];
    out.assign(static_cast<std::size_t>(batch * p_dim * mk * r_dim * rb), 0.0);
    for (Eigen::Index b = 0; b < batch; ++b)
        for (Eigen::Index p = 0; p < p_dim; ++p)
            for (int n = 0; n < nk; ++n)
                for (Eigen::Index r = 0; r < r_dim; ++r)
                    for (int a = 0; a < ra; ++a) {
                        const double val = in[(((b * p_dim + p) * nk + n) * r_dim + r) * ra + a];
                        if (val == 0.0)
                            continue;
                        for (int m = 0; m < mk; ++m) {
                            const double* gp = g.data() + ((static_cast<Eigen::Index>(a) * mk + m) * nk + n) * rb;
                            double* op = out.data() + (((b * p_dim + p) * mk + m) * r_dim + r) * rb;
                            for (int c = 0; c < rb; ++c)
                                op[c] += val * gp[c];
                        }
                    }
}

std::vector<double> rows_to_flat(const RMat& x)
{
    std::vector<double> flat(static_cast<std::size_t>(x.size()));
    for (Eigen::Index b = 0; b < x.rows(); ++b)
        for (Eigen::Index j = 0; j < x.cols(); ++j)
            flat[static_cast<std::size_t>(b * x.cols() + j)] = x(b, j);
    return flat;
}

} // namespace

RMat tt_forward_batch(const TTLayerSpec& tt, const RMat& x)
{
    tt.validate();
    if (x.cols() != tt.in_dim())
        throw Error("tt_forward: input width " + std::to_string(x.cols()) + " does not match mode product " +
                    std::to_string(tt.in_dim()));
    const Eigen::Index batch = x.rows();
    std::vector<double> cur = rows_to_flat(x), next;
    Eigen::Index p_dim = 1, rest = tt.in_dim();
    for (int k = 0; k < tt.order(); ++k) {
        const Eigen::Index r_dim = rest / tt.in_modes[k];
        tt_step(tt, k, batch, p_dim, r_dim, cur, next);
        cur.swap(next);
        p_dim *= tt.out_modes[k];
        rest = r_dim;
    }
    RMat y(batch, tt.out_dim());
    for (Eigen::Index b = 0; b < batch; ++b)
        for (Eigen::Index m = 0; m < y.cols(); ++m)
            y(b, m) = cur[static_cast<std::size_t>(b * y.cols() + m)];
    return y;
}

RVec tt_forward(const TTLayerSpec& tt, const RVec& x)
{
    return tt_forward_batch(tt, x.transpose()).row(0).transpose();
}

TTLayerSpec tt_from_dense(const RMat& w, const std::vector<int>& out_modes, const std::vector<int>& in_modes,
                          const std::vector<int>& max_ranks, double* discarded_sq)
{
    const int q = static_cast<int>(in_modes.size());
    if (q == 0 || static_cast<int>(out_modes.size()) != q)
        throw Error("tt_from_dense: mode lists must be non-empty and of equal length");
    if (product(out_modes) != w.rows() || product(in_modes) != w.cols())
        throw Error("tt_from_dense: mode products do not match the matrix shape");
    if (!max_ranks.empty() && static_cast<int>(max_ranks.size()) != q - 1)
        throw Error("tt_from_dense: expected q-1 interior rank caps");

    // Tensor with index order (m1 n1)(m2 n2)...(mq nq), row-major.
    std::vector<int> pair_dims(q);
    for (int k = 0; k < q; ++k)
        pair_dims[k] = out_modes[k] * in_modes[k];
    std::vector<double> tensor(static_cast<std::size_t>(w.size()));
    for (Eigen::Index row = 0; row < w.rows(); ++row)
        for (Eigen::Index col = 0; col < w.cols(); ++col) {
            Eigen::Index rr = row, cc = col, flat = 0, stride = 1;
            for (int k = q - 1; k >= 0; --k) {
                const Eigen::Index m = rr % out_modes[k], n = cc % in_modes[k];
                rr /= out_modes[k];
                cc /= in_modes[k];
                flat += (m * in_modes[k] + n) * stride;
                stride *= pair_dims[k];
            }
            tensor[static_cast<std::size_t>(flat)] = w(row, col);
        }

    TTLayerSpec tt;
    tt.in_modes = in_modes;
    tt.out_modes = out_modes;
    tt.ranks.assign(q + 1, 1);
    double dropped = 0.0;

    // remaining: rows = r_prev * pair_dims[k], cols = product of later pair dims.
    Eigen::Index r_prev = 1;
    std::vector<double> rem = tensor;
    for (int k = 0; k < q - 1; ++k) {
        const Eigen::Index rows = r_prev * pair_dims[k];
        const Eigen::Index cols = static_cast<Eigen::Index>(rem.size()) / rows;
        RMat c(rows, cols);
        for (Eigen::Index i = 0; i < rows; ++i)
            for (Eigen::Index j = 0; j < cols; ++j)
                c(i, j) = rem[static_cast<std::size_t>(i * cols + j)];
        Eigen::BDCSVD<RMat> svd(c, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const RVec& s = svd.singularValues();
        Eigen::Index r = s.size();
        if (!max_ranks.empty() && max_ranks[k] > 0)
            r = std::min<Eigen::Index>(r, max_ranks[k]);
        for (Eigen::Index i = r; i < s.size(); ++i)
            dropped += s(i) * s(i);
        tt.ranks[k + 1] = static_cast<int>(r);
        // Core k: rows (a, m, n) -> layout [a][m][n][b] with b the new rank.
        RVec core(rows * r);
        for (Eigen::Index i = 0; i < rows; ++i)
            for (Eigen::Index b = 0; b < r; ++b)
                core(i * r + b) = svd.matrixU()(i, b);
        tt.cores.push_back(std::move(core));
        const RMat next = s.head(r).asDiagonal() * svd.matrixV().leftCols(r).transpose();
        rem.assign(static_cast<std::size_t>(next.size()), 0.0);
        for (Eigen::Index i = 0; i < next.rows(); ++i)
            for (Eigen::Index j = 0; j < next.cols(); ++j)
                rem[static_cast<std::size_t>(i * next.cols() + j)] = next(i, j);
        r_prev = r;
    }
    tt.cores.push_back(Eigen::Map<RVec>(rem.data(), static_cast<Eigen::Index>(rem.size())));
    tt.validate();
    if (discarded_sq)
        *discarded_sq = dropped;
    return tt;
}

std::size_t tt_param_count(const TTLayerSpec& tt)
{
    std::size_t total = 0;
    for (int k = 0; k < tt.order(); ++k)
        total += static_cast<std::size_t>(tt.ranks[k]) * tt.out_modes[k] * tt.in_modes[k] * tt.ranks[k + 1];
    return total;
}

double quantize_value(double g, double delta)
{
    return delta * std::round(g / delta);
}

TTLayerSpec quantize_cores(TTLayerSpec tt, const QuantizationSpec& q)
{
    if (!(q.delta > 0.0))
        throw Error("quantize_cores: step size must be positive");
    for (auto& c : tt.cores)
        for (Eigen::Index i = 0; i < c.size(); ++i)
            c(i) = quantize_value(c(i), q.delta);
    return tt;
}

// ------------------------------------------------------------------------
// Layers
// ------------------------------------------------------------------------

std::size_t Layer::param_count()
{
    std::size_t n = 0;
    for (const auto& p : params())
        n += static_cast<std::size_t>(p.size);
    return n;
}

void Layer::zero_grad()
{
    for (auto& p : params())
        std::fill(p.grad, p.grad + p.size, 0.0);
}

Dense::Dense(int in_dim, int out_dim)
    : weight(RMat::Zero(out_dim, in_dim)), bias(RVec::Zero(out_dim)), grad_w_(RMat::Zero(out_dim, in_dim)),
      grad_b_(RVec::Zero(out_dim))
{
    if (in_dim < 1 || out_dim < 1)
        throw Error("dense: dimensions must be positive");
}

Dense::Dense(int in_dim, int out_dim, Stream& rng) : Dense(in_dim, out_dim)
{
    const double s = std::sqrt(2.0 / in_dim);
    for (Eigen::Index j = 0; j < weight.cols(); ++j)
        for (Eigen::Index i = 0; i < weight.rows(); ++i)
            weight(i, j) = s * rng.normal();
}

RMat Dense::forward(const RMat& x, Mode)
{
    if (x.cols() != weight.cols())
        throw Error("dense: input width " + std::to_string(x.cols()) + " expected " +
                    std::to_string(weight.cols()));
    cache_x_ = x;
    cached_ = true;
    RMat y = x * weight.transpose();
    y.rowwise() += bias.transpose();
    return y;
}

RMat Dense::backward(const RMat& grad_out)
{
    require_cache(cached_, "dense");
    grad_w_ += grad_out.transpose() * cache_x_;
    grad_b_ += grad_out.colwise().sum().transpose();
    return grad_out * weight;
}

std::vector<ParamView> Dense::params()
{
    return {{weight.data(), grad_w_.data(), weight.size()}, {bias.data(), grad_b_.data(), bias.size()}};
}

TTDense::TTDense(TTLayerSpec s, bool bias_on) : spec(std::move(s)), with_bias(bias_on)
{
    spec.validate();
    bias = RVec::Zero(with_bias ? spec.out_dim() : 0);
    grad_b_ = RVec::Zero(bias.size());
    for (const auto& c : spec.cores)
        grad_cores_.push_back(RVec::Zero(c.size()));
}

RMat TTDense::forward(const RMat& x, Mode)
{
    if (x.cols() != spec.in_dim())
        throw Error("tt layer: input width " + std::to_string(x.cols()) + " expected " +
                    std::to_string(spec.in_dim()));
    batch_ = x.rows();
    states_.clear();
    states_.push_back(rows_to_flat(x));
    Eigen::Index p_dim = 1, rest = spec.in_dim();
    for (int k = 0; k < spec.order(); ++k) {
        const Eigen::Index r_dim = rest / spec.in_modes[k];
        std::vector<double> next;
        tt_step(spec, k, batch_, p_dim, r_dim, states_.back(), next);
        states_.push_back(std::move(next));
        p_dim *= spec.out_modes[k];
        rest = r_dim;
    }
    cached_ = true;
    const auto& last = states_.back();
    RMat y(batch_, spec.out_dim());
    for (Eigen::Index b = 0; b < batch_; ++b)
        for (Eigen::Index m = 0; m < y.cols(); ++m)
            y(b, m) = last[static_cast<std::size_t>(b * y.cols() + m)];
    if (with_bias)
        y.rowwise() += bias.transpose();
    return y;
}

RMat TTDense::backward(const RMat& grad_out)
{
    require_cache(cached_, "tt layer");
    if (with_bias)
        grad_b_ += grad_out.colwise().sum().transpose();
    std::vector<double> d_out = rows_to_flat(grad_out);

    // Recompute the per-step (P, R) shapes.
    const int q = spec.order();
    std::vector<Eigen::Index> p_dims(q), r_dims(q);
    Eigen::Index p_dim = 1, rest = spec.in_dim();
    for (int k = 0; k < q; ++k) {
        p_dims[k] = p_dim;
        r_dims[k] = rest / spec.in_modes[k];
        p_dim *= spec.out_modes[k];
        rest = r_dims[k];
    }

    for (int k = q - 1; k >= 0; --k) {
        const int nk = spec.in_modes[k], mk = spec.out_modes[k], ra = spec.ranks[k], rb = spec.ranks[k + 1];
        const Eigen::Index pd = p_dims[k], rd = r_dims[k];
        const auto& in = states_[k];
        const RVec& g = spec.cores[k];
        RVec& dg = grad_cores_[k];
        std::vector<double> d_in(in.size(), 0.0);
        for (Eigen::Index b = 0; b < batch_; ++b)
            for (Eigen::Index p = 0; p < pd; ++p)
                for (int n = 0; n < nk; ++n)
                    for (Eigen::Index r = 0; r < rd; ++r)
                        for (int a = 0; a < ra; ++a) {
                            const std::size_t ii = static_cast<std::size_t>((((b * pd + p) * nk + n) * rd + r) * ra + a);
                            const double val = in[ii];
                            double acc = 0.0;
                            for (int m = 0; m < mk; ++m) {
                                const Eigen::Index gi = ((static_cast<Eigen::Index>(a) * mk + m) * nk + n) * rb;
                                const double* op = d_out.data() + (((b * pd + p) * mk + m) * rd + r) * rb;
                                for (int c = 0; c < rb; ++c) {
                                    acc += op[c] * g(gi + c);
                                    dg(gi + c) += val * op[c];
                                }
                            }
                            d_in[ii] = acc;
                        }
        d_out.swap(d_in);
    }
    RMat dx(batch_, spec.in_dim());
    for (Eigen::Index b = 0; b < batch_; ++b)
        for (Eigen::Index j = 0; j < dx.cols(); ++j)
            dx(b, j) = d_out[static_cast<std::size_t>(b * dx.cols() + j)];
    return dx;
}

std::vector<ParamView> TTDense::params()
{
    std::vector<ParamView> v;
    for (std::size_t k = 0; k < spec.cores.size(); ++k)
        v.push_back({spec.cores[k].data(), grad_cores_[k].data(), spec.cores[k].size()});
    if (with_bias)
        v.push_back({bias.data(), grad_b_.data(), bias.size()});
    return v;
}

RMat ReLU::forward(const RMat& x, Mode)
{
    mask_ = (x.array() > 0.0).cast<double>();
    cached_ = true;
    return x.cwiseProduct(mask_);
}

RMat ReLU::backward(const RMat& grad_out)
{
    require_cache(cached_, "relu");
    return grad_out.cwiseProduct(mask_);
}

RMat Softmax::forward(const RMat& x, Mode)
{
    RMat y(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const double mx = x.row(i).maxCoeff();
        y.row(i) = (x.row(i).array() - mx).exp();
        y.row(i) /= y.row(i).sum();
    }
    out_ = y;
    cached_ = true;
    return y;
}

RMat Softmax::backward(const RMat& grad_out)
{
    require_cache(cached_, "softmax");
    RMat dx(out_.rows(), out_.cols());
    for (Eigen::Index i = 0; i < out_.rows(); ++i) {
        const double dot = grad_out.row(i).dot(out_.row(i));
        dx.row(i) = out_.row(i).array() * (grad_out.row(i).array() - dot);
    }
    return dx;
}

BatchNorm::BatchNorm(int dim, double mom, double e)
    : gamma(RVec::Ones(dim)), beta(RVec::Zero(dim)), running_mean(RVec::Zero(dim)), running_var(RVec::Ones(dim)),
      momentum(mom), eps(e), grad_gamma_(RVec::Zero(dim)), grad_beta_(RVec::Zero(dim))
{
}

RMat BatchNorm::forward(const RMat& x, Mode mode)
{
    if (x.cols() != gamma.size())
        throw Error("batchnorm: input width mismatch");
    RVec mean, var;
    if (mode == Mode::train) {
        if (x.rows() < 2)
            throw Error("batchnorm: training mode needs at least two samples");
        mean = x.colwise().mean().transpose();
        var = (x.rowwise() - mean.transpose()).array().square().colwise().mean().transpose();
        running_mean = momentum * running_mean + (1.0 - momentum) * mean;
        running_var = momentum * running_var + (1.0 - momentum) * var;
    } else {
        mean = running_mean;
        var = running_var;
    }
    inv_std_ = (var.array() + eps).rsqrt();
    xhat_ = (x.rowwise() - mean.transpose()).array().rowwise() * inv_std_.transpose().array();
    cached_mode_ = mode;
    cached_ = true;
    RMat y = xhat_.array().rowwise() * gamma.transpose().array();
    y.rowwise() += beta.transpose();
    return y;
}

RMat BatchNorm::backward(const RMat& grad_out)
{
    require_cache(cached_, "batchnorm");
    grad_gamma_ += (grad_out.array() * xhat_.array()).colwise().sum().transpose().matrix();
    grad_beta_ += grad_out.colwise().sum().transpose();
    const RMat dxhat = grad_out.array().rowwise() * gamma.transpose().array();
    if (cached_mode_ == Mode::infer)
        return dxhat.array().rowwise() * inv_std_.transpose().array();
    const double b = static_cast<double>(grad_out.rows());
    const RVec sum_d = dxhat.colwise().sum().transpose();
    const RVec sum_dx = (dxhat.array() * xhat_.array()).colwise().sum().transpose();
    RMat dx = (b * dxhat).rowwise() - sum_d.transpose();
    dx -= (xhat_.array().rowwise() * sum_dx.transpose().array()).matrix();
    return (dx.array().rowwise() * (inv_std_.transpose().array() / b)).matrix();
}

std::vector<ParamView> BatchNorm::params()
{
    return {{gamma.data(), grad_gamma_.data(), gamma.size()}, {beta.data(), grad_beta_.data(), beta.size()}};
}

Network::Network(const Network& other)
{
    for (const auto& l : other.layers_)
        layers_.push_back(l->clone());
}

Network& Network::operator=(const Network& other)
{
    if (this != &other) {
        layers_.clear();
        for (const auto& l : other.layers_)
            layers_.push_back(l->clone());
    }
    return *this;
}

RMat Network::forward(const RMat& x, Mode mode)
{
    RMat h = x;
    for (auto& l : layers_)
        h = l->forward(h, mode);
    return h;
}

RMat Network::backward(const RMat& grad_out)
{
    RMat g = grad_out;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it)
        g = (*it)->backward(g);
    return g;
}

std::vector<ParamView> Network::params()
{
    std::vector<ParamView> all;
    for (auto& l : layers_)
        for (const auto& p : l->params())
            all.push_back(p);
    return all;
}

std::size_t Network::param_count()
{
    std::size_t n = 0;
    for (auto& l : layers_)
        n += l->param_count();
    return n;
}

void Network::zero_grad()
{
    for (auto& l : layers_)
        l->zero_grad();
}

LossResult softmax_cross_entropy(const RMat& logits, const std::vector<int>& labels)
{
    if (static_cast<Eigen::Index>(labels.size()) != logits.rows())
        throw Error("cross-entropy: label count differs from batch size");
    const double b = static_cast<double>(logits.rows());
    LossResult r{0.0, RMat(logits.rows(), logits.cols())};
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        const int y = labels[static_cast<std::size_t>(i)];
        if (y < 0 || y >= logits.cols())
            throw Error("cross-entropy: label out of range");
        const double mx = logits.row(i).maxCoeff();
        const RVec e = (logits.row(i).array() - mx).exp().transpose();
        const double z = e.sum();
        r.loss -= (logits(i, y) - mx - std::log(z)) / b;
        r.grad.row(i) = (e / z).transpose() / b;
        r.grad(i, y) -= 1.0 / b;
    }
    return r;
}

void adam_step(AdamState& st, const std::vector<ParamView>& params)
{
    if (st.m.empty()) {
        for (const auto& p : params) {
            st.m.push_back(RVec::Zero(p.size));
            st.v.push_back(RVec::Zero(p.size));
        }
    }
    if (st.m.size() != params.size())
        throw Error("adam: parameter list changed between steps");
    ++st.steps;
    const double c1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.steps));
    const double c2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.steps));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto& p = params[i];
        if (st.m[i].size() != p.size)
            throw Error("adam: parameter shape changed between steps");
        for (Eigen::Index j = 0; j < p.size; ++j) {
            const double g = p.grad[j];
            st.m[i](j) = st.beta1 * st.m[i](j) + (1.0 - st.beta1) * g;
            st.v[i](j) = st.beta2 * st.v[i](j) + (1.0 - st.beta2) * g * g;
            const double mhat = st.m[i](j) / c1;
            const double vhat = st.v[i](j) / c2;
            p.value[j] -= st.step_size * mhat / (std::sqrt(vhat) + st.eps);
        }
    }
}

} // namespace isacfj::nn
