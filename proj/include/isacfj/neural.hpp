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

#ifndef ISACFJ_NEURAL_HPP
#define ISACFJ_NEURAL_HPP

#include <memory>
#include <string>
#include <vector>

#include "isacfj/numerics.hpp"

namespace isacfj::nn {

enum class Mode { train, infer };

/// Mutable view of one parameter block and its gradient accumulator.
struct ParamView {
    double* value;
    double* grad;
    Eigen::Index size;
};

// ------------------------------------------------------------------------
// Tensor-train matrices
// ------------------------------------------------------------------------

/// Tensor-train factorization of an M x N matrix. Core k has shape
/// ranks[k] x out_modes[k] x in_modes[k] x ranks[k+1], stored row-major.
/// Row and column multi-indices put mode 1 most significant.
struct TTLayerSpec {
    std::vector<int> in_modes;
    std::vector<int> out_modes;
    std::vector<int> ranks;
    std::vector<RVec> cores;

    int order() const { return static_cast<int>(in_modes.size()); }
    int in_dim() const;
    int out_dim() const;
    Eigen::Index core_size(int k) const
    {
        return static_cast<Eigen::Index>(ranks[k]) * out_modes[k] * in_modes[k] * ranks[k + 1];
    }
    double& at(int k, int a, int m, int n, int b)
    {
        return cores[k](((static_cast<Eigen::Index>(a) * out_modes[k] + m) * in_modes[k] + n) * ranks[k + 1] + b);
    }
    double at(int k, int a, int m, int n, int b) const
    {
        return cores[k](((static_cast<Eigen::Index>(a) * out_modes[k] + m) * in_modes[k] + n) * ranks[k + 1] + b);
    }

    void validate() const;

    static TTLayerSpec zeros(std::vector<int> in_modes, std::vector<int> out_modes, std::vector<int> ranks);
    /// Cores drawn N(0, s^2) with s chosen so the materialized matrix has
    /// roughly He-initialized row norms.
    static TTLayerSpec random(std::vector<int> in_modes, std::vector<int> out_modes, std::vector<int> ranks,
                              Stream& rng);
};

/// Dense M x N matrix represented by the cores.
RMat tt_materialize(const TTLayerSpec& tt);

/// y = W x computed by sequential core contraction (W never formed).
RVec tt_forward(const TTLayerSpec& tt, const RVec& x);

/// Batched form: each row of x is an input vector.
RMat tt_forward_batch(const TTLayerSpec& tt, const RMat& x);

/// TT-SVD of w with the given mode factorizations. `max_ranks` caps the
/// q-1 interior ranks (empty or 0 = unrestricted). When `discarded_sq` is
/// given it receives the total squared singular values dropped.
TTLayerSpec tt_from_dense(const RMat& w, const std::vector<int>& out_modes, const std::vector<int>& in_modes,
                          const std::vector<int>& max_ranks = {}, double* discarded_sq = nullptr);

/// sum_k r_{k-1} m_k n_k r_k
std::size_t tt_param_count(const TTLayerSpec& tt);

struct QuantizationSpec {
    double delta = 1e-2;
};

/// delta * round(g / delta), ties rounded away from zero.
double quantize_value(double g, double delta);

TTLayerSpec quantize_cores(TTLayerSpec tt, const QuantizationSpec& q);

// ------------------------------------------------------------------------
// Layers
// ------------------------------------------------------------------------

class Layer {
public:
    virtual ~Layer() = default;

    /// Rows of `x` are batch samples.
    virtual RMat forward(const RMat& x, Mode mode) = 0;
    /// Accumulates parameter gradients and returns the input gradient.
    virtual RMat backward(const RMat& grad_out) = 0;
    virtual std::vector<ParamView> params() { return {}; }
    virtual std::string kind() const = 0;
    virtual std::unique_ptr<Layer> clone() const = 0;

    std::size_t param_count();
    void zero_grad();
};

class Dense final : public Layer {
public:
    Dense(int in_dim, int out_dim);
    Dense(int in_dim, int out_dim, Stream& rng);

    RMat forward(const RMat& x, Mode mode) override;
    RMat backward(const RMat& grad_out) override;
    std::vector<ParamView> params() override;
    std::string kind() const override { return "dense"; }
    std::unique_ptr<Layer> clone() const override { return std::make_unique<Dense>(*this); }

    RMat weight; ///< out x in
    RVec bias;

private:
    RMat grad_w_;
    RVec grad_b_;
    RMat cache_x_;
    bool cached_ = false;
};

class TTDense final : public Layer {
public:
    TTDense(TTLayerSpec spec, bool with_bias);

    RMat forward(const RMat& x, Mode mode) override;
    RMat backward(const RMat& grad_out) override;
    std::vector<ParamView> params() override;
    std::string kind() const override { return "tt"; }
    std::unique_ptr<Layer> clone() const override { return std::make_unique<TTDense>(*this); }

    TTLayerSpec spec;
    bool with_bias;
    RVec bias;

private:
    std::vector<RVec> grad_cores_;
    RVec grad_b_;
    std::vector<std::vector<double>> states_; // contraction intermediates
    Eigen::Index batch_ = 0;
    bool cached_ = false;
};

class ReLU final : public Layer {
public:
    RMat forward(const RMat& x, Mode mode) override;
    RMat backward(const RMat& grad_out) override;
    std::string kind() const override { return "relu"; }
    std::unique_ptr<Layer> clone() const override { return std::make_unique<ReLU>(*this); }

private:
    RMat mask_;
    bool cached_ = false;
};

/// Row-wise softmax.
class Softmax final : public Layer {
public:
    RMat forward(const RMat& x, Mode mode) override;
    RMat backward(const RMat& grad_out) override;
    std::string kind() const override { return "softmax"; }
    std::unique_ptr<Layer> clone() const override { return std::make_unique<Softmax>(*this); }

private:
    RMat out_;
    bool cached_ = false;
};

/// Batch normalization with learnable scale and shift. Training mode uses
/// batch statistics and updates running averages with `momentum`.
class BatchNorm final : public Layer {
public:
    explicit BatchNorm(int dim, double momentum = 0.9, double eps = 1e-5);

    RMat forward(const RMat& x, Mode mode) override;
    RMat backward(const RMat& grad_out) override;
    std::vector<ParamView> params() override;
    std::string kind() const override { return "batchnorm"; }
    std::unique_ptr<Layer> clone() const override { return std::make_unique<BatchNorm>(*this); }

    RVec gamma, beta;
    RVec running_mean, running_var;
    double momentum, eps;

private:
    RVec grad_gamma_, grad_beta_;
    RMat xhat_;
    RVec inv_std_;
    Mode cached_mode_ = Mode::infer;
    bool cached_ = false;
};

/// Sequential container.
class Network {
public:
    Network() = default;
    Network(const Network& other);
    Network& operator=(const Network& other);
    Network(Network&&) noexcept = default;
    Network& operator=(Network&&) noexcept = default;

    template <class L, class... Args>
    L& add(Args&&... args)
    {
        auto p = std::make_unique<L>(std::forward<Args>(args)...);
        L& ref = *p;
        layers_.push_back(std::move(p));
        return ref;
    }
    void add_layer(std::unique_ptr<Layer> layer) { layers_.push_back(std::move(layer)); }

    RMat forward(const RMat& x, Mode mode = Mode::train);
    RMat backward(const RMat& grad_out);
    std::vector<ParamView> params();
    std::size_t param_count();
    void zero_grad();

    std::size_t size() const { return layers_.size(); }
    Layer& layer(std::size_t i) { return *layers_.at(i); }
    const Layer& layer(std::size_t i) const { return *layers_.at(i); }

private:
    std::vector<std::unique_ptr<Layer>> layers_;
};

struct LossResult {
    double loss;
    RMat grad; ///< d loss / d input, same shape as the input
};

/// Mean categorical cross-entropy of softmax(logits) against integer labels.
LossResult softmax_cross_entropy(const RMat& logits, const std::vector<int>& labels);

struct AdamState {
    double step_size = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::vector<RVec> m;
    std::vector<RVec> v;
    long steps = 0;
};

/// One bias-corrected Adam update; moment buffers are created on first use.
void adam_step(AdamState& state, const std::vector<ParamView>& params);

} // namespace isacfj::nn

#endif
