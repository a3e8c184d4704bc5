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

// Helpers shared by the unit tests and the acceptance runner.

#ifndef ISACFJ_TESTS_SUPPORT_HPP
#define ISACFJ_TESTS_SUPPORT_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "isacfj/neural.hpp"

namespace isacfj::testing {

struct GradCheckResult {
    double max_rel_err = 0.0;
    int probes = 0;
};

// Relative error with a small absolute floor so that two gradients that
// are both numerically zero compare equal.
inline double rel_err(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6}); }

// Scalar loss of a network output; returns the loss and fills dL/dout.
using LossFn = std::function<double(const RMat& out, RMat* grad)>;

inline LossFn weighted_sum_loss(const RMat& weights)
{
    return [weights](const RMat& out, RMat* grad) {
        if (grad)
            *grad = weights;
        return (out.array() * weights.array()).sum();
    };
}

inline LossFn cross_entropy_loss(std::vector<int> labels)
{
    return [labels](const RMat& out, RMat* grad) {
        auto r = nn::softmax_cross_entropy(out, labels);
        if (grad)
            *grad = r.grad;
        return r.loss;
    };
}

// Central differences at step h against backprop on `probes` random
// parameter entries and `probes` random input entries (inputs only when
// the network has no parameters to probe).
inline GradCheckResult grad_check(nn::Network& net, const RMat& x, nn::Mode mode, const LossFn& loss, int probes,
                                  Stream& rng, double h = 1e-5)
{
    GradCheckResult res;
    net.zero_grad();
    RMat g_out;
    loss(net.forward(x, mode), &g_out);
    const RMat g_in = net.backward(g_out);
    auto eval = [&](const RMat& input) { return loss(net.forward(input, mode), nullptr); };

    auto params = net.params();
    Eigen::Index total = 0;
    for (const auto& p : params)
        total += p.size;
    for (int i = 0; i < probes && total > 0; ++i) {
        Eigen::Index idx = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(total)));
        std::size_t b = 0;
        while (idx >= params[b].size) {
            idx -= params[b].size;
            ++b;
        }
        double* val = params[b].value + idx;
        const double keep = *val;
        *val = keep + h;
        const double lp = eval(x);
        *val = keep - h;
        const double lm = eval(x);
        *val = keep;
        res.max_rel_err = std::max(res.max_rel_err, rel_err(params[b].grad[idx], (lp - lm) / (2 * h)));
        ++res.probes;
    }
    for (int i = 0; i < probes; ++i) {
        const Eigen::Index idx = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(x.size())));
        RMat xp = x, xm = x;
        xp(idx) += h;
        xm(idx) -= h;
        res.max_rel_err = std::max(res.max_rel_err, rel_err(g_in(idx), (eval(xp) - eval(xm)) / (2 * h)));
        ++res.probes;
    }
    return res;
}

inline RMat random_matrix(Eigen::Index rows, Eigen::Index cols, Stream& rng)
{
    RMat m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i)
        m(i) = rng.normal();
    return m;
}

struct NamedNet {
    std::string name;
    nn::Network net;
    nn::Mode mode;
    int in_dim;
    int out_dim;
    bool cross_entropy;
};

// One small network per layer type, plus a three-layer stack.
inline std::vector<NamedNet> gradient_suite(Stream& rng)
{
    std::vector<NamedNet> out;
    {
        nn::Network n;
        n.add<nn::Dense>(5, 4, rng);
        out.push_back({"dense", std::move(n), nn::Mode::train, 5, 4, false});
    }
    {
        nn::Network n;
        auto& tt = n.add<nn::TTDense>(nn::TTLayerSpec::random({2, 3}, {3, 2}, {1, 3, 1}, rng), true);
        for (Eigen::Index i = 0; i < tt.bias.size(); ++i)
            tt.bias(i) = rng.normal();
        out.push_back({"tt", std::move(n), nn::Mode::train, 6, 6, false});
    }
    {
        nn::Network n;
        n.add<nn::TTDense>(nn::TTLayerSpec::random({2, 2, 2}, {2, 3, 2}, {1, 2, 3, 1}, rng), false);
        out.push_back({"tt3", std::move(n), nn::Mode::train, 8, 12, false});
    }
    {
        nn::Network n;
        n.add<nn::Dense>(4, 6, rng);
        n.add<nn::ReLU>();
        n.add<nn::Dense>(6, 3, rng);
        out.push_back({"relu", std::move(n), nn::Mode::train, 4, 3, false});
    }
    {
        nn::Network n;
        n.add<nn::Dense>(4, 5, rng);
        n.add<nn::Softmax>();
        out.push_back({"softmax", std::move(n), nn::Mode::train, 4, 5, false});
    }
    {
        nn::Network n;
        n.add<nn::Dense>(4, 5, rng);
        auto& bn = n.add<nn::BatchNorm>(5);
        for (int i = 0; i < 5; ++i) {
            bn.gamma(i) = 1.0 + 0.3 * rng.normal();
            bn.beta(i) = 0.3 * rng.normal();
        }
        out.push_back({"batchnorm_train", std::move(n), nn::Mode::train, 4, 5, false});
    }
    {
        nn::Network n;
        n.add<nn::Dense>(4, 5, rng);
        auto& bn = n.add<nn::BatchNorm>(5);
        for (int i = 0; i < 5; ++i) {
            bn.running_mean(i) = 0.2 * rng.normal();
            bn.running_var(i) = 0.5 + rng.uniform();
            bn.gamma(i) = 1.0 + 0.3 * rng.normal();
        }
        out.push_back({"batchnorm_infer", std::move(n), nn::Mode::infer, 4, 5, false});
    }
    {
        nn::Network n;
        n.add<nn::Dense>(3, 8, rng);
        n.add<nn::ReLU>();
        n.add<nn::Dense>(8, 4, rng);
        out.push_back({"softmax_cross_entropy", std::move(n), nn::Mode::train, 3, 4, true});
    }
    {
        nn::Network n;
        n.add<nn::Dense>(6, 10, rng);
        n.add<nn::ReLU>();
        n.add<nn::Dense>(10, 8, rng);
        n.add<nn::ReLU>();
        n.add<nn::Dense>(8, 4, rng);
        out.push_back({"three_layer", std::move(n), nn::Mode::train, 6, 4, false});
    }
    return out;
}

// Runs the suite entry with a batch of 7 and 64 probes.
inline GradCheckResult check_entry(NamedNet& e, Stream& rng, int probes = 64)
{
    const int batch = 7;
    const RMat x = random_matrix(batch, e.in_dim, rng);
    if (e.cross_entropy) {
        std::vector<int> labels;
        for (int i = 0; i < batch; ++i)
            labels.push_back(static_cast<int>(rng.below(static_cast<std::uint64_t>(e.out_dim))));
        return grad_check(e.net, x, e.mode, cross_entropy_loss(labels), probes, rng);
    }
    return grad_check(e.net, x, e.mode, weighted_sum_loss(random_matrix(batch, e.out_dim, rng)), probes, rng);
}

} // namespace isacfj::testing

#endif
