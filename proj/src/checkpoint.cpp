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

#include "isacfj/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace isacfj::nn {

using nlohmann::json;

namespace {

json to_array(const double* p, Eigen::Index n)
{
    return json(std::vector<double>(p, p + n));
}

RVec vec_from(const json& j, Eigen::Index expected, const char* what)
{
    const auto v = j.get<std::vector<double>>();
    if (static_cast<Eigen::Index>(v.size()) != expected)
        throw Error(std::string("checkpoint: ") + what + " has " + std::to_string(v.size()) + " values, expected " +
                    std::to_string(expected));
    return Eigen::Map<const RVec>(v.data(), expected);
}

} // namespace

std::string checkpoint_to_string(const Network& net, const CheckpointMeta& meta)
{
    json root;
    root["format"] = "isacfj-checkpoint";
    root["version"] = kCheckpointVersion;
    root["quant_delta"] = meta.quant_delta;
    root["tags"] = meta.tags;
    json layers = json::array();
    for (std::size_t i = 0; i < net.size(); ++i) {
        const Layer& l = net.layer(i);
        json rec;
        rec["kind"] = l.kind();
        if (const auto* d = dynamic_cast<const Dense*>(&l)) {
            rec["in"] = d->weight.cols();
            rec["out"] = d->weight.rows();
            // Row-major weight order.
            const RMat wt = d->weight.transpose();
            rec["weight"] = to_array(wt.data(), wt.size());
            rec["bias"] = to_array(d->bias.data(), d->bias.size());
        } else if (const auto* t = dynamic_cast<const TTDense*>(&l)) {
            rec["in_modes"] = t->spec.in_modes;
            rec["out_modes"] = t->spec.out_modes;
            rec["ranks"] = t->spec.ranks;
            rec["with_bias"] = t->with_bias;
            json cores = json::array();
            for (const auto& c : t->spec.cores)
                cores.push_back(to_array(c.data(), c.size()));
            rec["cores"] = cores;
            rec["bias"] = to_array(t->bias.data(), t->bias.size());
        } else if (const auto* b = dynamic_cast<const BatchNorm*>(&l)) {
            rec["dim"] = b->gamma.size();
            rec["momentum"] = b->momentum;
            rec["eps"] = b->eps;
            rec["gamma"] = to_array(b->gamma.data(), b->gamma.size());
            rec["beta"] = to_array(b->beta.data(), b->beta.size());
            rec["running_mean"] = to_array(b->running_mean.data(), b->running_mean.size());
            rec["running_var"] = to_array(b->running_var.data(), b->running_var.size());
        } else if (l.kind() != "relu" && l.kind() != "softmax") {
            throw Error("checkpoint: cannot serialize layer kind '" + l.kind() + "'");
        }
        layers.push_back(rec);
    }
    root["layers"] = layers;
    return root.dump(1);
}

Network checkpoint_from_string(const std::string& text, CheckpointMeta* meta)
{
    json root;
    try {
        root = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(std::string("checkpoint: malformed file: ") + e.what());
    }
    if (root.value("format", "") != "isacfj-checkpoint")
        throw Error("checkpoint: not an isacfj checkpoint");
    const int version = root.value("version", -1);
    if (version != kCheckpointVersion)
        throw Error("checkpoint: unsupported version " + std::to_string(version));
    if (meta) {
        meta->quant_delta = root.value("quant_delta", 0.0);
        meta->tags = root.value("tags", std::map<std::string, std::string>{});
    }
    Network net;
    try {
        for (const auto& rec : root.at("layers")) {
            const std::string kind = rec.at("kind").get<std::string>();
            if (kind == "dense") {
                const int in = rec.at("in").get<int>(), out = rec.at("out").get<int>();
                auto& d = net.add<Dense>(in, out);
                const RVec w = vec_from(rec.at("weight"), static_cast<Eigen::Index>(in) * out, "weight");
                d.weight = Eigen::Map<const RMat>(w.data(), in, out).transpose();
                d.bias = vec_from(rec.at("bias"), out, "bias");
            } else if (kind == "tt") {
                TTLayerSpec spec = TTLayerSpec::zeros(rec.at("in_modes").get<std::vector<int>>(),
                                                      rec.at("out_modes").get<std::vector<int>>(),
                                                      rec.at("ranks").get<std::vector<int>>());
                const auto& cores = rec.at("cores");
                if (static_cast<int>(cores.size()) != spec.order())
                    throw Error("checkpoint: TT core count mismatch");
                for (int k = 0; k < spec.order(); ++k)
                    spec.cores[k] = vec_from(cores[k], spec.core_size(k), "tt core");
                const bool with_bias = rec.at("with_bias").get<bool>();
                auto& t = net.add<TTDense>(spec, with_bias);
                t.bias = vec_from(rec.at("bias"), with_bias ? spec.out_dim() : 0, "bias");
            } else if (kind == "batchnorm") {
                const int dim = rec.at("dim").get<int>();
                auto& b = net.add<BatchNorm>(dim, rec.at("momentum").get<double>(), rec.at("eps").get<double>());
                b.gamma = vec_from(rec.at("gamma"), dim, "gamma");
                b.beta = vec_from(rec.at("beta"), dim, "beta");
                b.running_mean = vec_from(rec.at("running_mean"), dim, "running_mean");
                b.running_var = vec_from(rec.at("running_var"), dim, "running_var");
            } else if (kind == "relu") {
                net.add<ReLU>();
            } else if (kind == "softmax") {
                net.add<Softmax>();
            } else {
                throw Error("checkpoint: unknown layer kind '" + kind + "'");
            }
        }
    } catch (const json::exception& e) {
        throw Error(std::string("checkpoint: bad layer record: ") + e.what());
    }
    return net;
}

void save_checkpoint(const std::string& path, const Network& net, const CheckpointMeta& meta)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error("checkpoint: cannot open '" + path + "' for writing");
    out << checkpoint_to_string(net, meta) << '\n';
    if (!out)
        throw Error("checkpoint: write to '" + path + "' failed");
}

Network load_checkpoint(const std::string& path, CheckpointMeta* meta)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("checkpoint: cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return checkpoint_from_string(ss.str(), meta);
}

} // namespace isacfj::nn
