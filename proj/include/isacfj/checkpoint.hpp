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

#ifndef ISACFJ_CHECKPOINT_HPP
#define ISACFJ_CHECKPOINT_HPP

#include <map>
#include <string>

#include "isacfj/neural.hpp"

namespace isacfj::nn {

inline constexpr int kCheckpointVersion = 1;

/// Free-form metadata stored next to the parameters.
struct CheckpointMeta {
    double quant_delta = 0.0; ///< 0 when the cores are not quantized
    std::map<std::string, std::string> tags;
};

/// Self-describing JSON text: versioned header, one record per layer with
/// its shape (modes and ranks for TT layers) and flat parameter arrays.
std::string checkpoint_to_string(const Network& net, const CheckpointMeta& meta = {});
Network checkpoint_from_string(const std::string& text, CheckpointMeta* meta = nullptr);

void save_checkpoint(const std::string& path, const Network& net, const CheckpointMeta& meta = {});
Network load_checkpoint(const std::string& path, CheckpointMeta* meta = nullptr);

} // namespace isacfj::nn

#endif
