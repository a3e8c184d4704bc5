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

#include "isacfj/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <set>
#include <sstream>

namespace isacfj {

namespace {

struct ValueError {
    std::string what;
};

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string fmt_double(double x)
{
    if (std::isinf(x))
        return x > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

double to_double(const std::string& v)
{
    if (v == "inf" || v == "+inf")
        return std::numeric_limits<double>::infinity();
    if (v == "-inf")
        return -std::numeric_limits<double>::infinity();
    std::size_t used = 0;
    double x = 0.0;
    try {
        x = std::stod(v, &used);
    } catch (...) {
        throw ValueError{"expected a number, got '" + v + "'"};
    }
    if (used != v.size() || std::isnan(x))
        throw ValueError{"expected a number, got '" + v + "'"};
    return x;
}

long long to_integer(const std::string& v)
{
    std::size_t used = 0;
    long long x = 0;
    try {
        x = std::stoll(v, &used);
    } catch (...) {
        throw ValueError{"expected an integer, got '" + v + "'"};
    }
    if (used != v.size())
        throw ValueError{"expected an integer, got '" + v + "'"};
    return x;
}

int to_int(const std::string& v)
{
    const long long x = to_integer(v);
    if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max())
        throw ValueError{"integer out of range: '" + v + "'"};
    return static_cast<int>(x);
}

std::uint64_t to_u64(const std::string& v)
{
    if (v.empty() || v[0] == '-' || v[0] == '+')
        throw ValueError{"expected an unsigned integer, got '" + v + "'"};
    std::size_t used = 0;
    std::uint64_t x = 0;
    try {
        x = std::stoull(v, &used);
    } catch (...) {
        throw ValueError{"expected an unsigned integer, got '" + v + "'"};
    }
    if (used != v.size())
        throw ValueError{"expected an unsigned integer, got '" + v + "'"};
    return x;
}

bool to_bool(const std::string& v)
{
    if (v == "true")
        return true;
    if (v == "false")
        return false;
    throw ValueError{"expected true or false, got '" + v + "'"};
}

std::vector<double> to_list(const std::string& v)
{
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ','))
        out.push_back(to_double(trim(item)));
    if (out.empty())
        throw ValueError{"expected a comma-separated list of numbers"};
    return out;
}

std::string from_list(const std::vector<double>& v)
{
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i)
        s += (i ? ", " : "") + fmt_double(v[i]);
    return s;
}

template <typename E>
E to_enum(const std::string& v, std::initializer_list<std::pair<const char*, E>> names)
{
    std::string allowed;
    for (const auto& [n, e] : names) {
        if (v == n)
            return e;
        allowed += (allowed.empty() ? "" : ", ") + std::string(n);
    }
    throw ValueError{"expected one of {" + allowed + "}, got '" + v + "'"};
}

template <typename E>
std::string from_enum(E e, std::initializer_list<std::pair<const char*, E>> names)
{
    for (const auto& [n, x] : names)
        if (x == e)
            return n;
    return "?";
}

const std::initializer_list<std::pair<const char*, SteeringMode>> kSteering{
    {"planar_kronecker", SteeringMode::planar_kronecker}, {"bistatic", SteeringMode::bistatic}};
const std::initializer_list<std::pair<const char*, PhaseReference>> kPhaseRef{
    {"first_element", PhaseReference::first_element}, {"centroid", PhaseReference::centroid}};
const std::initializer_list<std::pair<const char*, PowerMode>> kPowerMode{
    {"average", PowerMode::average}, {"per_subcarrier", PowerMode::per_subcarrier}};
const std::initializer_list<std::pair<const char*, LogBase>> kLogBase{{"e", LogBase::e}, {"2", LogBase::two}};
const std::initializer_list<std::pair<const char*, EncoderKind>> kEncoder{{"dtte", EncoderKind::dtte},
                                                                         {"fc", EncoderKind::fc}};
const std::initializer_list<std::pair<const char*, FimPipeline>> kFisher{
    {"closed_form", FimPipeline::closed_form}, {"nonparametric", FimPipeline::nonparametric}};
const std::initializer_list<std::pair<const char*, Objective>> kObjective{
    {"sum_secrecy", Objective::sum_secrecy}, {"worst_user", Objective::worst_user}};
const std::initializer_list<std::pair<const char*, CrlbConvention>> kConvention{
    {"scalar", CrlbConvention::scalar}, {"matrix", CrlbConvention::matrix}};

struct Key {
    std::string section;
    std::string name;
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

#define ISACFJ_NUM(sec, key, field)                                                                                 \
    Key{sec, key, [](RunConfig& c, const std::string& v) { c.field = to_double(v); },                              \
        [](const RunConfig& c) { return fmt_double(c.field); }}
#define ISACFJ_INT(sec, key, field)                                                                                 \
    Key{sec, key, [](RunConfig& c, const std::string& v) { c.field = to_int(v); },                                 \
        [](const RunConfig& c) { return std::to_string(c.field); }}
#define ISACFJ_BOOL(sec, key, field)                                                                                \
    Key{sec, key, [](RunConfig& c, const std::string& v) { c.field = to_bool(v); },                                \
        [](const RunConfig& c) { return std::string(c.field ? "true" : "false"); }}
#define ISACFJ_ENUM(sec, key, field, table)                                                                         \
    Key{sec, key, [](RunConfig& c, const std::string& v) { c.field = to_enum(v, table); },                         \
        [](const RunConfig& c) { return from_enum(c.field, table); }}

const std::vector<Key>& keys()
{
    static const std::vector<Key> all = [] {
        std::vector<Key> k;
        k.push_back({"run", "seed", [](RunConfig& c, const std::string& v) { c.seed = to_u64(v); },
                     [](const RunConfig& c) { return std::to_string(c.seed); }});

        k.push_back(ISACFJ_INT("geometry", "n_tx", scenario.geom.n_tx));
        k.push_back(ISACFJ_INT("geometry", "n_rx", scenario.geom.n_rx));
        k.push_back(ISACFJ_INT("geometry", "n_eve", scenario.geom.n_eve));
        k.push_back(ISACFJ_NUM("geometry", "spacing", scenario.geom.spacing));
        k.push_back(ISACFJ_ENUM("geometry", "phase_reference", scenario.geom.phase_ref, kPhaseRef));
        k.push_back(ISACFJ_ENUM("geometry", "steering", scenario.mode, kSteering));

        k.push_back(ISACFJ_INT("scenario", "users", scenario.users));
        k.push_back(ISACFJ_INT("scenario", "subcarriers", scenario.n_sub));
        k.push_back(ISACFJ_NUM("scenario", "p_max_db", scenario.p_max_db));
        k.push_back(ISACFJ_ENUM("scenario", "power_mode", scenario.power_mode, kPowerMode));
        k.push_back(ISACFJ_NUM("scenario", "theta_deg", scenario.theta_deg));
        k.push_back(ISACFJ_NUM("scenario", "phi_deg", scenario.phi_deg));
        k.push_back(ISACFJ_NUM("scenario", "sigma_theta2", scenario.sigma_theta2));
        k.push_back(ISACFJ_NUM("scenario", "sigma_phi2", scenario.sigma_phi2));
        k.push_back(ISACFJ_NUM("scenario", "rho_csi", scenario.rho_csi));
        k.push_back(ISACFJ_NUM("scenario", "frac_comm_only", scenario.frac_comm_only));
        k.push_back(ISACFJ_NUM("scenario", "jam_fraction_init", scenario.jam_fraction_init));
        k.push_back(ISACFJ_INT("scenario", "eve_draws", scenario.eve_draws));
        k.push_back(ISACFJ_BOOL("scenario", "fj_enabled", scenario.fj_enabled));
        k.push_back(ISACFJ_ENUM("scenario", "log_base", scenario.rates.log_base, kLogBase));
        k.push_back(ISACFJ_NUM("scenario", "tau_bar", scenario.rates.tau_bar));

        k.push_back(ISACFJ_NUM("noise", "sigma_c2", scenario.noise.sigma_c2));
        k.push_back(ISACFJ_NUM("noise", "sigma_e2", scenario.noise.sigma_e2));
        k.push_back(ISACFJ_NUM("noise", "sigma_s2", scenario.noise.sigma_s2));
        k.push_back({"noise", "alpha_re", [](RunConfig& c, const std::string& v) {
                         c.scenario.noise.alpha.real(to_double(v));
                     },
                     [](const RunConfig& c) { return fmt_double(c.scenario.noise.alpha.real()); }});
        k.push_back({"noise", "alpha_im", [](RunConfig& c, const std::string& v) {
                         c.scenario.noise.alpha.imag(to_double(v));
                     },
                     [](const RunConfig& c) { return fmt_double(c.scenario.noise.alpha.imag()); }});

        k.push_back(ISACFJ_NUM("impairments", "sigma_pn2", scenario.impairments.sigma_pn2));
        k.push_back(ISACFJ_NUM("impairments", "eps_iq", scenario.impairments.eps_iq));
        k.push_back(ISACFJ_NUM("impairments", "dtheta_iq_deg", dtheta_iq_deg));
        k.push_back(ISACFJ_INT("impairments", "pn_draws", scenario.pn_draws));

        k.push_back(ISACFJ_INT("bler", "block_len", scenario.block_len));
        k.push_back(ISACFJ_INT("bler", "blocks", scenario.bler_blocks));

        k.push_back(ISACFJ_INT("training", "epochs_stage1", training.epochs_stage1));
        k.push_back(ISACFJ_INT("training", "steps_per_epoch", training.steps_per_epoch));
        k.push_back(ISACFJ_INT("training", "iters_stage2", training.iters_stage2));
        k.push_back(ISACFJ_INT("training", "batch", training.batch));
        k.push_back(ISACFJ_NUM("training", "step_size", training.step_size));
        k.push_back(ISACFJ_NUM("training", "step_size_final", training.step_size_final));
        k.push_back(ISACFJ_NUM("training", "lambda", training.lambda));
        k.push_back(ISACFJ_NUM("training", "crlb0_theta_db", crlb0_theta_db));
        k.push_back(ISACFJ_NUM("training", "crlb0_phi_db", crlb0_phi_db));
        k.push_back(ISACFJ_INT("training", "msg_alphabet", training.msg_alphabet));
        k.push_back(ISACFJ_INT("training", "candidate_count", training.candidate_count));
        k.push_back(ISACFJ_INT("training", "reinit_after", training.reinit_after));
        k.push_back(ISACFJ_ENUM("training", "encoder", training.encoder, kEncoder));
        k.push_back(ISACFJ_ENUM("training", "fisher", training.fisher, kFisher));
        k.push_back(ISACFJ_ENUM("training", "objective", training.objective, kObjective));
        k.push_back(ISACFJ_ENUM("training", "crlb_convention", training.convention, kConvention));
        k.push_back(ISACFJ_INT("training", "tt_rank", training.tt_rank));
        k.push_back(ISACFJ_NUM("training", "quant_delta", training.quant_delta));
        k.push_back({"training", "jam_fractions",
                     [](RunConfig& c, const std::string& v) { c.training.jam_fractions = to_list(v); },
                     [](const RunConfig& c) { return from_list(c.training.jam_fractions); }});
        k.push_back(ISACFJ_INT("training", "proxy_eve_draws", training.proxy_eve_draws));
        k.push_back(ISACFJ_NUM("training", "robust_pn_variance", training.robust_pn_variance));
        k.push_back(ISACFJ_INT("training", "robust_draws", training.robust_draws));
        k.push_back(ISACFJ_NUM("training", "perturbation_scale", training.perturbation_scale));
        k.push_back(ISACFJ_INT("training", "perturbation_count", training.perturbation_count));
        k.push_back(ISACFJ_INT("training", "discriminator_hidden", training.discriminator.hidden));
        k.push_back(ISACFJ_INT("training", "discriminator_steps", training.discriminator.steps));
        k.push_back(ISACFJ_NUM("training", "discriminator_step_size", training.discriminator.step_size));
        k.push_back(ISACFJ_INT("training", "discriminator_batch", training.discriminator.batch));
        k.push_back(ISACFJ_INT("training", "discriminator_samples", training.discriminator.samples));

        k.push_back({"sweep", "axis",
                     [](RunConfig& c, const std::string& v) {
                         try {
                             c.sweep.axis = sweep_axis_from_string(v);
                         } catch (const Error& e) {
                             throw ValueError{e.what()};
                         }
                     },
                     [](const RunConfig& c) { return to_string(c.sweep.axis); }});
        k.push_back({"sweep", "points", [](RunConfig& c, const std::string& v) { c.sweep.points = to_list(v); },
                     [](const RunConfig& c) { return from_list(c.sweep.points); }});
        k.push_back(ISACFJ_INT("sweep", "trials", sweep.trials));

        k.push_back({"output", "directory", [](RunConfig& c, const std::string& v) { c.out_dir = v; },
                     [](const RunConfig& c) { return c.out_dir; }});
        k.push_back({"output", "experiment_id",
                     [](RunConfig& c, const std::string& v) {
                         if (v.empty() || v.find_first_of(",\"\n") != std::string::npos)
                             throw ValueError{"experiment id must be non-empty without commas or quotes"};
                         c.sweep.experiment_id = v;
                     },
                     [](const RunConfig& c) { return c.sweep.experiment_id; }});
        return k;
    }();
    return all;
}

#undef ISACFJ_NUM
#undef ISACFJ_INT
#undef ISACFJ_BOOL
#undef ISACFJ_ENUM

const Key* find_key(const std::string& section, const std::string& name)
{
    for (const auto& k : keys())
        if (k.section == section && k.name == name)
            return &k;
    return nullptr;
}

bool known_section(const std::string& s)
{
    for (const auto& k : keys())
        if (k.section == s)
            return true;
    return false;
}

} // namespace

void RunConfig::apply_units()
{
    training.crlb0_theta = from_db(crlb0_theta_db);
    training.crlb0_phi = from_db(crlb0_phi_db);
    scenario.impairments = ImpairmentParams::make(scenario.impairments.sigma_pn2, scenario.impairments.eps_iq,
                                                  deg_to_rad(dtheta_iq_deg));
    const PhaseReference ref = scenario.geom.phase_ref;
    scenario.geom = ArrayGeometry::make(scenario.geom.n_tx, scenario.geom.n_rx, scenario.geom.n_eve,
                                        scenario.geom.spacing);
    scenario.geom.phase_ref = ref;
}

void RunConfig::validate() const
{
    scenario.validate();
    training.validate();
    sweep.validate();
    if (out_dir.empty())
        throw Error("config: output directory is empty");
}

RunConfig default_run_config()
{
    RunConfig c;
    c.scenario.geom = ArrayGeometry::make(16, 4, 2);
    c.scenario.users = 2;
    c.scenario.n_sub = 64;
    c.scenario.frac_comm_only = 0.5;
    c.scenario.p_max_db = 30.0;
    c.scenario.theta_deg = 10.0;
    c.scenario.phi_deg = 15.0;
    c.scenario.rho_csi = 0.0;
    c.training.step_size = 1e-3;
    c.training.batch = 128;
    c.sweep.axis = SweepAxis::rho_csi;
    c.sweep.points = {0.0, 0.05, 0.1, 0.2};
    c.sweep.trials = 20;
    c.sweep.experiment_id = "isacfj";
    c.apply_units();
    return c;
}

RunConfig parse_config_string(const std::string& text, const std::string& origin)
{
    RunConfig cfg = default_run_config();
    std::istringstream in(text);
    std::string raw;
    std::string section;
    std::set<std::string> seen;
    int lineno = 0;
    auto fail = [&](const std::string& msg) -> Error {
        return Error(origin + ":" + std::to_string(lineno) + ": " + msg);
    };
    while (std::getline(in, raw)) {
        ++lineno;
        std::string line = raw;
        // Comments start at '#' or ';' at line start or after whitespace.
        for (std::size_t i = 0; i < line.size(); ++i)
            if ((line[i] == '#' || line[i] == ';') && (i == 0 || line[i - 1] == ' ' || line[i - 1] == '\t')) {
                line.resize(i);
                break;
            }
        line = trim(line);
        if (line.empty())
            continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw fail("malformed section header '" + line + "'");
            section = trim(line.substr(1, line.size() - 2));
            if (!known_section(section))
                throw fail("unknown section '" + section + "'");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw fail("expected 'key = value', got '" + line + "'");
        std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        std::string sec = section;
        if (const auto dot = key.find('.'); dot != std::string::npos) {
            sec = key.substr(0, dot);
            key = key.substr(dot + 1);
        }
        if (sec.empty())
            throw fail("key '" + key + "' outside any section (use section.key or a [section] header)");
        const Key* k = find_key(sec, key);
        if (!k)
            throw fail("unknown key '" + sec + "." + key + "'");
        if (!seen.insert(sec + "." + key).second)
            throw fail("key '" + sec + "." + key + "' set twice");
        if (value.empty())
            throw fail("key '" + sec + "." + key + "' has no value");
        try {
            k->set(cfg, value);
        } catch (const ValueError& e) {
            throw fail("key '" + sec + "." + key + "': " + e.what);
        }
    }
    cfg.apply_units();
    try {
        cfg.validate();
    } catch (const Error& e) {
        throw Error(origin + ": " + e.what());
    }
    return cfg;
}

RunConfig parse_config(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("config: cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_string(ss.str(), path);
}

std::string resolved_config(const RunConfig& cfg)
{
    std::ostringstream out;
    out << "# resolved configuration\n";
    std::string section;
    for (const auto& k : keys()) {
        if (k.section != section) {
            section = k.section;
            out << (out.tellp() > 0 ? "\n" : "") << '[' << section << "]\n";
        }
        out << k.name << " = " << k.get(cfg) << '\n';
    }
    return out.str();
}

std::vector<std::string> config_keys()
{
    std::vector<std::string> out;
    for (const auto& k : keys())
        out.push_back(k.section + "." + k.name);
    return out;
}

} // namespace isacfj
