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

// Command-line driver: simulate, train, sweep, fim-validate, report.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include "isacfj/checkpoint.hpp"
#include "isacfj/config.hpp"
#include "isacfj/eval.hpp"
#include "isacfj/fisher.hpp"

namespace fs = std::filesystem;
using namespace isacfj;

namespace {

constexpr int kGateFailed = 3;
constexpr int kModuleError = 2;

struct Common {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    int threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
};

RunConfig load(const Common& c)
{
    RunConfig cfg = c.config_path.empty() ? default_run_config() : parse_config(c.config_path);
    if (c.seed)
        cfg.seed = *c.seed;
    if (!c.out_dir.empty())
        cfg.out_dir = c.out_dir;
    cfg.sweep.seed = cfg.seed;
    return cfg;
}

// Marks the output directory incomplete until the command finishes.
class OutputDir {
public:
    explicit OutputDir(const RunConfig& cfg) : dir_(cfg.out_dir)
    {
        fs::create_directories(dir_);
        std::ofstream(dir_ / "INCOMPLETE") << "run did not finish\n";
        std::ofstream snap(dir_ / "resolved.ini", std::ios::binary | std::ios::trunc);
        snap << resolved_config(cfg);
        if (!snap)
            throw Error("cannot write resolved configuration");
    }
    fs::path operator/(const std::string& name) const { return dir_ / name; }
    void done() { fs::remove(dir_ / "INCOMPLETE"); }

private:
    fs::path dir_;
};

double null_space_residual(const ProblemInstance& inst, const BeamformingSolution& beams)
{
    double worst = 0.0;
    for (int n = 0; n < inst.n_sub(); ++n) {
        const CMat& h = inst.csi.h_hat[static_cast<std::size_t>(n)];
        const double r = (h * beams.fj_beams[static_cast<std::size_t>(n)]).norm() / h.norm();
        worst = std::max(worst, r);
    }
    return worst;
}

ExperimentResult single_point(const RunConfig& cfg, const TrialRecord& rec)
{
    ExperimentResult res;
    res.experiment_id = cfg.sweep.experiment_id;
    res.axis = SweepAxis::snr_db;
    PointResult p;
    p.axis_value = cfg.scenario.p_max_db;
    p.seeds = {cfg.seed};
    p.trials = {rec};
    p.feasible = rec.feasible;
    res.points.push_back(std::move(p));
    return res;
}

int cmd_simulate(const Common& c)
{
    const RunConfig cfg = load(c);
    OutputDir out(cfg);
    const TrialOutcome t = simulate_trial(cfg.scenario, cfg.training, cfg.seed);
    write_results_csv((out / "results.csv").string(), single_point(cfg, t.record));
    write_training_log((out / "training_log.csv").string(), t.train.log);
    const double resid = null_space_residual(t.scenario.inst, t.train.beams);
    std::printf("sum secrecy %.6g, worst-user secrecy %.6g, BLER user %.4g, BLER Eve %.4g\n",
                t.record.sum_secrecy, t.record.worst_user_secrecy, t.record.bler_user_mean, t.record.bler_eve);
    std::printf("CRLB theta %.2f dB, phi %.2f dB, jamming fraction %.3g, null-space residual %.2e\n",
                t.record.crlb_theta_db, t.record.crlb_phi_db, t.train.jam_fraction, resid);
    out.done();
    const bool ok = t.record.feasible && resid <= 1e-8;
    std::printf("%s\n", ok ? "gates passed" : "gates FAILED (CRLB thresholds or null-space audit)");
    return ok ? 0 : kGateFailed;
}

int cmd_train(const Common& c)
{
    const RunConfig cfg = load(c);
    OutputDir out(cfg);
    const TrialOutcome t = simulate_trial(cfg.scenario, cfg.training, cfg.seed);
    write_training_log((out / "training_log.csv").string(), t.train.log);
    nn::CheckpointMeta meta;
    meta.quant_delta = cfg.training.quant_delta;
    meta.tags["role"] = "encoder";
    meta.tags["kind"] = cfg.training.encoder == EncoderKind::dtte ? "dtte" : "fc";
    nn::save_checkpoint((out / "encoder.json").string(), t.stage1.encoder.network(), meta);
    meta.tags = {{"role", "decoder"}};
    meta.quant_delta = 0.0;
    nn::save_checkpoint((out / "decoder.json").string(), t.stage1.decoder, meta);
    const double resid = null_space_residual(t.scenario.inst, t.train.beams);
    std::printf("epochs %zu, final loss %.6g, decoder accuracy %.4f, feasible %s, null-space residual %.2e\n",
                t.train.log.size(), t.train.log.empty() ? 0.0 : t.train.log.back().loss,
                t.train.decoder_accuracy, t.train.feasible ? "yes" : "no", resid);
    out.done();
    return t.train.feasible && resid <= 1e-8 ? 0 : kGateFailed;
}

int cmd_sweep(const Common& c)
{
    const RunConfig cfg = load(c);
    OutputDir out(cfg);
    const ExperimentResult res = cfg.sweep.axis == SweepAxis::crlb_budget_db
                                     ? crlb_secrecy_tradeoff(cfg.sweep, cfg.scenario, cfg.training, c.threads)
                                     : run_sweep(cfg.sweep, cfg.scenario, cfg.training, c.threads);
    write_results_csv((out / "results.csv").string(), res);
    for (const auto& p : res.points)
        std::printf("%s = %-8g sum secrecy %.4f +- %.4f  worst user %.4f +- %.4f  feasible %s\n",
                    to_string(res.axis).c_str(), p.axis_value, p.sum_secrecy.mean, p.sum_secrecy.std_error,
                    p.worst_user_secrecy.mean, p.worst_user_secrecy.std_error, p.feasible ? "yes" : "no");
    out.done();
    return 0;
}

int cmd_fim_validate(const Common& c)
{
    const RunConfig cfg = load(c);
    OutputDir out(cfg);
    const ArrayGeometry geom = ArrayGeometry::make(4, 4, 2);
    const SensingModel sm = SensingModel::make(geom, SteeringMode::bistatic, deg_to_rad(cfg.scenario.theta_deg),
                                               deg_to_rad(cfg.scenario.phi_deg), cfg.scenario.noise.sigma_s2);
    const CVec v = balanced_probe_beam(sm);
    const double zeta = 160.0 / fim_closed_form(sm, v, 1.0, Angle::theta);
    const PerturbationSet ps =
        PerturbationSet::structured(cfg.training.perturbation_scale, cfg.training.perturbation_count);
    const FimValidationReport rep = fim_validate(sm, v, zeta, ps, cfg.training.discriminator, 5, cfg.seed);

    std::ofstream rpt(out / "fim_validation.txt", std::ios::binary | std::ios::trunc);
    char buf[256];
    std::snprintf(buf, sizeof buf, "closed-form J_theta %.6g J_phi %.6g\n", rep.closed_form(0, 0),
                  rep.closed_form(1, 1));
    rpt << buf;
    for (std::size_t i = 0; i < rep.estimates.size(); ++i) {
        std::snprintf(buf, sizeof buf, "seed %zu: J_theta %.6g J_phi %.6g\n", i, rep.estimates[i](0, 0),
                      rep.estimates[i](1, 1));
        rpt << buf;
    }
    std::snprintf(buf, sizeof buf, "relative error theta %.4f phi %.4f (tolerance %.2f): %s\n", rep.rel_err_theta,
                  rep.rel_err_phi, rep.tolerance, rep.pass ? "PASS" : "FAIL");
    rpt << buf;
    std::cout << buf;
    out.done();
    return rep.pass ? 0 : kGateFailed;
}

int cmd_report(const Common& c, std::vector<std::string> inputs)
{
    RunConfig cfg = load(c);
    if (inputs.empty())
        inputs.push_back((fs::path(cfg.out_dir) / "results.csv").string());
    std::vector<ResultRow> rows;
    for (const auto& in : inputs) {
        auto r = read_results_csv(in);
        rows.insert(rows.end(), r.begin(), r.end());
    }
    fs::create_directories(cfg.out_dir);
    std::ofstream sum(fs::path(cfg.out_dir) / "summary.csv", std::ios::binary | std::ios::trunc);
    write_summary(sum, rows);
    write_summary(std::cout, rows);
    if (!sum)
        throw Error("cannot write summary");
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Secure multicarrier ISAC simulation with sensing-guided friendly jamming"};
    app.require_subcommand(1);
    Common common;
    std::vector<std::string> report_inputs;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", common.config_path, "INI configuration file")->check(CLI::ExistingFile);
        sub->add_option("--seed", common.seed, "master seed (overrides run.seed)");
        sub->add_option("--out", common.out_dir, "output directory (overrides output.directory)");
        sub->add_option("--threads", common.threads, "worker threads for sweeps")->check(CLI::PositiveNumber);
    };
    auto* sim = app.add_subcommand("simulate", "one end-to-end trial");
    auto* train = app.add_subcommand("train", "two-stage training with logs and checkpoints");
    auto* sweep = app.add_subcommand("sweep", "Monte Carlo sweep over one axis");
    auto* fimv = app.add_subcommand("fim-validate", "nonparametric against closed-form Fisher information");
    auto* report = app.add_subcommand("report", "summarize results CSV files");
    for (auto* s : {sim, train, sweep, fimv, report})
        add_common(s);
    report->add_option("inputs", report_inputs, "results CSV files (default: <out>/results.csv)");

    CLI11_PARSE(app, argc, argv);
    try {
        if (sim->parsed())
            return cmd_simulate(common);
        if (train->parsed())
            return cmd_train(common);
        if (sweep->parsed())
            return cmd_sweep(common);
        if (fimv->parsed())
            return cmd_fim_validate(common);
        if (report->parsed())
            return cmd_report(common, report_inputs);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kModuleError;
    }
    return kModuleError;
}
