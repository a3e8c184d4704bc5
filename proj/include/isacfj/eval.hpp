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

#ifndef ISACFJ_EVAL_HPP
#define ISACFJ_EVAL_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "isacfj/rates.hpp"
#include "isacfj/training.hpp"

namespace isacfj {

// ------------------------------------------------------------------------
// BLER
// ------------------------------------------------------------------------

struct BlerResult {
    RVec user;          ///< per-user block error rate
    double eve = 0.0;   ///< Eve's block error rate averaged over the users she decodes
    long long blocks = 0; ///< blocks simulated per user (and per user at Eve)
};

/// Block error rates by Monte Carlo. Every subcarrier carries `trials`
/// blocks of `block_len` QPSK symbols per user; a block errs on any symbol
/// error. Noise at users and Eve is P_max / 10^(snr_db/10). Users equalize
/// their own effective gain; Eve applies an LMMSE combiner that knows the
/// full interference-plus-jamming covariance.
BlerResult bler_montecarlo(const ChannelRealization& ch, const BeamformingSolution& beams, const PowerAllocation& pa,
                           double snr_db, int block_len, int trials, Stream& rng);

// ------------------------------------------------------------------------
// Scenarios
// ------------------------------------------------------------------------

struct ScenarioConfig {
    ArrayGeometry geom = ArrayGeometry::make(16, 4, 2);
    SteeringMode mode = SteeringMode::planar_kronecker;
    int users = 2;
    int n_sub = 64;
    double p_max_db = 30.0;
    double theta_deg = 10.0;
    double phi_deg = 15.0;
    double sigma_theta2 = 0.0;
    double sigma_phi2 = 0.0;
    NoiseSpec noise;
    PowerMode power_mode = PowerMode::average;
    double rho_csi = 0.0;
    double frac_comm_only = 0.0;
    double jam_fraction_init = 0.2;
    ImpairmentParams impairments;
    int eve_draws = 8;
    int pn_draws = 8;
    int block_len = 64;
    int bler_blocks = 20; ///< blocks per user and subcarrier; 0 skips BLER
    bool fj_enabled = true;
    RateOptions rates;

    void validate() const;
};

/// One random draw of the scenario: channels, CSI, angles and the sampled
/// eavesdropper sets. Subcarrier n always uses the same substream, so the
/// first carriers of a larger instance coincide with a smaller one.
struct Scenario {
    ProblemInstance inst;
    std::vector<std::vector<CMat>> eve_sets;
};

Scenario build_scenario(const ScenarioConfig& sc, Stream& rng);

struct TrialRecord {
    double sum_secrecy = 0.0;
    double worst_user_secrecy = 0.0;
    double bler_user_mean = 0.0;
    double bler_eve = 0.0;
    double crlb_theta_db = 0.0;
    double crlb_phi_db = 0.0;
    bool feasible = false;
};

/// Rates, BLER and CRLB of a trained solution on its scenario. Secrecy is
/// averaged over `pn_draws` phase-noise draws when phase noise is set.
TrialRecord evaluate_solution(const ScenarioConfig& sc, const Scenario& s, const TrainResult& tr, Stream& rng);

struct TrialOutcome {
    Scenario scenario;
    Stage1Result stage1;
    TrainResult train;
    TrialRecord record;
};

/// One end-to-end trial: draw, two-stage training and evaluation, all
/// from substreams of `seed`.
TrialOutcome simulate_trial(const ScenarioConfig& sc, const TrainConfig& cfg, std::uint64_t seed);

/// Sum secrecy against each sampled eavesdropper set separately.
std::vector<double> secrecy_per_eve_set(const Scenario& s, const BeamformingSolution& beams,
                                        const RateOptions& opt = {});

double median(std::vector<double> values);

// ------------------------------------------------------------------------
// Sweeps
// ------------------------------------------------------------------------

enum class SweepAxis { snr_db, rho_csi, crlb_budget_db, pn_variance, frac_comm_only, n_subcarriers };

std::string to_string(SweepAxis axis);
SweepAxis sweep_axis_from_string(const std::string& name);

struct SweepSpec {
    SweepAxis axis = SweepAxis::rho_csi;
    std::vector<double> points;
    int trials = 1;
    std::uint64_t seed = 1;
    std::string experiment_id = "sweep";

    void validate() const;
};

struct MetricSummary {
    double mean = 0.0;
    double std_error = 0.0; ///< sample std / sqrt(count); 0 for a single trial
    int count = 0;
    std::vector<double> values;

    static MetricSummary from(std::vector<double> values);
};

struct PointResult {
    double axis_value = 0.0;
    std::vector<std::uint64_t> seeds;
    std::vector<TrialRecord> trials;
    MetricSummary sum_secrecy;
    MetricSummary worst_user_secrecy;
    MetricSummary bler_user;
    MetricSummary bler_eve;
    MetricSummary crlb_theta_db;
    MetricSummary crlb_phi_db;
    bool feasible = false; ///< at least one trial met the CRLB thresholds
};

struct ExperimentResult {
    std::string experiment_id;
    SweepAxis axis = SweepAxis::rho_csi;
    std::vector<PointResult> points;
};

/// Seed of one trial. Every point of a sweep shares it, so points are
/// compared on the same draws.
std::uint64_t trial_seed(std::uint64_t master, SweepAxis axis, int trial);

/// Runs every (point, trial) pair. Trials run on `threads` workers; the
/// result does not depend on the thread count.
ExperimentResult run_sweep(const SweepSpec& spec, const ScenarioConfig& sc, const TrainConfig& cfg,
                           int threads = 1);

/// Sweep over CRLB budgets (dB, both angles); +inf means unbounded.
ExperimentResult crlb_secrecy_tradeoff(const SweepSpec& spec, const ScenarioConfig& sc, const TrainConfig& cfg,
                                       int threads = 1);

inline const char* kResultsHeader = "experiment_id,axis_name,axis_value,trial,seed,sum_secrecy,worst_user_secrecy,"
                                    "bler_user_mean,bler_eve,crlb_theta_db,crlb_phi_db,feasible";

void write_results_csv(std::ostream& out, const ExperimentResult& res, bool header = true);
void write_results_csv(const std::string& path, const ExperimentResult& res);

/// Parsed row of a results CSV.
struct ResultRow {
    std::string experiment_id;
    std::string axis_name;
    double axis_value = 0.0;
    int trial = 0;
    std::uint64_t seed = 0;
    TrialRecord record;
};

std::vector<ResultRow> read_results_csv(const std::string& path);

/// Mean and standard error per (experiment, axis, value), one line each.
void write_summary(std::ostream& out, const std::vector<ResultRow>& rows);

} // namespace isacfj

#endif
