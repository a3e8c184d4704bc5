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

#include <catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "isacfj/config.hpp"

using namespace isacfj;
namespace fs = std::filesystem;

namespace {

std::string error_of(const std::string& text)
{
    try {
        parse_config_string(text, "t.ini");
    } catch (const Error& e) {
        return e.what();
    }
    return "";
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name)
{
    const fs::path d = fs::temp_directory_path() / ("isacfj_cfg_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

int run_cli(const std::string& args)
{
    const std::string cmd = std::string(ISACFJ_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const char* kSmall = "[geometry]\n"
                     "n_tx = 8\n"
                     "[scenario]\n"
                     "subcarriers = 2\n"
                     "frac_comm_only = 0\n"
                     "eve_draws = 2\n"
                     "[bler]\n"
                     "blocks = 2\n"
                     "[training]\n"
                     "epochs_stage1 = 3\n"
                     "steps_per_epoch = 1\n"
                     "iters_stage2 = 2\n"
                     "candidate_count = 2\n";

} // namespace

TEST_CASE("empty configuration gives the reference setup", "[config]")
{
    const RunConfig c = parse_config_string("");
    CHECK(c.scenario.geom.n_tx == 16);
    CHECK(c.scenario.geom.n_rx == 4);
    CHECK(c.scenario.geom.n_eve == 2);
    CHECK(c.scenario.users == 2);
    CHECK(c.scenario.n_sub == 64);
    CHECK(c.scenario.frac_comm_only == 0.5);
    CHECK(c.scenario.p_max_db == 30.0);
    CHECK(c.scenario.theta_deg == 10.0);
    CHECK(c.scenario.phi_deg == 15.0);
    CHECK(c.scenario.noise.sigma_c2 == 1.0);
    CHECK(c.training.step_size == 1e-3);
    CHECK(c.training.batch == 128);
    CHECK(c.training.crlb0_theta == Catch::Approx(1e-3).epsilon(1e-12));
    CHECK(c.training.crlb0_phi == Catch::Approx(1e-3).epsilon(1e-12));
    CHECK(c.training.encoder == EncoderKind::dtte);
    CHECK(c.training.tt_rank == 8);
    CHECK(c.seed == 1);
}

TEST_CASE("overrides change only their key", "[config]")
{
    const RunConfig base = parse_config_string("");
    const RunConfig c = parse_config_string("[geometry]\nn_tx = 8  # smaller array\n"
                                            "scenario.rho_csi = 0.1\n"
                                            "[training]\ncrlb0_theta_db = -20\nencoder = fc\n");
    CHECK(c.scenario.geom.n_tx == 8);
    CHECK(c.scenario.geom.grid_x * c.scenario.geom.grid_y == 8);
    CHECK(c.scenario.rho_csi == 0.1);
    CHECK(c.training.crlb0_theta == Catch::Approx(1e-2).epsilon(1e-12));
    CHECK(c.training.crlb0_phi == base.training.crlb0_phi);
    CHECK(c.training.encoder == EncoderKind::fc);
    CHECK(c.scenario.n_sub == base.scenario.n_sub);
    CHECK(parse_config_string("[training]\ncrlb0_theta_db = inf\n").training.crlb0_theta ==
          std::numeric_limits<double>::infinity());
}

TEST_CASE("configuration errors name the key and line", "[config]")
{
    const std::string typo = error_of("[scenario]\nusers = 2\nsubcarrier = 8\n");
    CHECK(typo.find("t.ini:3") != std::string::npos);
    CHECK(typo.find("scenario.subcarrier") != std::string::npos);

    CHECK(error_of("[scenario]\nusers = 2\nusers = 3\n").find("set twice") != std::string::npos);
    CHECK(error_of("[scenario]\nusers = 2\nscenario.users = 3\n").find("t.ini:3") != std::string::npos);
    CHECK(error_of("[scenarios]\n").find("unknown section 'scenarios'") != std::string::npos);
    CHECK(error_of("users = 2\n").find("outside any section") != std::string::npos);
    CHECK(error_of("[scenario]\nusers = two\n").find("scenario.users") != std::string::npos);
    CHECK(error_of("[scenario]\nusers =\n").find("no value") != std::string::npos);
    CHECK(error_of("[training]\nencoder = cnn\n").find("encoder") != std::string::npos);
    CHECK(error_of("[scenario\n").find("malformed") != std::string::npos);
    CHECK(error_of("[run]\nseed = -1\n").find("run.seed") != std::string::npos);
    CHECK_FALSE(error_of("[scenario]\nusers = 20\n").empty());
    CHECK_THROWS_AS(parse_config("/nonexistent/run.ini"), Error);
}

TEST_CASE("resolved configuration reads back identically", "[config]")
{
    const RunConfig c = parse_config_string(std::string(kSmall) + "[impairments]\ndtheta_iq_deg = 1.5\n"
                                                                  "[sweep]\naxis = crlb_budget_db\npoints = -20, inf\n");
    const std::string once = resolved_config(c);
    const RunConfig back = parse_config_string(once);
    CHECK(resolved_config(back) == once);
    CHECK(back.sweep.axis == SweepAxis::crlb_budget_db);
    CHECK(back.sweep.points.size() == 2);
    CHECK(back.scenario.impairments.dtheta_iq == c.scenario.impairments.dtheta_iq);

    // Every accepted key appears in the snapshot.
    for (const auto& key : config_keys()) {
        const auto dot = key.find('.');
        CHECK(once.find("\n" + key.substr(dot + 1) + " = ") != std::string::npos);
    }
}

TEST_CASE("command line: bad configuration exits with a module error", "[config][cli]")
{
    const fs::path d = scratch("bad");
    std::ofstream(d / "bad.ini") << "[scenario]\nsubcarrier = 8\n";
    CHECK(run_cli("simulate --config " + (d / "bad.ini").string() + " --out " + (d / "out").string()) == 2);
    CHECK(run_cli("no-such-command") != 0);
    fs::remove_all(d);
}

TEST_CASE("command line: simulate and train are reproducible", "[config][cli]")
{
    const fs::path d = scratch("sim");
    std::ofstream(d / "small.ini") << kSmall;
    const std::string conf = " --config " + (d / "small.ini").string();
    const int a = run_cli("simulate" + conf + " --seed 4 --out " + (d / "a").string());
    const int b = run_cli("simulate" + conf + " --seed 4 --out " + (d / "b").string());
    CHECK((a == 0 || a == 3));
    CHECK(a == b);
    CHECK(fs::exists(d / "a" / "resolved.ini"));
    CHECK_FALSE(fs::exists(d / "a" / "INCOMPLETE"));
    CHECK(slurp(d / "a" / "results.csv") == slurp(d / "b" / "results.csv"));
    CHECK(slurp(d / "a" / "training_log.csv") == slurp(d / "b" / "training_log.csv"));
    CHECK(parse_config(( d / "a" / "resolved.ini").string()).seed == 4);

    const int t1 = run_cli("train" + conf + " --seed 4 --out " + (d / "t1").string());
    const int t2 = run_cli("train" + conf + " --seed 4 --out " + (d / "t2").string());
    CHECK(t1 == t2);
    CHECK(slurp(d / "t1" / "encoder.json") == slurp(d / "t2" / "encoder.json"));
    CHECK_FALSE(slurp(d / "t1" / "decoder.json").empty());

    std::ofstream(d / "sweep.ini") << kSmall << "[sweep]\naxis = rho_csi\npoints = 0, 0.1\ntrials = 2\n";
    CHECK(run_cli("sweep --config " + (d / "sweep.ini").string() + " --threads 2 --out " + (d / "s").string()) == 0);
    CHECK(run_cli("report --out " + (d / "s").string()) == 0);
    CHECK(fs::exists(d / "s" / "summary.csv"));
    fs::remove_all(d);
}

TEST_CASE("command line: Fisher validation", "[config][cli]")
{
    const fs::path d = scratch("fim");
    CHECK(run_cli("fim-validate --out " + d.string()) == 0);
    const std::string rep = slurp(d / "fim_validation.txt");
    CHECK(rep.find("PASS") != std::string::npos);
    fs::remove_all(d);
}
