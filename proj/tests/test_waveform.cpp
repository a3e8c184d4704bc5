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

#include <cmath>
#include <numbers>

#include "isacfj/waveform.hpp"

using namespace isacfj;
using Catch::Approx;

namespace {

BeamformingSolution random_beams(int nt, int users, int n_sub, Stream& rng)
{
    BeamformingSolution b;
    for (int n = 0; n < n_sub; ++n) {
        CMat w = random_cn(nt, users, rng);
        w.colwise().normalize();
        b.user_beams.push_back(w);
        b.fj_beams.push_back(random_cn(nt, 1, rng).col(0).normalized());
    }
    return b;
}

PowerAllocation random_pa(int users, int n_sub, double p_max, Stream& rng)
{
    PowerAllocation pa;
    pa.p_max = p_max;
    pa.comm_power = RMat(users, n_sub);
    pa.jam_power = RVec(n_sub);
    for (int n = 0; n < n_sub; ++n) {
        for (int k = 0; k < users; ++k)
            pa.comm_power(k, n) = rng.uniform() * p_max;
        pa.jam_power(n) = rng.uniform() * p_max;
    }
    return pa;
}

} // namespace

TEST_CASE("uniform allocation splits each carrier budget")
{
    const auto pa = PowerAllocation::uniform(2, 4, 100.0, 0.2, PowerMode::average);
    CHECK(pa.comm_power(1, 3) == Approx(40.0));
    CHECK(pa.jam_power(0) == Approx(20.0));
    const auto ps = PowerAllocation::uniform(2, 4, 100.0, 0.5, PowerMode::per_subcarrier);
    CHECK(ps.comm_power.col(0).sum() + ps.jam_power(0) == Approx(25.0));
    CHECK_THROWS_AS(PowerAllocation::uniform(2, 4, 100.0, 1.5, PowerMode::average), Error);
    CHECK_THROWS_AS(PowerAllocation::uniform(2, 4, 0.0, 0.5, PowerMode::average), Error);
}

TEST_CASE("assemble_tx examples")
{
    Stream rng(1);
    SECTION("unit case")
    {
        BeamformingSolution b;
        b.user_beams.push_back(CMat::Identity(3, 1));
        b.fj_beams.push_back(CVec::Unit(3, 2));
        PowerAllocation pa;
        pa.comm_power = RMat::Ones(1, 1);
        pa.jam_power = RVec::Zero(1);
        TransmitFrame f = draw_frame(1, 1, 16, rng);
        f.symbols(0, 0) = 1.0;
        f.jam(0) = cplx(5.0, 1.0);
        const auto out = assemble_tx(b, pa, f);
        CHECK((out.x.col(0) - CVec::Unit(3, 0)).norm() == 0.0);
    }
    SECTION("zero jamming gives the communication signal alone")
    {
        auto b = random_beams(8, 2, 4, rng);
        auto pa = random_pa(2, 4, 10.0, rng);
        pa.jam_power.setZero();
        const auto f = assemble_tx(b, pa, draw_frame(2, 4, 16, rng));
        for (int n = 0; n < 4; ++n) {
            CVec want = CVec::Zero(8);
            for (int k = 0; k < 2; ++k)
                want += std::sqrt(pa.comm_power(k, n)) * f.symbols(k, n) * b.user_beams[n].col(k);
            CHECK((f.x.col(n) - want).norm() <= 1e-13);
        }
    }
    SECTION("random instance against an elementwise recomputation")
    {
        auto b = random_beams(6, 3, 5, rng);
        auto pa = random_pa(3, 5, 10.0, rng);
        const auto f = assemble_tx(b, pa, draw_frame(3, 5, 16, rng));
        for (int n = 0; n < 5; ++n)
            for (int i = 0; i < 6; ++i) {
                cplx want = std::sqrt(pa.jam_power(n)) * b.fj_beams[n](i) * f.jam(n);
                for (int k = 0; k < 3; ++k)
                    want += std::sqrt(pa.comm_power(k, n)) * b.user_beams[n](i, k) * f.symbols(k, n);
                REQUIRE(std::abs(f.x(i, n) - want) <= 1e-12);
            }
    }
    SECTION("shape mismatch is an error")
    {
        auto b = random_beams(6, 2, 3, rng);
        auto pa = random_pa(2, 3, 10.0, rng);
        CHECK_THROWS_AS(assemble_tx(b, pa, draw_frame(2, 4, 16, rng)), Error);
    }
}

TEST_CASE("assemble_tx is linear in symbols and jamming samples")
{
    Stream rng(2);
    auto b = random_beams(4, 2, 3, rng);
    auto pa = random_pa(2, 3, 5.0, rng);
    auto f1 = draw_frame(2, 3, 16, rng), f2 = draw_frame(2, 3, 16, rng);
    TransmitFrame sum = f1;
    const cplx a(0.7, -1.3);
    sum.symbols = f1.symbols + a * f2.symbols;
    sum.jam = f1.jam + a * f2.jam;
    const CMat x = assemble_tx(b, pa, sum).x;
    const CMat y = assemble_tx(b, pa, f1).x + a * assemble_tx(b, pa, f2).x;
    CHECK((x - y).norm() <= 1e-12);
}

TEST_CASE("enforce_power")
{
    Stream rng(3);
    auto b = random_beams(4, 2, 64, rng);
    const double p_max = from_db(30.0);
    SECTION("feasible allocation unchanged")
    {
        const auto pa = PowerAllocation::uniform(2, 64, p_max, 0.3, PowerMode::average);
        const auto out = enforce_power(pa, b, PowerMode::average);
        CHECK(out.comm_power == pa.comm_power);
        CHECK(out.jam_power == pa.jam_power);
    }
    SECTION("twice the budget is halved and becomes tight")
    {
        auto pa = PowerAllocation::uniform(2, 64, p_max, 0.3, PowerMode::average);
        pa.comm_power *= 2.0;
        pa.jam_power *= 2.0;
        const auto out = enforce_power(pa, b, PowerMode::average);
        CHECK((out.comm_power - pa.comm_power / 2.0).norm() <= 1e-9);
        CHECK((out.jam_power - pa.jam_power / 2.0).norm() <= 1e-9);
        double total = 0.0;
        for (int n = 0; n < 64; ++n)
            total += subcarrier_power(b, out, n);
        CHECK(total / 64 == Approx(p_max).epsilon(1e-12));
    }
    SECTION("per-subcarrier mode holds on every carrier")
    {
        auto pa = random_pa(2, 64, p_max, rng);
        const auto out = enforce_power(pa, b, PowerMode::per_subcarrier);
        CHECK(power_feasible(b, out, PowerMode::per_subcarrier));
        for (int n = 0; n < 64; ++n) {
            REQUIRE(subcarrier_power(b, out, n) <= p_max / 64 * (1 + 1e-12));
            // never increases, ratios preserved on each carrier
            REQUIRE(out.jam_power(n) <= pa.jam_power(n));
            const double s = out.jam_power(n) / pa.jam_power(n);
            for (int k = 0; k < 2; ++k)
                REQUIRE(out.comm_power(k, n) == Approx(s * pa.comm_power(k, n)).epsilon(1e-12));
        }
    }
}

TEST_CASE("QPSK mapping")
{
    for (int m = 0; m < 4; ++m) {
        const cplx s = qpsk_map(m);
        CHECK(std::norm(s) == Approx(1.0).epsilon(1e-15));
        CHECK(qpsk_demap(s) == m);
    }
    // Gray: neighbours differ in one bit
    CHECK(qpsk_demap(cplx(1, 1)) == 0);
    CHECK(qpsk_demap(cplx(-1, 1)) == 1);
    CHECK(qpsk_demap(cplx(1, -1)) == 2);
    CHECK_THROWS_AS(qpsk_map(4), Error);
}

TEST_CASE("QPSK symbol error rate over AWGN at 10 dB")
{
    Stream rng(4);
    const double es_n0 = from_db(10.0);
    const int n = 1000000;
    long long errors = 0;
    for (int i = 0; i < n; ++i) {
        const int m = static_cast<int>(rng.below(4));
        errors += qpsk_demap(qpsk_map(m) + rng.cnormal(1.0 / es_n0)) != m;
    }
    // independent closed form: 1 - (1 - Q(sqrt(Es/N0)))^2
    const double q = 0.5 * std::erfc(std::sqrt(es_n0) / std::sqrt(2.0));
    const double p = 1.0 - (1.0 - q) * (1.0 - q);
    CHECK(qpsk_ser(es_n0) == Approx(p).epsilon(1e-11));
    const double sigma = std::sqrt(p * (1 - p) / n);
    CHECK(std::abs(static_cast<double>(errors) / n - p) <= 3.0 * sigma);
}

TEST_CASE("radar echo")
{
    Stream rng(5);
    ChannelRealization ch;
    ch.sigma_s2 = 1e-300;
    auto b = random_beams(4, 2, 6, rng);
    auto pa = random_pa(2, 6, 3.0, rng);
    const auto f = assemble_tx(b, pa, draw_frame(2, 6, 16, rng));
    SECTION("noiseless identity")
    {
        const CMat y = radar_echo(ch, CMat::Identity(4, 4), f, rng);
        CHECK((y - f.x).norm() <= 1e-12);
    }
    SECTION("mean over noise draws and per-carrier equivalence")
    {
        ch.sigma_s2 = 1.0;
        ch.alpha = cplx(0.6, 0.8);
        const CMat g = steering_matrix(ArrayGeometry::make(4, 3, 2), SteeringMode::bistatic, 0.2, 0.3);
        CMat mean = CMat::Zero(3, 6);
        const int draws = 10000;
        for (int i = 0; i < draws; ++i)
            mean += radar_echo(ch, g, f, rng);
        mean /= draws;
        const CMat want = ch.alpha * g * f.x;
        // per-entry standard error is 1/sqrt(draws)
        CHECK((mean - want).cwiseAbs().maxCoeff() <= 5.0 / std::sqrt(draws));
        for (int n = 0; n < 6; ++n)
            CHECK((want.col(n) - ch.alpha * g * f.x.col(n)).norm() <= 1e-13);
    }
    SECTION("dimension mismatch")
    {
        CHECK_THROWS_AS(radar_echo(ch, CMat::Identity(3, 3), f, rng), Error);
    }
}

TEST_CASE("impairment coefficients")
{
    const auto ideal = ImpairmentParams::make(0.0, 0.0, 0.0);
    CHECK(ideal.mu == cplx(1.0, 0.0));
    CHECK(ideal.nu == cplx(0.0, 0.0));
    const auto amp = ImpairmentParams::make(0.0, 0.07, 0.0);
    CHECK(amp.mu == cplx(1.0, 0.0));
    CHECK(amp.nu == cplx(0.07, 0.0));
    // eps = 0.02, 1 degree; values evaluated by hand from the widely-linear formulas
    const auto f12 = ImpairmentParams::make(0.0, 0.02, std::numbers::pi / 180.0);
    CHECK(f12.mu.real() == Approx(0.99996192306417).epsilon(1e-13));
    CHECK(f12.mu.imag() == Approx(0.02 * 0.00872653549837).epsilon(1e-11));
    CHECK(f12.nu.real() == Approx(0.02 * 0.99996192306417).epsilon(1e-13));
    CHECK(f12.nu.imag() == Approx(-0.00872653549837).epsilon(1e-11));
    CHECK_THROWS_AS(ImpairmentParams::make(-1.0, 0.0, 0.0), Error);
}

TEST_CASE("I/Q imbalance")
{
    Stream rng(6);
    const CVec x = random_cn(32, 1, rng).col(0);
    CHECK(apply_iq_imbalance(x, ImpairmentParams::make(0, 0, 0)) == x);
    const auto imp = ImpairmentParams::make(0.0, 0.05, 0.0);
    CHECK((apply_iq_imbalance(x, imp) - (x + 0.05 * x.conjugate())).norm() <= 1e-14);

    // pure tone: image to direct power ratio is |nu|^2 / |mu|^2
    const auto imp2 = ImpairmentParams::make(0.0, 0.1, 0.2);
    const int len = 256;
    CVec tone(len);
    for (int t = 0; t < len; ++t)
        tone(t) = std::polar(1.0, 2.0 * std::numbers::pi * 5.0 * t / len);
    const CVec y = apply_iq_imbalance(tone, imp2);
    const cplx direct = tone.dot(y) / static_cast<double>(len);
    const cplx image = tone.conjugate().dot(y) / static_cast<double>(len);
    CHECK(std::norm(image) / std::norm(direct) == Approx(std::norm(imp2.nu) / std::norm(imp2.mu)).epsilon(1e-10));
}

TEST_CASE("phase noise")
{
    Stream rng(7);
    const CVec x = random_cn(50, 1, rng).col(0);
    CHECK(apply_phase_noise(x, ImpairmentParams::make(0, 0, 0), rng) == x);
    const auto imp = ImpairmentParams::make(0.1, 0, 0);
    const CVec y = apply_phase_noise(x, imp, rng);
    for (int i = 0; i < 50; ++i)
        REQUIRE(std::abs(y(i)) == Approx(std::abs(x(i))).epsilon(1e-14));
    const CMat m = apply_phase_noise_rows(random_cn(3, 20, rng), imp, rng);
    CHECK(m.rows() == 3);

    // Wiener law: Var[phi_n] = n sigma^2 for the n-th sample (1-based)
    const int walks = 10000, len = 20;
    RVec s2 = RVec::Zero(len);
    for (int w = 0; w < walks; ++w)
        s2 += wiener_phase(len, 0.05, rng).cwiseAbs2();
    for (int n : {1, 5, 10, 20})
        CHECK(s2(n - 1) / walks == Approx(n * 0.05).epsilon(0.05));
}
