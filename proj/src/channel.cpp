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

#include "isacfj/channel.hpp"

#include <cmath>
#include <numbers>

namespace isacfj {

namespace {

constexpr double kPi = std::numbers::pi;

void check_angles(double theta, double phi)
{
    if (!(std::abs(theta) < kPi / 2) || !(std::abs(phi) < kPi / 2))
        throw Error("steering: angles must lie in (-pi/2, pi/2)");
}

// Spatial frequencies of the planar array and their angle derivatives.
struct SpatialFreq {
    double psi_x, psi_y;
    double dpsi_x, dpsi_y;
};

SpatialFreq spatial_freq(double spacing, double theta, double phi, Angle which)
{
    const double k = 2.0 * kPi * spacing;
    SpatialFreq f{};
    f.psi_x = k * std::sin(theta) * std::cos(phi);
    f.psi_y = k * std::sin(phi);
    if (which == Angle::theta) {
        f.dpsi_x = k * std::cos(theta) * std::cos(phi);
        f.dpsi_y = 0.0;
    } else {
        f.dpsi_x = -k * std::sin(theta) * std::sin(phi);
        f.dpsi_y = k * std::cos(phi);
    }
    return f;
}

double offset(int idx, int count, PhaseReference ref)
{
    return ref == PhaseReference::centroid ? idx - 0.5 * (count - 1) : static_cast<double>(idx);
}

// Transmit response a (length N_t) and its derivative, Kronecker ordered.
void tx_response(const ArrayGeometry& g, const SpatialFreq& f, CVec& a, CVec& da)
{
    a.resize(g.n_tx);
    da.resize(g.n_tx);
    for (int ix = 0; ix < g.grid_x; ++ix) {
        const double px = offset(ix, g.grid_x, g.phase_ref);
        for (int iy = 0; iy < g.grid_y; ++iy) {
            const double py = offset(iy, g.grid_y, g.phase_ref);
            const int i = ix * g.grid_y + iy;
            a(i) = std::polar(1.0, px * f.psi_x + py * f.psi_y);
            da(i) = cplx(0.0, px * f.dpsi_x + py * f.dpsi_y) * a(i);
        }
    }
}

// Receive response b (uniform line along x, length N_r) and its derivative.
void rx_response(const ArrayGeometry& g, const SpatialFreq& f, CVec& b, CVec& db)
{
    b.resize(g.n_rx);
    db.resize(g.n_rx);
    for (int m = 0; m < g.n_rx; ++m) {
        const double p = offset(m, g.n_rx, g.phase_ref);
        b(m) = std::polar(1.0, p * f.psi_x);
        db(m) = cplx(0.0, p * f.dpsi_x) * b(m);
    }
}

} // namespace

std::pair<int, int> planar_grid(int n)
{
    if (n < 1)
        throw Error("planar_grid: count must be positive");
    int x = static_cast<int>(std::sqrt(static_cast<double>(n)));
    while (x > 1 && n % x != 0)
        --x;
    return {x, n / x};
}

ArrayGeometry ArrayGeometry::make(int n_tx, int n_rx, int n_eve, double spacing)
{
    ArrayGeometry g;
    g.n_tx = n_tx;
    g.n_rx = n_rx;
    g.n_eve = n_eve;
    g.spacing = spacing;
    const auto [x, y] = planar_grid(n_tx);
    g.grid_x = x;
    g.grid_y = y;
    g.validate();
    return g;
}

void ArrayGeometry::validate() const
{
    if (n_tx < 1 || n_rx < 1 || n_eve < 1)
        throw Error("geometry: antenna counts must be at least 1");
    if (!(spacing > 0.0))
        throw Error("geometry: element spacing must be positive");
    if (grid_x < 1 || grid_y < 1 || grid_x * grid_y != n_tx)
        throw Error("geometry: transmit grid " + std::to_string(grid_x) + "x" + std::to_string(grid_y) +
                    " does not factor n_tx = " + std::to_string(n_tx));
}

void ChannelRealization::validate() const
{
    if (!(sigma_c2 > 0.0) || !(sigma_e2 > 0.0) || !(sigma_s2 > 0.0))
        throw Error("channel: noise powers must be positive");
    if (h_users.empty() || h_users.size() != h_eve.size())
        throw Error("channel: subcarrier lists are empty or inconsistent");
    for (std::size_t n = 0; n < h_users.size(); ++n) {
        if (h_users[n].rows() != h_users[0].rows() || h_users[n].cols() != h_users[0].cols() ||
            h_eve[n].rows() != h_eve[0].rows() || h_eve[n].cols() != h_eve[0].cols())
            throw Error("channel: per-subcarrier shapes differ");
        if (h_eve[n].rows() != h_users[n].cols())
            throw Error("channel: eavesdropper channel has the wrong transmit dimension");
    }
}

ChannelRealization gen_rayleigh(const ArrayGeometry& geom, int users, int n_sub, const NoiseSpec& noise,
                                Stream& rng)
{
    geom.validate();
    if (users < 1 || n_sub < 1)
        throw Error("gen_rayleigh: user and subcarrier counts must be at least 1");
    ChannelRealization ch;
    ch.sigma_c2 = noise.sigma_c2;
    ch.sigma_e2 = noise.sigma_e2;
    ch.sigma_s2 = noise.sigma_s2;
    ch.alpha = noise.alpha;
    ch.h_users.reserve(n_sub);
    ch.h_eve.reserve(n_sub);
    for (int n = 0; n < n_sub; ++n)
        ch.h_users.push_back(random_cn(users, geom.n_tx, rng));
    for (int n = 0; n < n_sub; ++n)
        ch.h_eve.push_back(random_cn(geom.n_tx, geom.n_eve, rng));
    ch.validate();
    return ch;
}

std::vector<CMat> gen_eve_channels(const ArrayGeometry& geom, int n_sub, Stream& rng)
{
    std::vector<CMat> out;
    out.reserve(n_sub);
    for (int n = 0; n < n_sub; ++n)
        out.push_back(random_cn(geom.n_tx, geom.n_eve, rng));
    return out;
}

CsiEstimate apply_csi_error(const ChannelRealization& ch, double rho, Stream& rng)
{
    if (!(rho >= 0.0))
        throw Error("apply_csi_error: error variance must be non-negative");
    CsiEstimate est;
    est.rho_csi = rho;
    est.h_hat.reserve(ch.h_users.size());
    est.delta_h.reserve(ch.h_users.size());
    for (const auto& h : ch.h_users) {
        // Unit draws scaled by sqrt(rho): equal seeds give nested errors across rho.
        CMat delta = std::sqrt(rho) * random_cn(static_cast<int>(h.rows()), static_cast<int>(h.cols()), rng);
        est.h_hat.push_back(h + delta);
        est.delta_h.push_back(std::move(delta));
    }
    return est;
}

CMat steering_matrix(const ArrayGeometry& geom, SteeringMode mode, double theta, double phi)
{
    geom.validate();
    check_angles(theta, phi);
    const SpatialFreq f = spatial_freq(geom.spacing, theta, phi, Angle::theta);
    CVec a, da;
    tx_response(geom, f, a, da);
    if (mode == SteeringMode::planar_kronecker)
        return a.adjoint();
    CVec b, db;
    rx_response(geom, f, b, db);
    return b * a.adjoint();
}

CMat steering_derivative(const ArrayGeometry& geom, SteeringMode mode, double theta, double phi, Angle which)
{
    geom.validate();
    check_angles(theta, phi);
    const SpatialFreq f = spatial_freq(geom.spacing, theta, phi, which);
    CVec a, da;
    tx_response(geom, f, a, da);
    if (mode == SteeringMode::planar_kronecker)
        return da.adjoint();
    CVec b, db;
    rx_response(geom, f, b, db);
    return db * a.adjoint() + b * da.adjoint();
}

AngleState perturb_angles(const AngleState& ang, Stream& rng)
{
    if (!(ang.sigma_theta2 >= 0.0) || !(ang.sigma_phi2 >= 0.0))
        throw Error("perturb_angles: variances must be non-negative");
    AngleState out = ang;
    out.theta_hat = ang.theta + std::sqrt(ang.sigma_theta2) * rng.normal();
    out.phi_hat = ang.phi + std::sqrt(ang.sigma_phi2) * rng.normal();
    return out;
}

double deg_to_rad(double deg) { return deg * kPi / 180.0; }
double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

} // namespace isacfj
