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

#ifndef ISACFJ_CHANNEL_HPP
#define ISACFJ_CHANNEL_HPP

#include <utility>
#include <vector>

#include "isacfj/numerics.hpp"

namespace isacfj {

enum class SteeringMode {
    planar_kronecker, ///< 1 x N_t row a^H with a = a_x (x) a_y
    bistatic,         ///< N_r x N_t outer product b a^H
};

enum class PhaseReference { first_element, centroid };

enum class Angle { theta, phi };

/// Near-square factorization n = x * y with x <= y.
std::pair<int, int> planar_grid(int n);

struct ArrayGeometry {
    int n_tx = 16;
    int n_rx = 4;
    int n_eve = 2;
    double spacing = 0.5; // wavelengths
    int grid_x = 4;
    int grid_y = 4;
    PhaseReference phase_ref = PhaseReference::first_element;

    /// Geometry with a near-square planar transmit grid.
    static ArrayGeometry make(int n_tx, int n_rx, int n_eve, double spacing = 0.5);

    void validate() const;
};

struct NoiseSpec {
    double sigma_c2 = 1.0;
    double sigma_e2 = 1.0;
    double sigma_s2 = 1.0;
    cplx alpha{1.0, 0.0};
};

/// Per-subcarrier legitimate and eavesdropper channels.
/// h_users[n] is K x N_t with row k equal to h_k^H; h_eve[n] is N_t x N_e.
struct ChannelRealization {
    std::vector<CMat> h_users;
    std::vector<CMat> h_eve;
    double sigma_c2 = 1.0;
    double sigma_e2 = 1.0;
    double sigma_s2 = 1.0;
    cplx alpha{1.0, 0.0};

    int n_sub() const { return static_cast<int>(h_users.size()); }
    int users() const { return h_users.empty() ? 0 : static_cast<int>(h_users.front().rows()); }
    int n_tx() const { return h_users.empty() ? 0 : static_cast<int>(h_users.front().cols()); }
    int n_eve() const { return h_eve.empty() ? 0 : static_cast<int>(h_eve.front().cols()); }

    void validate() const;
};

struct CsiEstimate {
    std::vector<CMat> h_hat;
    std::vector<CMat> delta_h;
    double rho_csi = 0.0;
};

struct AngleState {
    double theta = 0.0;
    double phi = 0.0;
    double theta_hat = 0.0;
    double phi_hat = 0.0;
    double sigma_theta2 = 0.0;
    double sigma_phi2 = 0.0;

    static AngleState exact(double theta, double phi, double sigma_theta2 = 0.0, double sigma_phi2 = 0.0)
    {
        return {theta, phi, theta, phi, sigma_theta2, sigma_phi2};
    }
};

/// i.i.d. CN(0,1) Rayleigh channels for K users and the eavesdropper.
ChannelRealization gen_rayleigh(const ArrayGeometry& geom, int users, int n_sub, const NoiseSpec& noise,
                                Stream& rng);

/// Fresh eavesdropper channels (N_t x N_e per subcarrier).
std::vector<CMat> gen_eve_channels(const ArrayGeometry& geom, int n_sub, Stream& rng);

/// Adds CN(0, rho) estimation error, drawn independently per subcarrier.
CsiEstimate apply_csi_error(const ChannelRealization& ch, double rho, Stream& rng);

CMat steering_matrix(const ArrayGeometry& geom, SteeringMode mode, double theta, double phi);

/// Exact derivative of steering_matrix with respect to one angle.
CMat steering_derivative(const ArrayGeometry& geom, SteeringMode mode, double theta, double phi, Angle which);

/// Noisy angle estimates: theta_hat = theta + N(0, sigma_theta2), same for phi.
AngleState perturb_angles(const AngleState& ang, Stream& rng);

double deg_to_rad(double deg);
double rad_to_deg(double rad);

} // namespace isacfj

#endif
