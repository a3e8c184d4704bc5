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

#ifndef ISACFJ_NUMERICS_HPP
#define ISACFJ_NUMERICS_HPP

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>

#include "isacfj/rng.hpp"

namespace isacfj {

using cplx = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The legitimate channel leaves no transmit direction free for jamming.
class NoJammingSubspace : public Error {
public:
    using Error::Error;
};

inline constexpr double kDefaultRankTol = 1e-10;

bool all_finite(const CMat& m);

/// Orthonormal basis of the right null space of `a` (columns of the
/// result). Singular values at or below `tol * sigma_max` count as zero.
/// Throws NoJammingSubspace when the null space is empty.
CMat null_space(const CMat& a, double tol = kDefaultRankTol);

/// Nearest positive semidefinite matrix in Frobenius norm, obtained by
/// clipping negative eigenvalues to exactly zero. Throws on inputs that
/// are not symmetric within 1e-10.
RMat psd_project(const RMat& s);

/// Natural log of det(a) for Hermitian positive definite `a`.
/// Throws when the smallest eigenvalue is not strictly positive.
double logdet_hermitian(const CMat& a);

/// Haar-distributed T x T unitary (QR of a complex Ginibre matrix with
/// the R-diagonal phases folded back into Q).
CMat random_unitary(int t, Stream& rng);

/// Matrix of i.i.d. CN(0, variance) entries.
CMat random_cn(int rows, int cols, Stream& rng, double variance = 1.0);

/// Smallest eigenvalue of a symmetric real matrix.
double min_eigenvalue(const RMat& s);

inline double to_db(double x) { return 10.0 * std::log10(x); }
inline double from_db(double db) { return std::pow(10.0, db / 10.0); }

} // namespace isacfj

#endif
