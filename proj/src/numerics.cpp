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

#include "isacfj/numerics.hpp"

#include <cmath>

namespace isacfj {

bool all_finite(const CMat& m)
{
    for (Eigen::Index i = 0; i < m.size(); ++i)
        if (!std::isfinite(m.data()[i].real()) || !std::isfinite(m.data()[i].imag()))
            return false;
    return true;
}

CMat null_space(const CMat& a, double tol)
{
    if (a.rows() < 1 || a.cols() < 1)
        throw Error("null_space: empty matrix");
    if (tol < 0.0)
        throw Error("null_space: negative tolerance");
    if (!all_finite(a))
        throw Error("null_space: non-finite entries");

    Eigen::JacobiSVD<CMat> svd(a, Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    const double smax = s.size() > 0 ? s(0) : 0.0;
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(i) > tol * smax)
            ++rank;

    const Eigen::Index n = a.cols();
    if (n - rank <= 0)
        throw NoJammingSubspace("no jamming subspace: channel of size " + std::to_string(a.rows()) + "x" +
                                std::to_string(n) + " has full column rank");
    return svd.matrixV().rightCols(n - rank);
}

RMat psd_project(const RMat& s)
{
    if (s.rows() != s.cols())
        throw Error("psd_project: matrix is not square");
    const double asym = (s - s.transpose()).cwiseAbs().maxCoeff();
    if (!(asym <= 1e-10))
        throw Error("psd_project: matrix is not symmetric (max asymmetry " + std::to_string(asym) + ")");

    const RMat sym = 0.5 * (s + s.transpose());
    Eigen::SelfAdjointEigenSolver<RMat> eig(sym);
    const RVec lam = eig.eigenvalues().cwiseMax(0.0);
    if (eig.eigenvalues().minCoeff() >= 0.0)
        return sym;
    RMat out = eig.eigenvectors() * lam.asDiagonal() * eig.eigenvectors().transpose();
    return 0.5 * (out + out.transpose());
}

double logdet_hermitian(const CMat& a)
{
    if (a.rows() != a.cols())
        throw Error("logdet_hermitian: matrix is not square");
    Eigen::SelfAdjointEigenSolver<CMat> eig(a, Eigen::EigenvaluesOnly);
    const RVec& lam = eig.eigenvalues();
    if (!(lam.minCoeff() > 0.0))
        throw Error("logdet_hermitian: matrix is not positive definite (min eigenvalue " +
                    std::to_string(lam.minCoeff()) + ")");
    return lam.array().log().sum();
}

CMat random_cn(int rows, int cols, Stream& rng, double variance)
{
    CMat m(rows, cols);
    // Column-major fill order is part of the determinism contract.
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            m(i, j) = rng.cnormal(variance);
    return m;
}

CMat random_unitary(int t, Stream& rng)
{
    if (t < 1)
        throw Error("random_unitary: size must be at least 1");
    const CMat z = random_cn(t, t, rng);
    Eigen::HouseholderQR<CMat> qr(z);
    CMat q = qr.householderQ() * CMat::Identity(t, t);
    const CMat r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < t; ++j) {
        const double mag = std::abs(r(j, j));
        const cplx ph = mag > 0.0 ? r(j, j) / mag : cplx(1.0, 0.0);
        q.col(j) *= ph;
    }
    return q;
}

double min_eigenvalue(const RMat& s)
{
    Eigen::SelfAdjointEigenSolver<RMat> eig(0.5 * (s + s.transpose()), Eigen::EigenvaluesOnly);
    return eig.eigenvalues().minCoeff();
}

} // namespace isacfj
