// Copyright 2026 The lmany Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Random inputs and brute-force oracles shared by the tests.

#pragma once

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "lmany/linalg.hpp"

namespace lmany::testing {

using Rng = std::mt19937_64;

inline CVector random_cvector(Rng &rng, std::size_t dim) {
    std::normal_distribution<double> g;
    CVector v(static_cast<Eigen::Index>(dim));
    for (auto &z : v) {
        z = Complex(g(rng), g(rng));
    }
    return v;
}

inline StateVector random_state(Rng &rng, std::size_t dim) {
    return StateVector(random_cvector(rng, dim));
}

inline CMatrix random_isometry(Rng &rng, std::size_t dim, std::size_t cols) {
    CMatrix m(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        m.col(j) = random_cvector(rng, dim);
    }
    Eigen::HouseholderQR<CMatrix> qr(m);
    const CMatrix q = qr.householderQ();
    return q.leftCols(static_cast<Eigen::Index>(cols));
}

inline CMatrix random_unitary_matrix(Rng &rng, std::size_t dim) {
    return random_isometry(rng, dim, dim);
}

inline Projector random_projector(Rng &rng, std::size_t dim, std::size_t rank) {
    return Projector::from_orthonormal(random_isometry(rng, dim, rank), 1e-10);
}

/// Projector onto the first `rank` coordinates.
inline Projector coordinate_projector(std::size_t dim, std::size_t rank) {
    return Projector::from_orthonormal(
        CMatrix::Identity(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(rank)));
}

/// Dense (I + s a·σ)/2 straight from the Pauli matrices.
inline CMatrix pauli_projector(const Vec3 &a, int s) {
    const Complex i(0.0, 1.0);
    CMatrix sx(2, 2), sy(2, 2), sz(2, 2);
    sx << 0, 1, 1, 0;
    sy << 0, -i, i, 0;
    sz << 1, 0, 0, -1;
    return 0.5 * (CMatrix::Identity(2, 2) +
                  static_cast<double>(s) * (a.x() * sx + a.y() * sy + a.z() * sz));
}

inline CMatrix kron(const CMatrix &x, const CMatrix &y) {
    CMatrix out(x.rows() * y.rows(), x.cols() * y.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            out.block(i * y.rows(), j * y.cols(), y.rows(), y.cols()) = x(i, j) * y;
        }
    }
    return out;
}

/// ‖Pψ‖² / ‖ψ‖² with a dense projector matrix.
inline double born_quantity_oracle(const StateVector &psi, const CMatrix &p) {
    return (p * psi.amplitudes()).squaredNorm() / psi.norm_squared();
}

/// Brute-force Born probability of (s, t) for a 4-dimensional spin state.
inline double born_oracle(const CVector &spin, const Vec3 &a, const Vec3 &b, int s, int t) {
    const CMatrix p = kron(pauli_projector(a, s), pauli_projector(b, t));
    return (spin.adjoint() * p * spin)(0, 0).real() / spin.squaredNorm();
}

inline CVector singlet_oracle() {
    CVector v(4);
    v << 0.0, 1.0 / std::numbers::sqrt2, -1.0 / std::numbers::sqrt2, 0.0;
    return v;
}

inline Vec3 plane(double deg) {
    const double r = deg * std::numbers::pi / 180.0;
    return Vec3(std::sin(r), 0.0, std::cos(r));
}

} // namespace lmany::testing
