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

/**
 * @file linalg.hpp
 * Finite-dimensional complex linear algebra: state vectors, subspace
 * projectors stored as orthonormal range bases, unitaries and the Schmidt
 * decomposition of bipartite vectors.
 *
 * Index convention for tensor products: the amplitude of x ⊗ y at
 * (i, j) lives at index i * dim(y) + j.
 */
#pragma once

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace lmany {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using Vec3 = Eigen::Vector3d;

/// Default absolute tolerance, scaled by operand norms.
inline constexpr double kDefaultTolerance = 1e-9;

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Operands live in incompatible spaces.
class DimensionError : public Error {
  public:
    using Error::Error;
};

/// An input violates a documented precondition.
class PreconditionError : public Error {
  public:
    using Error::Error;
};

/**
 * Unnormalized vector of complex amplitudes. Immutable after construction.
 */
class StateVector {
  public:
    StateVector() = default;
    explicit StateVector(CVector amplitudes);
    StateVector(std::initializer_list<Complex> amplitudes);

    static StateVector basis(std::size_t dim, std::size_t index);
    static StateVector zero(std::size_t dim);

    [[nodiscard]] std::size_t dim() const {
        return static_cast<std::size_t>(amplitudes_.size());
    }
    [[nodiscard]] const CVector &amplitudes() const { return amplitudes_; }
    [[nodiscard]] Complex operator[](std::size_t i) const {
        return amplitudes_[static_cast<Eigen::Index>(i)];
    }

    [[nodiscard]] double norm() const { return amplitudes_.norm(); }
    [[nodiscard]] double norm_squared() const {
        return amplitudes_.squaredNorm();
    }
    /// Throws PreconditionError for the zero vector.
    [[nodiscard]] StateVector normalized() const;

    friend StateVector operator+(const StateVector &x, const StateVector &y);
    friend StateVector operator-(const StateVector &x, const StateVector &y);
    friend StateVector operator*(Complex c, const StateVector &x);

  private:
    CVector amplitudes_;
};

/// ⟨x, y⟩, conjugate-linear in the first argument.
Complex inner_product(const StateVector &x, const StateVector &y);

StateVector tensor(const StateVector &x, const StateVector &y);

/// ‖x - y‖.
double distance(const StateVector &x, const StateVector &y);

/**
 * Orthogonal projector onto a subspace, represented by an orthonormal basis
 * of its range.
 *
 * The range is an orthogonal direct sum of blocks; each block is a Kronecker
 * product of factor bases over a fixed factorization of the space. A plain
 * subspace is one block with one factor. Keeping the tensor structure lets
 * P ⊗ I act on large composite spaces without materializing dense bases.
 */
class Projector {
  public:
    /// Orthonormal basis of one tensor factor. Full-rank factors are stored
    /// without a matrix and act as the identity.
    /// A factor whose basis vectors are standard basis vectors keeps only
    /// their indices in `coords`.
    struct Factor {
        std::size_t dim = 0;
        bool identity = false;
        CMatrix basis; // dim x rank, empty when identity or a selection
        std::vector<Eigen::Index> coords;

        [[nodiscard]] bool selection() const { return !coords.empty(); }
        [[nodiscard]] std::size_t rank() const {
            if (identity) {
                return dim;
            }
            return selection() ? coords.size() : static_cast<std::size_t>(basis.cols());
        }
    };
    using Block = std::vector<Factor>;

    /// Validates that the columns are orthonormal within `tol`.
    static Projector from_orthonormal(CMatrix basis, double tol = 1e-12);
    /// Projector onto the span of arbitrary vectors (orthonormalized here).
    static Projector onto_span(const std::vector<StateVector> &vectors,
                               double tol = kDefaultTolerance);
    static Projector identity(std::size_t dim);
    static Projector zero(std::size_t dim);

    [[nodiscard]] std::size_t dim() const { return dim_; }
    [[nodiscard]] std::size_t rank() const;
    [[nodiscard]] const std::vector<std::size_t> &factor_dims() const {
        return factor_dims_;
    }
    [[nodiscard]] const std::vector<Block> &blocks() const { return blocks_; }
    [[nodiscard]] bool is_identity() const;

    [[nodiscard]] StateVector apply(const StateVector &x) const;
    /// Coordinates of x in the range basis (B† x); length rank().
    [[nodiscard]] CVector coordinates(const StateVector &x) const;
    /// The i-th range basis vector, i < rank().
    [[nodiscard]] StateVector range_vector(std::size_t i) const;
    /// Dense dim x rank basis. Intended for tests and small spaces.
    [[nodiscard]] CMatrix range_basis() const;
    /// Dense dim x dim matrix. Intended for tests and small spaces.
    [[nodiscard]] CMatrix matrix() const;

    /// I - P. Exact for single-block projectors; multi-block projectors are
    /// materialized, which is refused above `kMaxDenseDim`.
    [[nodiscard]] Projector complement() const;

    /// Splits a single-block projector P = L ⊗ R at a factor boundary whose
    /// left dimension is `left_dim`.
    [[nodiscard]] std::optional<std::pair<Projector, Projector>>
    split(std::size_t left_dim) const;

    /// Same subspace within `tol`.
    [[nodiscard]] bool same_subspace(const Projector &other,
                                     double tol = kDefaultTolerance) const;

    friend Projector tensor(const Projector &left, const Projector &right);
    friend Projector direct_sum(const Projector &p, const Projector &q,
                                double tol);

    static constexpr std::size_t kMaxDenseDim = 4096;

  private:
    Projector(std::size_t dim, std::vector<std::size_t> factor_dims,
              std::vector<Block> blocks);
    void apply_block(const Block &block, CVector &x) const;

    std::size_t dim_ = 0;
    std::vector<std::size_t> factor_dims_;
    std::vector<Block> blocks_;
};

/// P ⊗ Q; the factorizations are concatenated.
Projector tensor(const Projector &left, const Projector &right);

/// P + Q for mutually orthogonal projectors with identical factorizations.
Projector direct_sum(const Projector &p, const Projector &q,
                     double tol = kDefaultTolerance);

/// P ⊗ I on dim(P) * right_dim.
Projector embed_left(const Projector &p, std::size_t right_dim);
/// I ⊗ P on left_dim * dim(P).
Projector embed_right(std::size_t left_dim, const Projector &p);

/// (I + s a·σ) / 2 for a unit direction a and s = ±1.
Projector spin_projector(const Vec3 &direction, int s);

/// Unit direction in the x-z plane at `angle_rad` from +z.
Vec3 planar_direction(double angle_rad);

/// Angle between two directions, in [0, π].
double angle_between(const Vec3 &a, const Vec3 &b);

class Unitary {
  public:
    /// Validates column orthonormality within `tol`.
    static Unitary from_matrix(CMatrix matrix, double tol = 1e-10);
    static Unitary identity(std::size_t dim);

    [[nodiscard]] std::size_t dim() const {
        return static_cast<std::size_t>(matrix_.rows());
    }
    [[nodiscard]] const CMatrix &matrix() const { return matrix_; }
    [[nodiscard]] StateVector apply(const StateVector &x) const;
    [[nodiscard]] Unitary adjoint() const;
    /// True if U P = P U within `tol` (dense; small spaces only).
    [[nodiscard]] bool commutes_with(const Projector &p,
                                     double tol = kDefaultTolerance) const;

  private:
    explicit Unitary(CMatrix matrix) : matrix_(std::move(matrix)) {}
    CMatrix matrix_;
};

struct SchmidtTerm {
    double coefficient = 0.0;
    StateVector left;
    StateVector right;
};

/**
 * x = Σ coefficient_i left_i ⊗ right_i with orthonormal left and right
 * families and non-increasing coefficients. Terms with coefficient at or
 * below `tol * ‖x‖` are dropped; the zero vector yields no terms.
 */
std::vector<SchmidtTerm> schmidt(const StateVector &x, std::size_t left_dim,
                                 std::size_t right_dim,
                                 double tol = kDefaultTolerance);

/// Discrete-Fourier mixing matrix W_{lj} = ω^{lj} / √k with ω = e^{2πi/k}.
CMatrix fourier_matrix(std::size_t k);

} // namespace lmany
