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

#include "lmany/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <numeric>

namespace lmany {

namespace {

using RowMajorMap =
    Eigen::Map<Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic,
                             Eigen::RowMajor>>;
using ConstRowMajorMap =
    Eigen::Map<const Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic,
                                   Eigen::RowMajor>>;

void require_same_dim(const StateVector &x, const StateVector &y,
                      const char *what) {
    if (x.dim() != y.dim()) {
        throw DimensionError(std::string(what) + ": dimension mismatch (" +
                             std::to_string(x.dim()) + " vs " +
                             std::to_string(y.dim()) + ")");
    }
}

std::size_t product(const std::vector<std::size_t> &dims, std::size_t begin,
                    std::size_t end) {
    std::size_t p = 1;
    for (std::size_t i = begin; i < end; ++i) {
        p *= dims[i];
    }
    return p;
}

double max_abs_deviation_from_identity(const CMatrix &gram) {
    const auto k = gram.rows();
    return (gram - CMatrix::Identity(k, k)).cwiseAbs().maxCoeff();
}

// Orthonormal basis of the orthogonal complement of span(basis) in C^d.
CMatrix complement_basis(const CMatrix &basis, std::size_t dim) {
    const auto d = static_cast<Eigen::Index>(dim);
    if (basis.cols() == 0) {
        return CMatrix::Identity(d, d);
    }
    Eigen::HouseholderQR<CMatrix> qr(basis);
    CMatrix slab = CMatrix::Zero(d, d - basis.cols());
    slab.bottomRows(d - basis.cols()).setIdentity();
    slab.applyOnTheLeft(qr.householderQ());
    return slab;
}

// Column indices of `basis` if every column is a distinct standard basis
// vector, empty otherwise.
std::vector<Eigen::Index> selection_of(const CMatrix &basis) {
    std::vector<Eigen::Index> coords;
    std::vector<char> used(static_cast<std::size_t>(basis.rows()), 0);
    for (Eigen::Index j = 0; j < basis.cols(); ++j) {
        Eigen::Index hit = -1;
        for (Eigen::Index i = 0; i < basis.rows(); ++i) {
            const Complex z = basis(i, j);
            if (z == Complex(1.0, 0.0) && hit < 0) {
                hit = i;
            } else if (z != Complex(0.0, 0.0)) {
                return {};
            }
        }
        if (hit < 0 || used[static_cast<std::size_t>(hit)]) {
            return {};
        }
        used[static_cast<std::size_t>(hit)] = 1;
        coords.push_back(hit);
    }
    return coords;
}

Projector::Factor complement_factor(const Projector::Factor &f) {
    Projector::Factor c;
    c.dim = f.dim;
    if (f.selection()) {
        std::vector<char> used(f.dim, 0);
        for (auto k : f.coords) {
            used[static_cast<std::size_t>(k)] = 1;
        }
        for (std::size_t i = 0; i < f.dim; ++i) {
            if (!used[i]) {
                c.coords.push_back(static_cast<Eigen::Index>(i));
            }
        }
        return c;
    }
    c.basis = complement_basis(f.basis, f.dim);
    return c;
}

CVector factor_column(const Projector::Factor &f, std::size_t j) {
    if (f.identity || f.selection()) {
        CVector e = CVector::Zero(static_cast<Eigen::Index>(f.dim));
        e[f.identity ? static_cast<Eigen::Index>(j) : f.coords[j]] = 1.0;
        return e;
    }
    return f.basis.col(static_cast<Eigen::Index>(j));
}

CVector kron(const CVector &x, const CVector &y) {
    CVector out(x.size() * y.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        out.segment(i * y.size(), y.size()) = x[i] * y;
    }
    return out;
}

} // namespace

// ---------------------------------------------------------------------------
// StateVector

StateVector::StateVector(CVector amplitudes)
    : amplitudes_(std::move(amplitudes)) {
    if (amplitudes_.size() == 0) {
        throw PreconditionError("StateVector: dimension must be positive");
    }
}

StateVector::StateVector(std::initializer_list<Complex> amplitudes)
    : amplitudes_(static_cast<Eigen::Index>(amplitudes.size())) {
    if (amplitudes.size() == 0) {
        throw PreconditionError("StateVector: dimension must be positive");
    }
    Eigen::Index i = 0;
    for (const auto &a : amplitudes) {
        amplitudes_[i++] = a;
    }
}

StateVector StateVector::basis(std::size_t dim, std::size_t index) {
    if (index >= dim) {
        throw PreconditionError("StateVector::basis: index out of range");
    }
    CVector v = CVector::Zero(static_cast<Eigen::Index>(dim));
    v[static_cast<Eigen::Index>(index)] = 1.0;
    return StateVector(std::move(v));
}

StateVector StateVector::zero(std::size_t dim) {
    return StateVector(CVector::Zero(static_cast<Eigen::Index>(dim)));
}

StateVector StateVector::normalized() const {
    const double n = norm();
    if (n == 0.0) {
        throw PreconditionError("cannot normalize the zero vector");
    }
    return StateVector(amplitudes_ / n);
}

StateVector operator+(const StateVector &x, const StateVector &y) {
    require_same_dim(x, y, "operator+");
    return StateVector(CVector(x.amplitudes_ + y.amplitudes_));
}

StateVector operator-(const StateVector &x, const StateVector &y) {
    require_same_dim(x, y, "operator-");
    return StateVector(CVector(x.amplitudes_ - y.amplitudes_));
}

StateVector operator*(Complex c, const StateVector &x) {
    return StateVector(CVector(c * x.amplitudes_));
}

Complex inner_product(const StateVector &x, const StateVector &y) {
    require_same_dim(x, y, "inner_product");
    return x.amplitudes().dot(y.amplitudes());
}

StateVector tensor(const StateVector &x, const StateVector &y) {
    return StateVector(kron(x.amplitudes(), y.amplitudes()));
}

double distance(const StateVector &x, const StateVector &y) {
    require_same_dim(x, y, "distance");
    return (x.amplitudes() - y.amplitudes()).norm();
}

// ---------------------------------------------------------------------------
// Projector

Projector::Projector(std::size_t dim, std::vector<std::size_t> factor_dims,
                     std::vector<Block> blocks)
    : dim_(dim), factor_dims_(std::move(factor_dims)) {
    for (auto &block : blocks) {
        const bool empty = std::any_of(block.begin(), block.end(),
                                       [](const Factor &f) { return f.rank() == 0; });
        if (!empty) {
            blocks_.push_back(std::move(block));
        }
    }
}

Projector Projector::from_orthonormal(CMatrix basis, double tol) {
    const auto dim = static_cast<std::size_t>(basis.rows());
    if (dim == 0) {
        throw PreconditionError("Projector: dimension must be positive");
    }
    if (basis.cols() > basis.rows()) {
        throw PreconditionError("Projector: more basis vectors than dimensions");
    }
    Factor f;
    f.dim = dim;
    f.coords = selection_of(basis);
    if (basis.cols() > 0 && !f.selection()) {
        const CMatrix gram = basis.adjoint() * basis;
        if (max_abs_deviation_from_identity(gram) > tol) {
            throw PreconditionError("Projector: range basis is not orthonormal");
        }
    }
    if (basis.cols() == basis.rows()) {
        f.identity = true;
        f.coords.clear();
    } else if (!f.selection()) {
        f.basis = std::move(basis);
    }
    std::vector<Block> blocks;
    blocks.push_back(Block{std::move(f)});
    return Projector(dim, {dim}, std::move(blocks));
}

Projector Projector::onto_span(const std::vector<StateVector> &vectors,
                               double tol) {
    if (vectors.empty()) {
        throw PreconditionError("Projector::onto_span: no vectors given");
    }
    const auto dim = vectors.front().dim();
    std::vector<CVector> accepted;
    for (const auto &v : vectors) {
        if (v.dim() != dim) {
            throw DimensionError("Projector::onto_span: dimension mismatch");
        }
        CVector r = v.amplitudes();
        const double original = r.norm();
        for (int pass = 0; pass < 2; ++pass) {
            for (const auto &q : accepted) {
                r -= q.dot(r) * q;
            }
        }
        const double rn = r.norm();
        if (original > 0.0 && rn > tol * original) {
            accepted.push_back(r / rn);
        }
    }
    CMatrix basis(static_cast<Eigen::Index>(dim),
                  static_cast<Eigen::Index>(accepted.size()));
    for (std::size_t i = 0; i < accepted.size(); ++i) {
        basis.col(static_cast<Eigen::Index>(i)) = accepted[i];
    }
    return from_orthonormal(std::move(basis), 1e-10);
}

Projector Projector::identity(std::size_t dim) {
    Factor f;
    f.dim = dim;
    f.identity = true;
    std::vector<Block> blocks;
    blocks.push_back(Block{std::move(f)});
    return Projector(dim, {dim}, std::move(blocks));
}

Projector Projector::zero(std::size_t dim) { return Projector(dim, {dim}, {}); }

std::size_t Projector::rank() const {
    std::size_t r = 0;
    for (const auto &block : blocks_) {
        std::size_t br = 1;
        for (const auto &f : block) {
            br *= f.rank();
        }
        r += br;
    }
    return r;
}

bool Projector::is_identity() const { return rank() == dim_; }

void Projector::apply_block(const Block &block, CVector &x) const {
    for (std::size_t mode = 0; mode < block.size(); ++mode) {
        const Factor &f = block[mode];
        if (f.identity) {
            continue;
        }
        const auto d = static_cast<Eigen::Index>(f.dim);
        const auto outer = product(factor_dims_, 0, mode);
        const auto inner =
            static_cast<Eigen::Index>(product(factor_dims_, mode + 1, block.size()));
        std::vector<char> keep;
        if (f.selection()) {
            keep.assign(f.dim, 0);
            for (auto k : f.coords) {
                keep[static_cast<std::size_t>(k)] = 1;
            }
        }
        for (std::size_t o = 0; o < outer; ++o) {
            RowMajorMap m(x.data() + static_cast<Eigen::Index>(o) * d * inner, d,
                          inner);
            if (f.selection()) {
                for (Eigen::Index r = 0; r < d; ++r) {
                    if (!keep[static_cast<std::size_t>(r)]) {
                        m.row(r).setZero();
                    }
                }
                continue;
            }
            const CMatrix c = f.basis.adjoint() * m;
            m = f.basis * c;
        }
    }
}

StateVector Projector::apply(const StateVector &x) const {
    if (x.dim() != dim_) {
        throw DimensionError("Projector::apply: dimension mismatch");
    }
    CVector out = CVector::Zero(static_cast<Eigen::Index>(dim_));
    for (const auto &block : blocks_) {
        CVector y = x.amplitudes();
        apply_block(block, y);
        out += y;
    }
    return StateVector(std::move(out));
}

CVector Projector::coordinates(const StateVector &x) const {
    if (x.dim() != dim_) {
        throw DimensionError("Projector::coordinates: dimension mismatch");
    }
    CVector out(static_cast<Eigen::Index>(rank()));
    Eigen::Index offset = 0;
    for (const auto &block : blocks_) {
        std::vector<std::size_t> dims = factor_dims_;
        CVector y = x.amplitudes();
        for (std::size_t mode = 0; mode < block.size(); ++mode) {
            const Factor &f = block[mode];
            if (f.identity) {
                continue;
            }
            const auto d = static_cast<Eigen::Index>(f.dim);
            const auto r = static_cast<Eigen::Index>(f.rank());
            const auto outer = product(dims, 0, mode);
            const auto inner =
                static_cast<Eigen::Index>(product(dims, mode + 1, dims.size()));
            CVector next(static_cast<Eigen::Index>(outer) * r * inner);
            for (std::size_t o = 0; o < outer; ++o) {
                ConstRowMajorMap in(y.data() + static_cast<Eigen::Index>(o) * d * inner,
                                    d, inner);
                RowMajorMap res(next.data() + static_cast<Eigen::Index>(o) * r * inner,
                                r, inner);
                if (f.selection()) {
                    for (Eigen::Index k = 0; k < r; ++k) {
                        res.row(k) = in.row(f.coords[static_cast<std::size_t>(k)]);
                    }
                } else {
                    res = f.basis.adjoint() * in;
                }
            }
            dims[mode] = f.rank();
            y = std::move(next);
        }
        out.segment(offset, y.size()) = y;
        offset += y.size();
    }
    return out;
}

StateVector Projector::range_vector(std::size_t i) const {
    for (const auto &block : blocks_) {
        std::size_t br = 1;
        for (const auto &f : block) {
            br *= f.rank();
        }
        if (i >= br) {
            i -= br;
            continue;
        }
        // Row-major multi-index over factor ranks.
        std::vector<std::size_t> idx(block.size());
        std::size_t rem = i;
        for (std::size_t m = block.size(); m-- > 0;) {
            idx[m] = rem % block[m].rank();
            rem /= block[m].rank();
        }
        CVector v = factor_column(block[0], idx[0]);
        for (std::size_t m = 1; m < block.size(); ++m) {
            v = kron(v, factor_column(block[m], idx[m]));
        }
        return StateVector(std::move(v));
    }
    throw PreconditionError("Projector::range_vector: index out of range");
}

CMatrix Projector::range_basis() const {
    const auto r = rank();
    CMatrix b(static_cast<Eigen::Index>(dim_), static_cast<Eigen::Index>(r));
    for (std::size_t i = 0; i < r; ++i) {
        b.col(static_cast<Eigen::Index>(i)) = range_vector(i).amplitudes();
    }
    return b;
}

CMatrix Projector::matrix() const {
    const CMatrix b = range_basis();
    return b * b.adjoint();
}

Projector Projector::complement() const {
    if (blocks_.empty()) {
        return Projector::identity(dim_);
    }
    if (blocks_.size() == 1) {
        // I - F1⊗...⊗Fk = Σ_i F1⊗...⊗F(i-1) ⊗ Fi^c ⊗ I ⊗ ... ⊗ I
        const Block &block = blocks_.front();
        std::vector<Block> out;
        for (std::size_t i = 0; i < block.size(); ++i) {
            if (block[i].identity) {
                continue;
            }
            Block b;
            for (std::size_t j = 0; j < i; ++j) {
                b.push_back(block[j]);
            }
            b.push_back(complement_factor(block[i]));
            for (std::size_t j = i + 1; j < block.size(); ++j) {
                Factor id;
                id.dim = block[j].dim;
                id.identity = true;
                b.push_back(std::move(id));
            }
            out.push_back(std::move(b));
        }
        return Projector(dim_, factor_dims_, std::move(out));
    }
    if (dim_ > kMaxDenseDim) {
        throw PreconditionError(
            "Projector::complement: multi-block complement too large to materialize");
    }
    return from_orthonormal(complement_basis(range_basis(), dim_), 1e-10);
}

std::optional<std::pair<Projector, Projector>>
Projector::split(std::size_t left_dim) const {
    if (blocks_.size() != 1) {
        return std::nullopt;
    }
    std::size_t k = 0;
    std::size_t acc = 1;
    while (k < factor_dims_.size() && acc < left_dim) {
        acc *= factor_dims_[k++];
    }
    if (acc != left_dim || k == 0 || k == factor_dims_.size()) {
        return std::nullopt;
    }
    const Block &block = blocks_.front();
    std::vector<std::size_t> ld(factor_dims_.begin(), factor_dims_.begin() + k);
    std::vector<std::size_t> rd(factor_dims_.begin() + k, factor_dims_.end());
    Block lb(block.begin(), block.begin() + k);
    Block rb(block.begin() + k, block.end());
    std::vector<Block> lbs{std::move(lb)};
    std::vector<Block> rbs{std::move(rb)};
    return std::make_pair(Projector(left_dim, std::move(ld), std::move(lbs)),
                          Projector(dim_ / left_dim, std::move(rd), std::move(rbs)));
}

bool Projector::same_subspace(const Projector &other, double tol) const {
    if (dim_ != other.dim_ || rank() != other.rank()) {
        return false;
    }
    for (std::size_t i = 0; i < other.rank(); ++i) {
        const auto v = other.range_vector(i);
        if (distance(apply(v), v) > tol) {
            return false;
        }
    }
    return true;
}

Projector tensor(const Projector &left, const Projector &right) {
    std::vector<std::size_t> dims = left.factor_dims_;
    dims.insert(dims.end(), right.factor_dims_.begin(), right.factor_dims_.end());
    std::vector<Projector::Block> blocks;
    for (const auto &lb : left.blocks_) {
        for (const auto &rb : right.blocks_) {
            Projector::Block b = lb;
            b.insert(b.end(), rb.begin(), rb.end());
            blocks.push_back(std::move(b));
        }
    }
    return Projector(left.dim_ * right.dim_, std::move(dims), std::move(blocks));
}

Projector direct_sum(const Projector &p, const Projector &q, double tol) {
    if (p.dim_ != q.dim_ || p.factor_dims_ != q.factor_dims_) {
        throw DimensionError("direct_sum: projectors have different factorizations");
    }
    const Projector &small = p.rank() <= q.rank() ? p : q;
    const Projector &large = p.rank() <= q.rank() ? q : p;
    for (std::size_t i = 0; i < small.rank(); ++i) {
        if (large.apply(small.range_vector(i)).norm() > tol) {
            throw PreconditionError("direct_sum: projectors are not orthogonal");
        }
    }
    std::vector<Projector::Block> blocks = p.blocks_;
    blocks.insert(blocks.end(), q.blocks_.begin(), q.blocks_.end());
    return Projector(p.dim_, p.factor_dims_, std::move(blocks));
}

Projector embed_left(const Projector &p, std::size_t right_dim) {
    if (right_dim == 0) {
        throw PreconditionError("embed_left: right dimension must be positive");
    }
    return tensor(p, Projector::identity(right_dim));
}

Projector embed_right(std::size_t left_dim, const Projector &p) {
    if (left_dim == 0) {
        throw PreconditionError("embed_right: left dimension must be positive");
    }
    return tensor(Projector::identity(left_dim), p);
}

Projector spin_projector(const Vec3 &direction, int s) {
    if (std::abs(direction.norm() - 1.0) > 1e-12) {
        throw PreconditionError("spin_projector: direction is not a unit vector");
    }
    if (s != 1 && s != -1) {
        throw PreconditionError("spin_projector: outcome must be +1 or -1");
    }
    const Complex i{0.0, 1.0};
    CMatrix m(2, 2);
    // (I + s a·σ) / 2
    m(0, 0) = 0.5 * (1.0 + s * direction.z());
    m(1, 1) = 0.5 * (1.0 - s * direction.z());
    m(0, 1) = 0.5 * s * (direction.x() - i * direction.y());
    m(1, 0) = 0.5 * s * (direction.x() + i * direction.y());
    const Eigen::Index col = m.col(0).norm() >= m.col(1).norm() ? 0 : 1;
    CMatrix basis = m.col(col) / m.col(col).norm();
    return Projector::from_orthonormal(std::move(basis));
}

Vec3 planar_direction(double angle_rad) {
    return Vec3(std::sin(angle_rad), 0.0, std::cos(angle_rad));
}

double angle_between(const Vec3 &a, const Vec3 &b) {
    return std::atan2(a.cross(b).norm(), a.dot(b));
}

// ---------------------------------------------------------------------------
// Unitary

Unitary Unitary::from_matrix(CMatrix matrix, double tol) {
    if (matrix.rows() != matrix.cols() || matrix.rows() == 0) {
        throw PreconditionError("Unitary: matrix must be square and non-empty");
    }
    const CMatrix gram = matrix.adjoint() * matrix;
    if (max_abs_deviation_from_identity(gram) > tol) {
        throw PreconditionError("Unitary: columns are not orthonormal");
    }
    return Unitary(std::move(matrix));
}

Unitary Unitary::identity(std::size_t dim) {
    const auto d = static_cast<Eigen::Index>(dim);
    return Unitary(CMatrix::Identity(d, d));
}

StateVector Unitary::apply(const StateVector &x) const {
    if (x.dim() != dim()) {
        throw DimensionError("Unitary::apply: dimension mismatch");
    }
    return StateVector(CVector(matrix_ * x.amplitudes()));
}

Unitary Unitary::adjoint() const { return Unitary(matrix_.adjoint()); }

bool Unitary::commutes_with(const Projector &p, double tol) const {
    if (p.dim() != dim()) {
        throw DimensionError("Unitary::commutes_with: dimension mismatch");
    }
    const CMatrix pm = p.matrix();
    return (matrix_ * pm - pm * matrix_).cwiseAbs().maxCoeff() <= tol;
}

// ---------------------------------------------------------------------------

std::vector<SchmidtTerm> schmidt(const StateVector &x, std::size_t left_dim,
                                 std::size_t right_dim, double tol) {
    if (left_dim == 0 || right_dim == 0 || x.dim() != left_dim * right_dim) {
        throw DimensionError("schmidt: dimension does not factor as " +
                             std::to_string(left_dim) + " x " +
                             std::to_string(right_dim));
    }
    const double total = x.norm();
    std::vector<SchmidtTerm> terms;
    if (total == 0.0) {
        return terms;
    }
    const CMatrix grid = ConstRowMajorMap(x.amplitudes().data(),
                                          static_cast<Eigen::Index>(left_dim),
                                          static_cast<Eigen::Index>(right_dim));
    Eigen::BDCSVD<CMatrix> svd(grid, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto &sv = svd.singularValues();
    for (Eigen::Index k = 0; k < sv.size(); ++k) {
        if (sv[k] <= tol * total) {
            break;
        }
        terms.push_back(SchmidtTerm{sv[k], StateVector(CVector(svd.matrixU().col(k))),
                                    StateVector(CVector(svd.matrixV().col(k).conjugate()))});
    }
    return terms;
}

CMatrix fourier_matrix(std::size_t k) {
    const auto n = static_cast<Eigen::Index>(k);
    CMatrix w(n, n);
    const double scale = 1.0 / std::sqrt(static_cast<double>(k));
    for (std::size_t l = 0; l < k; ++l) {
        for (std::size_t j = 0; j < k; ++j) {
            const double phase = 2.0 * std::numbers::pi *
                                 static_cast<double>((l * j) % k) /
                                 static_cast<double>(k);
            w(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(j)) =
                std::polar(scale, phase);
        }
    }
    return w;
}

} // namespace lmany
