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

#include "lmany/expansion.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <map>

namespace lmany {

namespace {

using ConstRowMajorMap =
    Eigen::Map<const Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic,
                                   Eigen::RowMajor>>;

// A count n·w within this distance of an integer is treated as that integer.
constexpr double kCountSnap = 1e-10;
// Group residue mass within this distance of an integer number of a².
constexpr double kGroupSnap = 1e-8;
// Projected parts below this fraction of the norm are roundoff, not mass.
constexpr double kLeakage = 1e-12;

// Orthonormal vectors in range(P), orthogonal to `unit` (a unit vector in
// range(P)), obtained from P's range basis by one Householder reflection that
// carries a basis vector onto `unit`. No re-orthogonalization is needed.
std::vector<CVector> householder_frame(const Projector &p, const CVector &unit,
                                       std::size_t count) {
    std::vector<CVector> out;
    if (count == 0) {
        return out;
    }
    if (p.rank() < count + 1) {
        throw ExpansionError("insufficient rank: need " + std::to_string(count + 1) +
                             " range directions, projector has " +
                             std::to_string(p.rank()));
    }
    const StateVector u(unit);
    const CVector y = p.coordinates(u);
    Eigen::Index pivot = 0;
    y.cwiseAbs().maxCoeff(&pivot);
    const double mag = std::abs(y[pivot]);
    const Complex phase = mag > 0.0 ? y[pivot] / mag : Complex{1.0, 0.0};
    double vnorm2 = (1.0 - mag) * (1.0 - mag);
    for (Eigen::Index k = 0; k < y.size(); ++k) {
        if (k != pivot) {
            vnorm2 += std::norm(y[k]);
        }
    }
    CVector z;
    if (vnorm2 > 1e-30) {
        z = unit - phase * p.range_vector(static_cast<std::size_t>(pivot)).amplitudes();
    }
    for (Eigen::Index k = 0; k < y.size() && out.size() < count; ++k) {
        if (k == pivot) {
            continue;
        }
        CVector f = p.range_vector(static_cast<std::size_t>(k)).amplitudes();
        if (vnorm2 > 1e-30) {
            f -= (2.0 * std::conj(y[k]) / vnorm2) * z;
        }
        out.push_back(std::move(f));
    }
    return out;
}

// Splits total · frame[0] into k = frame.size() orthogonal pieces of norm
// total/√k using the discrete-Fourier mixing of the orthonormal frame.
std::vector<CVector> fourier_split(const std::vector<CVector> &frame, double total) {
    const auto k = frame.size();
    const auto dim = frame.front().size();
    CMatrix f(dim, static_cast<Eigen::Index>(k));
    for (std::size_t l = 0; l < k; ++l) {
        f.col(static_cast<Eigen::Index>(l)) = frame[l];
    }
    const CMatrix pieces =
        f * fourier_matrix(k) * (total / std::sqrt(static_cast<double>(k)));
    std::vector<CVector> out;
    out.reserve(k);
    for (std::size_t j = 0; j < k; ++j) {
        out.emplace_back(pieces.col(static_cast<Eigen::Index>(j)));
    }
    return out;
}

// Appends orthonormalized candidates to `frame` until it holds `target`
// vectors. Candidates are made orthogonal to `frame` and `against`.
void gram_schmidt_extend(std::vector<CVector> &frame, std::size_t target,
                         const std::vector<CVector> &against,
                         const std::function<std::optional<CVector>()> &next) {
    while (frame.size() < target) {
        auto cand = next();
        if (!cand) {
            return;
        }
        CVector r = *cand;
        const double original = r.norm();
        if (original == 0.0) {
            continue;
        }
        for (int pass = 0; pass < 2; ++pass) {
            for (const auto &q : against) {
                r -= (q.dot(r) / q.squaredNorm()) * q;
            }
            for (const auto &q : frame) {
                r -= q.dot(r) * q;
            }
        }
        const double rn = r.norm();
        if (rn > 1e-6 * original) {
            frame.push_back(r / rn);
        }
    }
}

// Carves a vector of norm g out of c·û (c > g) within the plane {û, w}:
// returns the unit direction û' of the carved part and the residue
// c·û − g·û', which is orthogonal to û'.
std::pair<CVector, CVector> carve(double c, const CVector &u_hat, const CVector &w,
                                  double g) {
    const double rho = std::sqrt(std::max(c * c - g * g, 0.0));
    CVector carved = (g / c) * u_hat + (rho / c) * w;
    CVector residue = (rho * rho / c) * u_hat - (g * rho / c) * w;
    return {std::move(carved), std::move(residue)};
}

struct Allotment {
    std::size_t count = 0;
    bool exact = false;
};

Allotment allot(double t, std::size_t n, bool has_mass, bool complement_has_mass) {
    const double r = std::round(t);
    Allotment a;
    if (std::abs(t - r) <= kCountSnap) {
        a.count = static_cast<std::size_t>(std::max(r, 0.0));
        a.exact = true;
        if ((a.count == 0 && has_mass) || (a.count == n && complement_has_mass)) {
            a.exact = false;
            a.count = a.count == 0 ? 0 : n - 1;
        }
        return a;
    }
    a.count = static_cast<std::size_t>(std::floor(std::max(t, 0.0)));
    return a;
}

struct SideResult {
    std::vector<CVector> microstates;
    std::optional<CVector> residue;
};

SideResult build_side(const Projector &p, const CVector &v, std::size_t count,
                      bool exact, double a) {
    SideResult out;
    const double c = v.norm();
    if (count == 0) {
        if (c > 0.0) {
            out.residue = v;
        }
        return out;
    }
    const CVector u_hat = v / c;
    if (exact) {
        std::vector<CVector> basis{u_hat};
        auto extra = householder_frame(p, u_hat, count - 1);
        basis.insert(basis.end(), extra.begin(), extra.end());
        out.microstates = fourier_split(basis, c);
        return out;
    }
    const double g = a * std::sqrt(static_cast<double>(count));
    auto extra = householder_frame(p, u_hat, count);
    auto [carved, residue] = carve(c, u_hat, extra.front(), g);
    std::vector<CVector> basis{carved};
    basis.insert(basis.end(), extra.begin() + 1, extra.end());
    out.microstates = fourier_split(basis, g);
    out.residue = std::move(residue);
    return out;
}

void classify_all(AdaptedExpansion &ae) {
    const auto &ms = ae.expansion.microstates();
    ae.classification.assign(ae.targets.size(), {});
    ae.counts.assign(ae.targets.size(), {});
    for (std::size_t t = 0; t < ae.targets.size(); ++t) {
        auto &row = ae.classification[t];
        row.reserve(ms.size());
        for (const auto &m : ms) {
            const auto c = classify(m, ae.targets[t].projector);
            row.push_back(c);
            switch (c) {
            case Classification::InRange:
                ++ae.counts[t].in_range;
                break;
            case Classification::InKernel:
                ++ae.counts[t].in_kernel;
                break;
            case Classification::Cat:
                ++ae.counts[t].cat;
                break;
            }
        }
    }
}

void require_family(const std::vector<LabeledProjector> &family, const char *who) {
    if (family.empty()) {
        throw PreconditionError(std::string(who) + " outcome family is empty");
    }
    const auto dim = family.front().projector.dim();
    std::size_t total_rank = 0;
    for (std::size_t i = 0; i < family.size(); ++i) {
        const auto &lp = family[i];
        if (lp.outcome != 1 && lp.outcome != -1) {
            throw PreconditionError(std::string(who) + " outcomes must be +1 or -1");
        }
        if (lp.projector.dim() != dim) {
            throw DimensionError(std::string(who) + " projectors differ in dimension");
        }
        total_rank += lp.projector.rank();
        for (std::size_t j = 0; j < i; ++j) {
            if (family[j].outcome == lp.outcome) {
                throw PreconditionError(std::string(who) + " outcomes repeat");
            }
            for (std::size_t k = 0; k < std::min<std::size_t>(lp.projector.rank(), 64); ++k) {
                if (family[j].projector.apply(lp.projector.range_vector(k)).norm() >
                    kDefaultTolerance) {
                    throw PreconditionError(std::string(who) +
                                            " projectors are not mutually orthogonal");
                }
            }
        }
    }
    if (total_rank != dim) {
        throw PreconditionError(std::string(who) +
                                " projectors do not sum to the identity");
    }
}

struct GridChoice {
    std::size_t k_alice = 0;
    std::size_t k_bob = 0;
    bool residue_on_alice = true;
};

// Most balanced k_A · k_B = k within the caps. With a residue, the side
// carrying it needs one spare direction.
std::optional<GridChoice> factor_grid(std::size_t k, std::size_t cap_alice,
                                      std::size_t cap_bob, bool residue) {
    std::optional<GridChoice> best;
    auto consider = [&](std::size_t ka, std::size_t kb, bool on_alice) {
        const std::size_t need_a = ka + ((residue && on_alice) ? 1 : 0);
        const std::size_t need_b = kb + ((residue && !on_alice) ? 1 : 0);
        if (need_a > cap_alice || need_b > cap_bob) {
            return;
        }
        const auto gap = ka > kb ? ka - kb : kb - ka;
        if (!best) {
            best = GridChoice{ka, kb, on_alice};
            return;
        }
        const auto best_gap = best->k_alice > best->k_bob ? best->k_alice - best->k_bob
                                                          : best->k_bob - best->k_alice;
        if (gap < best_gap) {
            best = GridChoice{ka, kb, on_alice};
        }
    };
    for (std::size_t ka = 1; ka * ka <= k; ++ka) {
        if (k % ka != 0) {
            continue;
        }
        const std::size_t kb = k / ka;
        for (bool on_alice : {true, false}) {
            if (!residue && !on_alice) {
                continue;
            }
            consider(ka, kb, on_alice);
            consider(kb, ka, on_alice);
        }
    }
    return best;
}

struct BranchPlan {
    std::size_t count = 0;
    bool exact = false;
    std::optional<GridChoice> grid;
};

// Largest grid-factorable count not above the branch's allotment.
BranchPlan plan_branch(double t, std::size_t n, std::size_t rank_alice, std::size_t rank_bob) {
    const Allotment al = allot(t, n, true, true);
    BranchPlan plan{al.count, al.exact, std::nullopt};
    while (plan.count > 0) {
        plan.grid = factor_grid(plan.count, rank_alice, rank_bob, !plan.exact);
        if (plan.grid) {
            return plan;
        }
        --plan.count;
        plan.exact = false;
    }
    return plan;
}

} // namespace

std::size_t product_branch_allotment(double weight, std::size_t n, std::size_t rank_alice,
                                     std::size_t rank_bob) {
    if (weight <= 0.0) {
        return 0;
    }
    return plan_branch(weight * static_cast<double>(n), n, rank_alice, rank_bob).count;
}

// ---------------------------------------------------------------------------

std::string to_string(Classification c) {
    switch (c) {
    case Classification::InRange:
        return "in_range";
    case Classification::InKernel:
        return "in_kernel";
    case Classification::Cat:
        return "cat";
    }
    return "unknown";
}

std::string to_string(const OutcomeLabel &label) {
    std::string s;
    s += label.alice > 0 ? '+' : '-';
    s += label.bob > 0 ? '+' : '-';
    return s;
}

std::size_t cell_index(const OutcomeLabel &label) {
    return (label.alice > 0 ? 0 : 2) + (label.bob > 0 ? 0 : 1);
}

OutcomeLabel cell_label(std::size_t index) {
    if (index > 3) {
        throw PreconditionError("cell_label: index out of range");
    }
    return OutcomeLabel{index < 2 ? 1 : -1, index % 2 == 0 ? 1 : -1};
}

Microstate::Microstate(StateVector vector, std::optional<OutcomeLabel> label)
    : dense_(std::move(vector)), label_(label) {}

Microstate::Microstate(ProductParts parts, std::optional<OutcomeLabel> label)
    : parts_(std::move(parts)), label_(label) {}

StateVector Microstate::vector() const {
    if (dense_) {
        return *dense_;
    }
    return tensor(parts_->left, parts_->right);
}

std::size_t Microstate::dim() const {
    return dense_ ? dense_->dim() : parts_->left.dim() * parts_->right.dim();
}

double Microstate::norm() const {
    return dense_ ? dense_->norm() : parts_->left.norm() * parts_->right.norm();
}

Complex inner_product(const Microstate &x, const Microstate &y) {
    if (x.dim() != y.dim()) {
        throw DimensionError("inner_product: dimension mismatch");
    }
    const auto &px = x.product_parts();
    const auto &py = y.product_parts();
    if (px && py && px->left.dim() == py->left.dim()) {
        return inner_product(px->left, py->left) * inner_product(px->right, py->right);
    }
    // ⟨u⊗v, X⟩ = u† X v̄ with X reshaped to left x right.
    auto contract = [](const ProductParts &p, const StateVector &dense) {
        const ConstRowMajorMap grid(dense.amplitudes().data(),
                                    static_cast<Eigen::Index>(p.left.dim()),
                                    static_cast<Eigen::Index>(p.right.dim()));
        return Complex(p.left.amplitudes().dot(grid * p.right.amplitudes().conjugate()));
    };
    if (px && !py) {
        return contract(*px, y.vector());
    }
    if (!px && py) {
        return std::conj(contract(*py, x.vector()));
    }
    return inner_product(x.vector(), y.vector());
}

double distance(const Microstate &x, const Microstate &y) {
    if (!x.product_parts() || !y.product_parts()) {
        return distance(x.vector(), y.vector());
    }
    const double d2 = x.norm() * x.norm() + y.norm() * y.norm() -
                      2.0 * std::real(inner_product(x, y));
    return std::sqrt(std::max(d2, 0.0));
}

StateVector apply(const Projector &p, const Microstate &m) {
    if (const auto &parts = m.product_parts()) {
        if (auto lr = p.split(parts->left.dim())) {
            return tensor(lr->first.apply(parts->left), lr->second.apply(parts->right));
        }
    }
    return p.apply(m.vector());
}

Classification classify(const StateVector &xi, const Projector &p, double eps) {
    const double n = xi.norm();
    if (n == 0.0) {
        throw PreconditionError("classify: zero vector");
    }
    const StateVector pxi = p.apply(xi);
    if (distance(pxi, xi) <= eps * n) {
        return Classification::InRange;
    }
    if (pxi.norm() <= eps * n) {
        return Classification::InKernel;
    }
    return Classification::Cat;
}

Classification classify(const Microstate &xi, const Projector &p, double eps) {
    const auto &parts = xi.product_parts();
    if (!parts) {
        return classify(xi.vector(), p, eps);
    }
    const auto lr = p.split(parts->left.dim());
    if (!lr) {
        return classify(xi.vector(), p, eps);
    }
    // u⊗v − Lu⊗Rv = (u − Lu)⊗v + Lu⊗(v − Rv), two orthogonal terms.
    const auto &u = parts->left;
    const auto &v = parts->right;
    const StateVector lu = lr->first.apply(u);
    const StateVector rv = lr->second.apply(v);
    const double n = u.norm() * v.norm();
    if (n == 0.0) {
        throw PreconditionError("classify: zero vector");
    }
    const double du = distance(lu, u);
    const double dv = distance(rv, v);
    const double off = std::hypot(du * v.norm(), lu.norm() * dv);
    if (off <= eps * n) {
        return Classification::InRange;
    }
    if (lu.norm() * rv.norm() <= eps * n) {
        return Classification::InKernel;
    }
    return Classification::Cat;
}

// ---------------------------------------------------------------------------

Expansion::Expansion(StateVector parent, std::vector<Microstate> microstates)
    : parent_(std::move(parent)), microstates_(std::move(microstates)) {
    if (!microstates_.empty()) {
        amplitude_ = parent_.norm() / std::sqrt(static_cast<double>(microstates_.size()));
    }
}

VerificationReport verify_expansion(const Expansion &e,
                                    const VerificationTolerances &tol) {
    VerificationReport r;
    const auto &ms = e.microstates();
    const double a = e.amplitude();
    const double psi_norm = e.parent().norm();
    if (ms.empty() || a == 0.0) {
        r.max_overlap = r.max_norm_deviation = r.reconstruction_error =
            std::numeric_limits<double>::infinity();
        return r;
    }
    for (const auto &m : ms) {
        if (m.dim() != e.parent().dim()) {
            r.reconstruction_error = std::numeric_limits<double>::infinity();
            return r;
        }
        r.max_norm_deviation = std::max(r.max_norm_deviation, std::abs(m.norm() - a) / a);
    }

    // Dense microstates are compared with one Gram product; everything else
    // pairwise, using tensor structure where present.
    std::vector<std::size_t> dense;
    for (std::size_t j = 0; j < ms.size(); ++j) {
        if (!ms[j].product_parts()) {
            dense.push_back(j);
        }
    }
    const double a2 = a * a;
    if (dense.size() > 1) {
        CMatrix x(static_cast<Eigen::Index>(e.parent().dim()),
                  static_cast<Eigen::Index>(dense.size()));
        for (std::size_t k = 0; k < dense.size(); ++k) {
            x.col(static_cast<Eigen::Index>(k)) = ms[dense[k]].vector().amplitudes();
        }
        CMatrix gram = x.adjoint() * x;
        gram.diagonal().setZero();
        r.max_overlap = std::max(r.max_overlap, gram.cwiseAbs().maxCoeff() / a2);
    }
    for (std::size_t j = 0; j < ms.size(); ++j) {
        for (std::size_t k = j + 1; k < ms.size(); ++k) {
            if (!ms[j].product_parts() && !ms[k].product_parts()) {
                continue;
            }
            r.max_overlap =
                std::max(r.max_overlap, std::abs(inner_product(ms[j], ms[k])) / a2);
        }
    }

    CVector sum = CVector::Zero(static_cast<Eigen::Index>(e.parent().dim()));
    for (const auto &m : ms) {
        sum += m.vector().amplitudes();
    }
    r.reconstruction_error = (sum - e.parent().amplitudes()).norm() / psi_norm;

    r.passed = r.max_overlap <= tol.overlap && r.max_norm_deviation <= tol.norm &&
               r.reconstruction_error <= tol.reconstruction;
    return r;
}

VerificationReport verify_expansion(const Expansion &e, double tol) {
    return verify_expansion(e, VerificationTolerances{tol, tol, tol});
}

std::size_t AdaptedExpansion::cat_count() const {
    std::size_t cats = 0;
    for (std::size_t j = 0; j < n(); ++j) {
        const bool any_cat = std::any_of(
            classification.begin(), classification.end(),
            [j](const auto &row) { return row[j] == Classification::Cat; });
        cats += any_cat ? 1 : 0;
    }
    return cats;
}

std::optional<std::size_t> AdaptedExpansion::target_index(const std::string &label) const {
    for (std::size_t i = 0; i < targets.size(); ++i) {
        if (targets[i].label == label) {
            return i;
        }
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------

Expansion equiamplitude_expand(const StateVector &psi, std::size_t n,
                               const std::vector<StateVector> &subspace_seed) {
    if (n < 2) {
        throw PreconditionError("equiamplitude_expand: n must be at least 2");
    }
    if (n > psi.dim()) {
        throw PreconditionError("equiamplitude_expand: n exceeds the dimension");
    }
    const double norm = psi.norm();
    if (norm == 0.0) {
        throw PreconditionError("equiamplitude_expand: zero state");
    }
    std::vector<CVector> frame{psi.amplitudes() / norm};
    std::size_t seed_pos = 0;
    std::size_t basis_pos = 0;
    gram_schmidt_extend(frame, n, {}, [&]() -> std::optional<CVector> {
        if (seed_pos < subspace_seed.size()) {
            const auto &s = subspace_seed[seed_pos++];
            if (s.dim() != psi.dim()) {
                throw DimensionError("equiamplitude_expand: seed dimension mismatch");
            }
            return s.amplitudes();
        }
        if (basis_pos < psi.dim()) {
            return StateVector::basis(psi.dim(), basis_pos++).amplitudes();
        }
        return std::nullopt;
    });
    if (frame.size() < n) {
        throw ExpansionError("equiamplitude_expand: could not complete the frame");
    }
    std::vector<Microstate> ms;
    for (auto &v : fourier_split(frame, norm)) {
        ms.emplace_back(StateVector(std::move(v)));
    }
    return Expansion(psi, std::move(ms));
}

AdaptedExpansion adapted_expand(const StateVector &psi, const Projector &p,
                                std::size_t n) {
    if (n < 2) {
        throw PreconditionError("adapted_expand: n must be at least 2");
    }
    if (p.dim() != psi.dim()) {
        throw DimensionError("adapted_expand: projector and state dimensions differ");
    }
    const double norm2 = psi.norm_squared();
    if (norm2 == 0.0) {
        throw PreconditionError("adapted_expand: zero state");
    }
    const Projector q = p.complement();
    const CVector in_part = p.apply(psi).amplitudes();
    const CVector out_part = q.apply(psi).amplitudes();
    const double a = std::sqrt(norm2 / static_cast<double>(n));
    const double t = in_part.squaredNorm() / norm2 * static_cast<double>(n);

    const double floor_norm = kLeakage * std::sqrt(norm2);
    const Allotment in =
        allot(t, n, in_part.norm() > floor_norm, out_part.norm() > floor_norm);
    const std::size_t m = in.count;
    // One slot goes to the cat when the allotment is not exact.
    const std::size_t m_kernel = in.exact ? n - m : n - m - 1;

    SideResult range_side = build_side(p, in_part, m, in.exact, a);
    SideResult kernel_side = build_side(q, out_part, m_kernel, in.exact, a);

    std::vector<Microstate> ms;
    ms.reserve(n);
    for (auto &v : range_side.microstates) {
        ms.emplace_back(StateVector(std::move(v)));
    }
    for (auto &v : kernel_side.microstates) {
        ms.emplace_back(StateVector(std::move(v)));
    }
    if (!in.exact) {
        CVector cat = CVector::Zero(psi.amplitudes().size());
        if (range_side.residue) {
            cat += *range_side.residue;
        }
        if (kernel_side.residue) {
            cat += *kernel_side.residue;
        }
        ms.emplace_back(StateVector(std::move(cat)));
    }
    if (ms.size() != n) {
        throw ExpansionError("adapted_expand: allotted " + std::to_string(ms.size()) +
                             " microstates for n = " + std::to_string(n));
    }

    AdaptedExpansion ae{Expansion(psi, std::move(ms)), {Target{"P", p}}, {}, {}, {}, {}, {}};
    classify_all(ae);
    ae.verification = verify_expansion(ae.expansion);
    return ae;
}

AdaptedExpansion product_adapted_expand(const StateVector &psi,
                                        const std::vector<LabeledProjector> &alice,
                                        const std::vector<LabeledProjector> &bob,
                                        std::size_t n) {
    require_family(alice, "Alice");
    require_family(bob, "Bob");
    const std::size_t d_a = alice.front().projector.dim();
    const std::size_t d_b = bob.front().projector.dim();
    if (psi.dim() != d_a * d_b) {
        throw DimensionError("product_adapted_expand: state is not on the joint space");
    }
    const std::size_t branch_total = alice.size() * bob.size();
    if (n < branch_total) {
        throw PreconditionError("product_adapted_expand: n must be at least the number "
                                "of branches");
    }
    const double norm2 = psi.norm_squared();
    if (norm2 == 0.0) {
        throw PreconditionError("product_adapted_expand: zero state");
    }
    const double a = std::sqrt(norm2 / static_cast<double>(n));

    struct Residue {
        OutcomeLabel label;
        CVector vector;
    };
    std::vector<Microstate> ms;
    std::vector<Residue> residues;
    std::vector<Target> targets;

    for (const auto &pa : alice) {
        for (const auto &pb : bob) {
            const OutcomeLabel label{pa.outcome, pb.outcome};
            const Projector branch = tensor(pa.projector, pb.projector);
            targets.push_back(Target{to_string(label), branch});
            const CVector phi = branch.apply(psi).amplitudes();
            const double c = phi.norm();
            if (c == 0.0) {
                continue;
            }
            const double t = phi.squaredNorm() / norm2 * static_cast<double>(n);
            const auto plan = plan_branch(t, n, pa.projector.rank(), pb.projector.rank());
            if (!plan.grid) {
                residues.push_back({label, phi});
                continue;
            }
            const auto terms = schmidt(StateVector(phi), d_a, d_b);
            if (terms.size() > 1) {
                throw ExpansionError("product_adapted_expand: branch " + to_string(label) +
                                     " has Schmidt rank " + std::to_string(terms.size()));
            }
            const CVector u_hat = terms.front().left.amplitudes();
            const CVector v_hat = terms.front().right.amplitudes();
            // Absorb the Schmidt phase into the right factor.
            const Complex overlap = CVector(StateVector(phi).amplitudes()).dot(
                tensor(terms.front().left, terms.front().right).amplitudes());
            const Complex phase = std::conj(overlap) / std::abs(overlap);
            const CVector v_unit = phase * v_hat;

            const std::size_t k = plan.count;
            const auto &grid = plan.grid;
            const Allotment al{k, plan.exact};
            std::vector<CVector> basis_a;
            std::vector<CVector> basis_b;
            double g = c;
            if (al.exact) {
                basis_a.push_back(u_hat);
                auto ea = householder_frame(pa.projector, u_hat, grid->k_alice - 1);
                basis_a.insert(basis_a.end(), ea.begin(), ea.end());
                basis_b.push_back(v_unit);
                auto eb = householder_frame(pb.projector, v_unit, grid->k_bob - 1);
                basis_b.insert(basis_b.end(), eb.begin(), eb.end());
            } else {
                g = a * std::sqrt(static_cast<double>(k));
                if (grid->residue_on_alice) {
                    auto ea = householder_frame(pa.projector, u_hat, grid->k_alice);
                    auto [carved, rest] = carve(c, u_hat, ea.front(), g);
                    basis_a.push_back(carved);
                    basis_a.insert(basis_a.end(), ea.begin() + 1, ea.end());
                    basis_b.push_back(v_unit);
                    auto eb = householder_frame(pb.projector, v_unit, grid->k_bob - 1);
                    basis_b.insert(basis_b.end(), eb.begin(), eb.end());
                    residues.push_back({label, tensor(StateVector(rest), StateVector(v_unit))
                                                   .amplitudes()});
                } else {
                    auto eb = householder_frame(pb.projector, v_unit, grid->k_bob);
                    auto [carved, rest] = carve(c, v_unit, eb.front(), g);
                    basis_b.push_back(carved);
                    basis_b.insert(basis_b.end(), eb.begin() + 1, eb.end());
                    basis_a.push_back(u_hat);
                    auto ea = householder_frame(pa.projector, u_hat, grid->k_alice - 1);
                    basis_a.insert(basis_a.end(), ea.begin(), ea.end());
                    residues.push_back({label, tensor(StateVector(u_hat), StateVector(rest))
                                                   .amplitudes()});
                }
            }
            const auto us = fourier_split(basis_a, 1.0);
            const auto vs = fourier_split(basis_b, 1.0);
            for (const auto &ui : us) {
                for (const auto &vj : vs) {
                    ms.emplace_back(ProductParts{StateVector(CVector(g * ui)), StateVector(vj)},
                                    label);
                }
            }
        }
    }

    // Fold residues into cat microstates, grouped by Alice outcome when each
    // group carries an integral number of microstates (the cats are then
    // eigenstates of Alice's outcome projectors), else by Bob outcome, else
    // all together.
    const double a2 = a * a;
    auto group_ok = [&](auto key) {
        std::map<int, double> mass;
        for (const auto &r : residues) {
            mass[key(r.label)] += r.vector.squaredNorm() / a2;
        }
        return std::all_of(mass.begin(), mass.end(), [](const auto &kv) {
            return std::abs(kv.second - std::round(kv.second)) <= kGroupSnap;
        });
    };
    std::function<int(const OutcomeLabel &)> key = [](const OutcomeLabel &) { return 0; };
    enum class Grouping { Alice, Bob, All } grouping = Grouping::All;
    if (group_ok([](const OutcomeLabel &l) { return l.alice; })) {
        key = [](const OutcomeLabel &l) { return l.alice; };
        grouping = Grouping::Alice;
    } else if (group_ok([](const OutcomeLabel &l) { return l.bob; })) {
        key = [](const OutcomeLabel &l) { return l.bob; };
        grouping = Grouping::Bob;
    }
    std::map<int, std::vector<const Residue *>> groups;
    for (const auto &r : residues) {
        groups[key(r.label)].push_back(&r);
    }
    for (const auto &[group_key, members] : groups) {
        CVector total = CVector::Zero(psi.amplitudes().size());
        for (const auto *r : members) {
            total += r->vector;
        }
        const double mass = total.squaredNorm() / a2;
        const auto cats = static_cast<std::size_t>(std::llround(mass));
        if (cats == 0) {
            continue;
        }
        std::vector<CVector> frame{total / total.norm()};
        std::size_t pos = 0;
        gram_schmidt_extend(frame, cats, {}, [&]() -> std::optional<CVector> {
            if (pos < members.size()) {
                return members[pos++]->vector;
            }
            return std::nullopt;
        });
        if (frame.size() < cats) {
            // Fresh directions in the group's subspace, orthogonal to every
            // microstate already placed there.
            Projector group_projector = Projector::identity(psi.dim());
            for (const auto &lp : alice) {
                if (grouping == Grouping::Alice && lp.outcome == group_key) {
                    group_projector = embed_left(lp.projector, d_b);
                }
            }
            for (const auto &lp : bob) {
                if (grouping == Grouping::Bob && lp.outcome == group_key) {
                    group_projector = embed_right(d_a, lp.projector);
                }
            }
            std::vector<CVector> against;
            for (const auto &m : ms) {
                if (key(*m.branch_label()) == group_key) {
                    against.push_back(m.vector().amplitudes());
                }
            }
            std::size_t cand = 0;
            gram_schmidt_extend(frame, cats, against, [&]() -> std::optional<CVector> {
                if (cand < group_projector.rank()) {
                    return group_projector.range_vector(cand++).amplitudes();
                }
                return std::nullopt;
            });
            if (frame.size() < cats) {
                throw ExpansionError("product_adapted_expand: no room for cat microstates");
            }
        }
        for (auto &v : fourier_split(frame, total.norm())) {
            ms.emplace_back(StateVector(std::move(v)));
        }
    }
    if (ms.size() != n) {
        throw ExpansionError("product_adapted_expand: allotted " + std::to_string(ms.size()) +
                             " microstates for n = " + std::to_string(n));
    }

    AdaptedExpansion ae{Expansion(psi, std::move(ms)), std::move(targets), {}, {}, {},
                        alice, bob};
    classify_all(ae);
    ae.verification = verify_expansion(ae.expansion);
    return ae;
}

std::array<std::size_t, 4> branch_counts(const AdaptedExpansion &ae) {
    std::array<std::size_t, 4> counts{};
    for (const auto &m : ae.expansion.microstates()) {
        if (const auto &l = m.branch_label()) {
            ++counts[cell_index(*l)];
        }
    }
    return counts;
}

} // namespace lmany
