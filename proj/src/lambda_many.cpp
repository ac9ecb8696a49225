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

#include "lmany/lambda_many.hpp"

#include <algorithm>
#include <cmath>

namespace lmany {

namespace {

bool identical(const Projector &p, const Projector &q) {
    if (p.dim() != q.dim() || p.factor_dims() != q.factor_dims() ||
        p.blocks().size() != q.blocks().size()) {
        return false;
    }
    for (std::size_t b = 0; b < p.blocks().size(); ++b) {
        const auto &pb = p.blocks()[b];
        const auto &qb = q.blocks()[b];
        if (pb.size() != qb.size()) {
            return false;
        }
        for (std::size_t f = 0; f < pb.size(); ++f) {
            if (pb[f].dim != qb[f].dim || pb[f].identity != qb[f].identity) {
                return false;
            }
            if (!pb[f].identity &&
                (pb[f].coords != qb[f].coords || pb[f].basis.cols() != qb[f].basis.cols() ||
                 pb[f].basis != qb[f].basis)) {
                return false;
            }
        }
    }
    return true;
}

void require_verified(const VerificationReport &r) {
    if (!r.passed) {
        throw PreconditionError("probability_bounds: expansion failed verification");
    }
}

} // namespace

double to_double(const Rational &r) {
    return static_cast<double>(r.numerator()) / static_cast<double>(r.denominator());
}

bool ImpreciseProbability::contains(double x, double slack) const {
    return to_double(lower) - slack <= x && x <= to_double(upper) + slack;
}

ImpreciseProbability bounds_from_counts(std::size_t in_range, std::size_t in_kernel,
                                        std::size_t n) {
    if (n == 0 || in_range + in_kernel > n) {
        throw PreconditionError("bounds_from_counts: inconsistent counts");
    }
    const auto den = static_cast<std::int64_t>(n);
    ImpreciseProbability ip;
    ip.lower = Rational(static_cast<std::int64_t>(in_range), den);
    ip.upper = Rational(static_cast<std::int64_t>(n - in_kernel), den);
    ip.n = n;
    ip.cat_count = n - in_range - in_kernel;
    return ip;
}

ImpreciseProbability probability_bounds(const AdaptedExpansion &ae, std::size_t target) {
    require_verified(ae.verification);
    if (target >= ae.targets.size()) {
        throw PreconditionError("probability_bounds: no such target");
    }
    const auto &c = ae.counts[target];
    return bounds_from_counts(c.in_range, c.in_kernel, ae.n());
}

ImpreciseProbability probability_bounds(const AdaptedExpansion &ae, const Projector &p) {
    require_verified(ae.verification);
    for (std::size_t t = 0; t < ae.targets.size(); ++t) {
        if (identical(ae.targets[t].projector, p)) {
            return probability_bounds(ae, t);
        }
    }
    return probability_bounds(ae.expansion, p);
}

ImpreciseProbability probability_bounds(const Expansion &e, const Projector &p) {
    if (p.dim() != e.parent().dim()) {
        throw DimensionError("probability_bounds: projector dimension mismatch");
    }
    require_verified(verify_expansion(e));
    std::size_t in = 0;
    std::size_t out = 0;
    for (const auto &m : e.microstates()) {
        switch (classify(m, p)) {
        case Classification::InRange:
            ++in;
            break;
        case Classification::InKernel:
            ++out;
            break;
        case Classification::Cat:
            break;
        }
    }
    return bounds_from_counts(in, out, e.size());
}

double born_quantity(const StateVector &psi, const Projector &p) {
    if (p.dim() != psi.dim()) {
        throw DimensionError("born_quantity: projector dimension mismatch");
    }
    const double norm2 = psi.norm_squared();
    if (norm2 == 0.0) {
        throw PreconditionError("born_quantity: zero state");
    }
    return std::clamp(p.apply(psi).norm_squared() / norm2, 0.0, 1.0);
}

ContainmentReport containment_check(const StateVector &psi, const Projector &p,
                                    std::size_t n) {
    const auto ae = adapted_expand(psi, p, n);
    ContainmentReport r;
    r.bounds = probability_bounds(ae, std::size_t{0});
    r.born = born_quantity(psi, p);
    r.contained = r.bounds.contains(r.born);
    return r;
}

std::vector<SweepPoint> convergence_sweep(const StateVector &psi, const Projector &p,
                                          const std::vector<std::size_t> &schedule) {
    if (!std::is_sorted(schedule.begin(), schedule.end()) ||
        std::adjacent_find(schedule.begin(), schedule.end()) != schedule.end()) {
        throw PreconditionError("convergence_sweep: schedule must be strictly increasing");
    }
    const double born = born_quantity(psi, p);
    std::vector<SweepPoint> out;
    out.reserve(schedule.size());
    for (const auto n : schedule) {
        const auto ae = adapted_expand(psi, p, n);
        out.push_back(SweepPoint{probability_bounds(ae, std::size_t{0}), born});
    }
    return out;
}

ImpreciseProbability microstate_probability(const Expansion &e, std::size_t index) {
    if (index >= e.size()) {
        throw PreconditionError("microstate_probability: index out of range");
    }
    const auto ray = Projector::onto_span({e.microstates()[index].vector()});
    return probability_bounds(e, ray);
}

InvarianceReport invariance_test(const Expansion &e, const Unitary &u,
                                 std::size_t fixed_index,
                                 const std::vector<Projector> &commuting) {
    if (fixed_index >= e.size()) {
        throw PreconditionError("invariance_test: index out of range");
    }
    if (u.dim() != e.parent().dim()) {
        throw DimensionError("invariance_test: unitary dimension mismatch");
    }
    const StateVector phi = e.microstates()[fixed_index].vector();
    if (distance(u.apply(phi), phi) > kDefaultTolerance * std::max(phi.norm(), 1.0)) {
        throw PreconditionError("invariance_test: U does not fix the designated microstate");
    }
    std::vector<Microstate> moved;
    moved.reserve(e.size());
    for (const auto &m : e.microstates()) {
        moved.emplace_back(u.apply(m.vector()), m.branch_label());
    }
    const Expansion transformed(u.apply(e.parent()), std::move(moved));

    InvarianceReport r;
    r.verification = verify_expansion(transformed);
    r.valid_expansion = r.verification.passed;
    r.classification_preserved = true;
    for (const auto &p : commuting) {
        for (std::size_t j = 0; j < e.size(); ++j) {
            if (classify(e.microstates()[j], p) !=
                classify(transformed.microstates()[j], p)) {
                r.classification_preserved = false;
            }
        }
    }
    if (r.valid_expansion) {
        const auto before = microstate_probability(e, fixed_index);
        const auto after = microstate_probability(transformed, fixed_index);
        const Rational share(1, static_cast<std::int64_t>(e.size()));
        r.equiprobable = before.is_precise() && after.is_precise() &&
                         before.lower == share && after.lower == share;
    }
    return r;
}

Unitary permutation_unitary(const Expansion &e, const std::vector<std::size_t> &perm) {
    const auto n = e.size();
    if (perm.size() != n) {
        throw PreconditionError("permutation_unitary: permutation has the wrong length");
    }
    std::vector<bool> seen(n, false);
    for (const auto j : perm) {
        if (j >= n || seen[j]) {
            throw PreconditionError("permutation_unitary: not a permutation");
        }
        seen[j] = true;
    }
    const auto dim = static_cast<Eigen::Index>(e.parent().dim());
    CMatrix units(dim, static_cast<Eigen::Index>(n));
    for (std::size_t j = 0; j < n; ++j) {
        units.col(static_cast<Eigen::Index>(j)) =
            e.microstates()[j].vector().normalized().amplitudes();
    }
    CMatrix m = CMatrix::Identity(dim, dim) - units * units.adjoint();
    for (std::size_t j = 0; j < n; ++j) {
        m += units.col(static_cast<Eigen::Index>(perm[j])) *
             units.col(static_cast<Eigen::Index>(j)).adjoint();
    }
    return Unitary::from_matrix(std::move(m), 1e-8);
}

} // namespace lmany
