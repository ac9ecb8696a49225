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
 * @file lambda_many.hpp
 * Microstate counting: the probability of P is the fraction of microstates
 * lying in range(P). Microstates that are not eigenstates of P turn the
 * fraction into an interval [in/n, (n − kernel)/n].
 */
#pragma once

#include <cstdint>
#include <vector>

#include <boost/rational.hpp>

#include "lmany/expansion.hpp"

namespace lmany {

using Rational = boost::rational<std::int64_t>;

double to_double(const Rational &r);

struct ImpreciseProbability {
    Rational lower;
    Rational upper;
    std::size_t n = 0;
    std::size_t cat_count = 0;

    [[nodiscard]] Rational width() const { return upper - lower; }
    [[nodiscard]] bool is_precise() const { return lower == upper; }
    /// lower − slack ≤ x ≤ upper + slack.
    [[nodiscard]] bool contains(double x, double slack = 1e-12) const;
};

/// Bounds from eigenstate tallies.
ImpreciseProbability bounds_from_counts(std::size_t in_range, std::size_t in_kernel,
                                        std::size_t n);

/// Uses the stored classification when P is one of the expansion's targets,
/// otherwise classifies every microstate. Throws PreconditionError if the
/// expansion failed verification.
ImpreciseProbability probability_bounds(const AdaptedExpansion &ae, const Projector &p);
ImpreciseProbability probability_bounds(const AdaptedExpansion &ae, std::size_t target);
/// Any verified expansion; every microstate is classified against P.
ImpreciseProbability probability_bounds(const Expansion &e, const Projector &p);

/// ‖Pψ‖² / ‖ψ‖².
double born_quantity(const StateVector &psi, const Projector &p);

struct ContainmentReport {
    ImpreciseProbability bounds;
    double born = 0.0;
    bool contained = false;
};

ContainmentReport containment_check(const StateVector &psi, const Projector &p,
                                    std::size_t n);

struct SweepPoint {
    ImpreciseProbability bounds;
    double born = 0.0;
};

/// One adapted expansion per entry of a strictly increasing schedule.
std::vector<SweepPoint> convergence_sweep(const StateVector &psi, const Projector &p,
                                          const std::vector<std::size_t> &schedule);

/// Probability that a microstate's own ray receives within its expansion.
ImpreciseProbability microstate_probability(const Expansion &e, std::size_t index);

struct InvarianceReport {
    bool valid_expansion = false;         ///< {Uξ_j} is an expansion of Uψ
    bool classification_preserved = false; ///< against every commuting projector
    bool equiprobable = false;            ///< fixed microstate keeps 1/n
    VerificationReport verification;

    [[nodiscard]] bool passed() const {
        return valid_expansion && classification_preserved && equiprobable;
    }
};

/**
 * Transforms every microstate by U, which must fix the microstate at
 * `fixed_index` (PreconditionError otherwise). `commuting` lists projectors
 * that commute with U; the classification of every microstate against each
 * must survive the transformation.
 */
InvarianceReport invariance_test(const Expansion &e, const Unitary &u,
                                 std::size_t fixed_index,
                                 const std::vector<Projector> &commuting = {});

/**
 * Unitary sending ξ_j to ξ_{perm[j]} and acting as the identity on the
 * orthogonal complement of the expansion's span. Dense; small spaces only.
 */
Unitary permutation_unitary(const Expansion &e, const std::vector<std::size_t> &perm);

} // namespace lmany
