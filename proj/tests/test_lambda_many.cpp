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

#include <gtest/gtest.h>

#include <numeric>

#include "lmany/eprb.hpp"
#include "lmany/lambda_many.hpp"
#include "test_support.hpp"

using namespace lmany;
using namespace lmany::testing;

namespace {

StateVector e(std::size_t dim, std::size_t i) { return StateVector::basis(dim, i); }

StateVector third_state() { return e(8, 0) + e(8, 4) + e(8, 5); }

// ψ with weight num/den on range(P), rest in the kernel.
StateVector weighted_state(Rng &rng, const Projector &p, double weight) {
    const auto in = p.apply(random_state(rng, p.dim())).normalized();
    const auto out = p.complement().apply(random_state(rng, p.dim())).normalized();
    return Complex(std::sqrt(weight)) * in + Complex(std::sqrt(1.0 - weight)) * out;
}

void expect_interval_invariants(const ImpreciseProbability &ip) {
    EXPECT_GE(ip.lower, Rational(0));
    EXPECT_LE(ip.lower, ip.upper);
    EXPECT_LE(ip.upper, Rational(1));
    EXPECT_EQ(ip.width(), Rational(static_cast<std::int64_t>(ip.cat_count),
                                   static_cast<std::int64_t>(ip.n)));
}

} // namespace

TEST(ProbabilityBounds, ExactThird) {
    const auto p = coordinate_projector(8, 4);
    const auto ae = adapted_expand(third_state(), p, 3);
    const auto ip = probability_bounds(ae, p);
    EXPECT_EQ(ip.lower, Rational(1, 3));
    EXPECT_EQ(ip.upper, Rational(1, 3));
    EXPECT_TRUE(ip.is_precise());
    expect_interval_invariants(ip);
}

TEST(ProbabilityBounds, QuarterToHalfWithCat) {
    const auto p = coordinate_projector(8, 4);
    const auto ae = adapted_expand(third_state(), p, 4);
    const auto ip = probability_bounds(ae, p);
    EXPECT_EQ(ip.lower, Rational(1, 4));
    EXPECT_EQ(ip.upper, Rational(2, 4));
    EXPECT_EQ(ip.cat_count, 1u);
    EXPECT_EQ(ip.n, 4u);
    expect_interval_invariants(ip);
}

TEST(ProbabilityBounds, StateInRange) {
    Rng rng(40);
    const auto p = coordinate_projector(9, 5);
    const auto ae = adapted_expand(p.apply(random_state(rng, 9)), p, 5);
    const auto ip = probability_bounds(ae, p);
    EXPECT_EQ(ip.lower, Rational(1));
    EXPECT_EQ(ip.upper, Rational(1));
}

TEST(ProbabilityBounds, ByTargetIndexAgrees) {
    const auto p = coordinate_projector(8, 4);
    const auto ae = adapted_expand(third_state(), p, 4);
    const auto a = probability_bounds(ae, std::size_t{0});
    const auto b = probability_bounds(ae, p);
    EXPECT_EQ(a.lower, b.lower);
    EXPECT_EQ(a.upper, b.upper);
}

TEST(ProbabilityBounds, UnverifiedExpansionThrows) {
    Rng rng(41);
    const auto psi = random_state(rng, 6);
    auto ms = equiamplitude_expand(psi, 3).microstates();
    ms[0] = Microstate(Complex(1.5) * ms[0].vector());
    EXPECT_THROW(probability_bounds(Expansion(psi, ms), coordinate_projector(6, 2)),
                 PreconditionError);
}

TEST(ProbabilityBounds, OtherProjectorIsClassified) {
    // Bounds for the complement are the mirror image.
    const auto p = coordinate_projector(8, 4);
    const auto ae = adapted_expand(third_state(), p, 4);
    const auto ip = probability_bounds(ae, p.complement());
    EXPECT_EQ(ip.lower, Rational(1, 2));
    EXPECT_EQ(ip.upper, Rational(3, 4));
}

TEST(BoundsFromCounts, ExactArithmetic) {
    const auto ip = bounds_from_counts(2, 5, 9);
    EXPECT_EQ(ip.lower, Rational(2, 9));
    EXPECT_EQ(ip.upper, Rational(4, 9));
    EXPECT_EQ(ip.cat_count, 2u);
    EXPECT_THROW(bounds_from_counts(5, 5, 9), PreconditionError);
}

TEST(BornQuantity, Examples) {
    Rng rng(42);
    const auto p = coordinate_projector(8, 4);
    EXPECT_DOUBLE_EQ(born_quantity(p.apply(random_state(rng, 8)), p), 1.0);
    EXPECT_NEAR(born_quantity(third_state(), p), 1.0 / 3.0, 1e-15);
    const auto alice_up = embed_left(spin_projector(Vec3::UnitZ(), 1), 2);
    EXPECT_NEAR(born_quantity(singlet(), alice_up), 0.5, 1e-15);
    EXPECT_THROW(born_quantity(StateVector::zero(8), p), PreconditionError);
}

TEST(BornQuantity, MatchesDenseOracle) {
    Rng rng(43);
    for (int k = 0; k < 50; ++k) {
        const auto p = random_projector(rng, 10, 1 + k % 9);
        const auto psi = random_state(rng, 10);
        const double b = born_quantity(psi, p);
        EXPECT_NEAR(b, born_quantity_oracle(psi, p.matrix()), 1e-12);
        EXPECT_GE(b, 0.0);
        EXPECT_LE(b, 1.0);
    }
}

TEST(Containment, ThousandRandomCases) {
    Rng rng(44);
    for (int k = 0; k < 1000; ++k) {
        const std::size_t dim = 8 + rng() % 57;
        const std::size_t n = 2 + rng() % (dim / 2 - 2);
        const std::size_t rank = n + 1 + rng() % (dim - 2 * n - 1);
        const auto p = random_projector(rng, dim, rank);
        const auto psi = random_state(rng, dim);
        const auto report = containment_check(psi, p, n);
        EXPECT_TRUE(report.contained) << "case " << k;
        EXPECT_TRUE(report.bounds.contains(born_quantity_oracle(psi, p.matrix())));
        EXPECT_LE(report.bounds.cat_count, 1u);
        expect_interval_invariants(report.bounds);
    }
}

TEST(Containment, IntegralCasesArePrecise) {
    Rng rng(45);
    for (const auto &[num, den] : std::vector<std::pair<int, int>>{{1, 2}, {1, 4}, {3, 5}, {5, 8}}) {
        const auto p = random_projector(rng, 20, 9);
        const auto psi = weighted_state(rng, p, static_cast<double>(num) / den);
        const auto report = containment_check(psi, p, static_cast<std::size_t>(den));
        EXPECT_TRUE(report.bounds.is_precise());
        EXPECT_EQ(report.bounds.lower, Rational(num, den));
        EXPECT_NEAR(to_double(report.bounds.lower), report.born, 1e-12);
    }
}

TEST(Containment, TwoMicrostatesWithCat) {
    Rng rng(46);
    const auto p = random_projector(rng, 8, 4);
    const auto psi = weighted_state(rng, p, 0.3);
    const auto report = containment_check(psi, p, 2);
    EXPECT_EQ(report.bounds.lower, Rational(0));
    EXPECT_EQ(report.bounds.upper, Rational(1, 2));
    EXPECT_TRUE(report.contained);
}

TEST(ConvergenceSweep, ThirdIsExactThroughout) {
    const auto p = coordinate_projector(16, 8);
    const auto psi = e(16, 0) + e(16, 8) + e(16, 9);
    const auto sweep = convergence_sweep(psi, p, {3, 6, 12});
    ASSERT_EQ(sweep.size(), 3u);
    for (const auto &pt : sweep) {
        EXPECT_EQ(pt.bounds.width(), Rational(0));
        EXPECT_EQ(pt.bounds.lower, Rational(1, 3));
    }
}

TEST(ConvergenceSweep, IrrationalWeightInLargeSpace) {
    Rng rng(47);
    const auto p = coordinate_projector(2048, 1024);
    const auto psi = random_state(rng, 2048);
    const auto sweep = convergence_sweep(psi, p, {10, 100, 1000});
    ASSERT_EQ(sweep.size(), 3u);
    const double born = born_quantity_oracle(psi, p.matrix());
    for (const auto &pt : sweep) {
        EXPECT_LE(pt.bounds.width(), Rational(1, static_cast<std::int64_t>(pt.bounds.n)));
        EXPECT_TRUE(pt.bounds.contains(born));
        EXPECT_NEAR(pt.born, born, 1e-12);
    }
}

TEST(ConvergenceSweep, WidthsNonIncreasingUnderDivisibility) {
    Rng rng(48);
    const auto p = random_projector(rng, 80, 37);
    const auto psi = random_state(rng, 80);
    const auto sweep = convergence_sweep(psi, p, {2, 4, 8, 16, 32});
    for (std::size_t k = 1; k < sweep.size(); ++k) {
        EXPECT_LE(sweep[k].bounds.width(), sweep[k - 1].bounds.width());
        EXPECT_LE(sweep[k].bounds.lower, sweep[k].bounds.upper);
    }
}

TEST(ConvergenceSweep, ZeroWeight) {
    const auto p = coordinate_projector(12, 4);
    const auto sweep = convergence_sweep(e(12, 7), p, {2, 4, 8});
    for (const auto &pt : sweep) {
        EXPECT_EQ(pt.bounds.lower, Rational(0));
        EXPECT_EQ(pt.bounds.upper, Rational(0));
    }
}

TEST(ConvergenceSweep, RejectsBadSchedule) {
    const auto p = coordinate_projector(12, 4);
    EXPECT_THROW(convergence_sweep(e(12, 0), p, {4, 4}), PreconditionError);
    EXPECT_THROW(convergence_sweep(e(12, 0) + e(12, 6), p, {4, 40}), Error);
}

TEST(ExactIdentity, CatFreeExpansionsAgreeAcrossN) {
    Rng rng(49);
    const auto p = random_projector(rng, 40, 15);
    const auto psi = weighted_state(rng, p, 0.25);
    std::optional<Rational> first;
    for (std::size_t n : {4u, 8u, 12u, 20u}) {
        const auto ae = adapted_expand(psi, p, n);
        ASSERT_EQ(ae.cat_count(), 0u);
        const auto ip = probability_bounds(ae, p);
        ASSERT_TRUE(ip.is_precise());
        EXPECT_NEAR(to_double(ip.lower), born_quantity(psi, p), 1e-12);
        if (first) {
            EXPECT_EQ(ip.lower, *first);
        }
        first = ip.lower;
    }
}

TEST(ExactIdentity, IntervalsFromDifferentExpansionsOverlap) {
    Rng rng(50);
    for (int k = 0; k < 50; ++k) {
        const auto p = random_projector(rng, 30, 14);
        const auto psi = random_state(rng, 30);
        const auto x = probability_bounds(adapted_expand(psi, p, 5), p);
        const auto y = probability_bounds(adapted_expand(psi, p, 7), p);
        EXPECT_LE(x.lower, y.upper);
        EXPECT_LE(y.lower, x.upper);
    }
}

TEST(Equiprobability, EveryMicrostateGetsOneOverN) {
    Rng rng(51);
    const auto psi = random_state(rng, 10);
    const auto ex = equiamplitude_expand(psi, 6);
    for (std::size_t j = 0; j < 6; ++j) {
        const auto ip = microstate_probability(ex, j);
        EXPECT_EQ(ip.lower, Rational(1, 6));
        EXPECT_EQ(ip.upper, Rational(1, 6));
    }
}

TEST(Invariance, Identity) {
    Rng rng(52);
    const auto psi = random_state(rng, 8);
    const auto ex = equiamplitude_expand(psi, 4);
    const auto report = invariance_test(ex, Unitary::identity(8), 2,
                                        {coordinate_projector(8, 3)});
    EXPECT_TRUE(report.passed());
}

TEST(Invariance, PhaseRotationOnComplement) {
    Rng rng(53);
    for (int k = 0; k < 10; ++k) {
        const auto psi = random_state(rng, 8);
        const auto p = random_projector(rng, 8, 3);
        const auto ae = adapted_expand(psi, p, 4);
        const std::size_t fixed = 0;
        const CVector phi = ae.expansion.microstates()[fixed].vector().normalized().amplitudes();
        const CMatrix ray = phi * phi.adjoint();
        const Complex phase = std::polar(1.0, 0.7 + k);
        const CMatrix u = ray + phase * (CMatrix::Identity(8, 8) - ray);
        const auto report = invariance_test(ae.expansion, Unitary::from_matrix(u), fixed,
                                            {Projector::onto_span({StateVector(phi)})});
        EXPECT_TRUE(report.passed());
        EXPECT_TRUE(report.verification.passed);
    }
}

TEST(Invariance, PermutationOfOtherMicrostates) {
    Rng rng(54);
    const auto psi = random_state(rng, 9);
    const auto ex = equiamplitude_expand(psi, 5);
    std::vector<std::size_t> perm{0, 2, 3, 4, 1};
    const auto u = permutation_unitary(ex, perm);
    // The oracle: U sends ξ_j to ξ_perm[j].
    for (std::size_t j = 0; j < 5; ++j) {
        EXPECT_LT(distance(u.apply(ex.microstates()[j].vector()),
                           ex.microstates()[perm[j]].vector()),
                  1e-10);
    }
    const auto report = invariance_test(ex, u, 0);
    EXPECT_TRUE(report.passed());
    std::vector<Microstate> moved;
    for (const auto &m : ex.microstates()) {
        moved.emplace_back(u.apply(m.vector()));
    }
    const Expansion ux(u.apply(psi), moved);
    for (std::size_t j = 0; j < 5; ++j) {
        EXPECT_EQ(microstate_probability(ux, j).lower, Rational(1, 5));
    }
}

TEST(Invariance, RejectsUnitaryMovingTheMicrostate) {
    Rng rng(55);
    const auto psi = random_state(rng, 6);
    const auto ex = equiamplitude_expand(psi, 3);
    const auto u = permutation_unitary(ex, {1, 0, 2});
    EXPECT_THROW(invariance_test(ex, u, 0), PreconditionError);
}

TEST(Invariance, DetectsBrokenClassification) {
    // A unitary fixing ξ_0 but rotating the range of a non-commuting P.
    const auto psi = e(4, 0) + e(4, 2);
    const auto p = coordinate_projector(4, 2);
    const auto ae = adapted_expand(psi, p, 2);
    const auto fixed = ae.expansion.microstates()[0].vector();
    const auto moved = ae.expansion.microstates()[1].vector().normalized();
    // Swap ξ_1 with e2 or e4, whichever is outside span{ξ_0, ξ_1}.
    const StateVector other = std::abs(moved[1]) > 0.5 || std::abs(fixed[1]) > 0.5 ? e(4, 3)
                                                                                 : e(4, 1);
    const CVector a = moved.amplitudes();
    const CVector b = other.amplitudes();
    const CMatrix swap = CMatrix::Identity(4, 4) - a * a.adjoint() - b * b.adjoint() +
                         a * b.adjoint() + b * a.adjoint();
    const auto report = invariance_test(ae.expansion, Unitary::from_matrix(swap), 0, {p});
    EXPECT_TRUE(report.valid_expansion);
    EXPECT_FALSE(report.classification_preserved);
}
