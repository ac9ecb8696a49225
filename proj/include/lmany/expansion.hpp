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
 * @file expansion.hpp
 * Equiamplitude expansions: sets of n pairwise-orthogonal microstates of
 * equal norm that sum to a given state, optionally adapted to a projector or
 * to a family of product projectors.
 *
 * All constructions mix an orthonormal frame with the discrete-Fourier
 * matrix. Its first row is all ones, so the microstates sum to the first
 * frame direction scaled by the total norm; its columns are orthonormal, so
 * the microstates are orthogonal with equal norms.
 */
#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "lmany/linalg.hpp"

namespace lmany {

/// Classification tolerance for eigenstate tests.
inline constexpr double kClassificationTolerance = 1e-9;

enum class Classification { InRange, InKernel, Cat };

std::string to_string(Classification c);

/// Joint outcome (s, t) with s, t ∈ {+1, -1}.
struct OutcomeLabel {
    int alice = 1;
    int bob = 1;

    friend bool operator==(const OutcomeLabel &, const OutcomeLabel &) = default;
};

/// "++", "+-", "-+" or "--".
std::string to_string(const OutcomeLabel &label);

/// Index of a label in the order ++, +-, -+, --.
std::size_t cell_index(const OutcomeLabel &label);
OutcomeLabel cell_label(std::size_t index);

struct ProductParts {
    StateVector left;
    StateVector right;
};

/**
 * One vector of an expansion. Product-form microstates keep only their
 * factors; `vector()` materializes them on demand.
 */
class Microstate {
  public:
    explicit Microstate(StateVector vector,
                        std::optional<OutcomeLabel> label = std::nullopt);
    Microstate(ProductParts parts, std::optional<OutcomeLabel> label);

    [[nodiscard]] StateVector vector() const;
    [[nodiscard]] std::size_t dim() const;
    [[nodiscard]] double norm() const;
    [[nodiscard]] const std::optional<ProductParts> &product_parts() const {
        return parts_;
    }
    [[nodiscard]] const std::optional<OutcomeLabel> &branch_label() const {
        return label_;
    }

  private:
    std::optional<StateVector> dense_;
    std::optional<ProductParts> parts_;
    std::optional<OutcomeLabel> label_;
};

Complex inner_product(const Microstate &x, const Microstate &y);
double distance(const Microstate &x, const Microstate &y);
StateVector apply(const Projector &p, const Microstate &m);

/// InRange iff ‖Pξ − ξ‖ ≤ ε‖ξ‖, InKernel iff ‖Pξ‖ ≤ ε‖ξ‖, else Cat.
Classification classify(const StateVector &xi, const Projector &p,
                        double eps = kClassificationTolerance);
Classification classify(const Microstate &xi, const Projector &p,
                        double eps = kClassificationTolerance);

class Expansion {
  public:
    Expansion(StateVector parent, std::vector<Microstate> microstates);

    [[nodiscard]] const StateVector &parent() const { return parent_; }
    [[nodiscard]] const std::vector<Microstate> &microstates() const {
        return microstates_;
    }
    [[nodiscard]] std::size_t size() const { return microstates_.size(); }
    /// a = ‖ψ‖ / √n.
    [[nodiscard]] double amplitude() const { return amplitude_; }

  private:
    StateVector parent_;
    std::vector<Microstate> microstates_;
    double amplitude_ = 0.0;
};

struct VerificationTolerances {
    double overlap = 1e-10;        ///< relative to a²
    double norm = 1e-10;           ///< relative to a
    double reconstruction = 1e-8;  ///< relative to ‖ψ‖
};

struct VerificationReport {
    double max_overlap = 0.0;
    double max_norm_deviation = 0.0;
    double reconstruction_error = 0.0;
    bool passed = false;
};

VerificationReport verify_expansion(const Expansion &e,
                                    const VerificationTolerances &tol = {});
/// One tolerance applied to overlap, norm and reconstruction checks.
VerificationReport verify_expansion(const Expansion &e, double tol);

struct Target {
    std::string label;
    Projector projector;
};

struct TargetCounts {
    std::size_t in_range = 0;
    std::size_t in_kernel = 0;
    std::size_t cat = 0;
};

struct LabeledProjector {
    int outcome = 1;
    Projector projector;
};

/**
 * An expansion together with the projectors it was adapted to, the
 * classification of every microstate against each of them, and the
 * verification performed at construction.
 */
struct AdaptedExpansion {
    Expansion expansion;
    std::vector<Target> targets;
    std::vector<std::vector<Classification>> classification; // [target][microstate]
    std::vector<TargetCounts> counts;                       // per target
    VerificationReport verification;
    // Present for product-adapted expansions.
    std::vector<LabeledProjector> alice_family;
    std::vector<LabeledProjector> bob_family;

    [[nodiscard]] std::size_t n() const { return expansion.size(); }
    [[nodiscard]] std::size_t cat_count() const;
    [[nodiscard]] std::optional<std::size_t> target_index(const std::string &label) const;
};

class ExpansionError : public Error {
  public:
    using Error::Error;
};

/**
 * Expansion of ψ into n microstates spanning an n-dimensional subspace that
 * contains ψ. The frame starts at ψ/‖ψ‖ and is completed by Gram–Schmidt
 * over `subspace_seed` followed by the standard basis.
 */
Expansion equiamplitude_expand(const StateVector &psi, std::size_t n,
                               const std::vector<StateVector> &subspace_seed = {});

/**
 * Expansion of ψ adapted to P with m = ⌊pn⌋ microstates in range(P),
 * m' = ⌊(1−p)n⌋ in its kernel and at most one Schrödinger-cat microstate
 * absorbing both residues, where p = ‖Pψ‖²/‖ψ‖².
 */
AdaptedExpansion adapted_expand(const StateVector &psi, const Projector &p,
                                std::size_t n);

/**
 * Expansion of a bipartite ψ into product microstates adapted to every
 * joint projector Π_s ⊗ Π_t of two local outcome families. Each branch
 * (Π_s ⊗ Π_t)ψ must have Schmidt rank at most one; it receives a k_A × k_B
 * grid of product microstates and its residue is folded into cat
 * microstates.
 */
AdaptedExpansion product_adapted_expand(const StateVector &psi,
                                        const std::vector<LabeledProjector> &alice,
                                        const std::vector<LabeledProjector> &bob,
                                        std::size_t n);

/// Product microstates a branch of Born weight `weight` receives among n
/// when its local projectors have the given ranks.
std::size_t product_branch_allotment(double weight, std::size_t n, std::size_t rank_alice,
                                     std::size_t rank_bob);

/// Number of microstates allotted to each branch, in ++, +-, -+, -- order.
std::array<std::size_t, 4> branch_counts(const AdaptedExpansion &ae);

} // namespace lmany
