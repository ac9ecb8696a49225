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
 * @file eprb.hpp
 * Two spins measured by Alice and Bob along one of two directions each.
 *
 * The full state is spin ⊗ ancilla on each side, ordered
 * spin_A ⊗ anc_A ⊗ spin_B ⊗ anc_B, with both ancillas in their first basis
 * state. Alice's outcome projectors are P_s^a ⊗ I on her 2·d_A-dimensional
 * factor, Bob's likewise. The ancillas supply the room that equiamplitude
 * expansions need.
 *
 * Three backends evaluate a context (a, b): Born (projector norms),
 * Counting (microstate fractions of a product-adapted expansion, as exact
 * rational intervals) and MonteCarlo (λ-ONE sampling).
 */
#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "lmany/expansion.hpp"
#include "lmany/hidden_variable.hpp"
#include "lmany/lambda_many.hpp"

namespace lmany {

enum class Backend { Born, Counting, MonteCarlo };

std::string to_string(Backend b);
std::optional<Backend> backend_from_string(const std::string &s);

/// (e1⊗e2 − e2⊗e1)/√2.
StateVector singlet();

struct EPRBScenario {
    SettingGrid settings;
    StateVector spin_state = singlet();
    std::size_t ancilla_a = 64;
    std::size_t ancilla_b = 64;
    std::size_t n = 0; ///< microstates per context; 0 picks suggest_n
    Backend backend = Backend::Born;
    std::uint64_t trials = 1'000'000;
    std::uint64_t seed = 0;
};

/// Planar settings from angles in degrees, measured from +z in the x-z plane.
SettingGrid planar_settings(double a_deg, double a_prime_deg, double b_deg,
                            double b_prime_deg);

/// Validates the scenario; throws PreconditionError.
void validate(const EPRBScenario &sc);

StateVector full_state(const EPRBScenario &sc);
std::vector<LabeledProjector> alice_family(const EPRBScenario &sc, int setting);
std::vector<LabeledProjector> bob_family(const EPRBScenario &sc, int setting);
/// Π_s^a ⊗ Π_t^b on the full space.
Projector branch_projector(const EPRBScenario &sc, int alice_setting, int bob_setting,
                           const OutcomeLabel &label);

/**
 * Smallest n in [n_min, n_max] at which every branch of all four contexts
 * receives exactly n·w microstates. Without such n, the one whose allotted
 * counts best reproduce the four correlations.
 */
std::size_t suggest_n(const EPRBScenario &sc, std::size_t n_min = 4,
                      std::size_t n_max = 512);

/// sc.n, or suggest_n when zero.
std::size_t resolved_n(const EPRBScenario &sc);

/// Product-adapted expansion of the full state for one context.
AdaptedExpansion context_expansion(const EPRBScenario &sc, int alice_setting,
                                   int bob_setting);

/// A probability or expectation with its uncertainty. Born values have
/// lower = upper = value. Counting values carry the exact interval; `value`
/// is the fraction among labeled microstates. Monte Carlo values carry a
/// standard error.
struct Quantity {
    double value = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    double std_error = 0.0;
    std::optional<Rational> exact_lower;
    std::optional<Rational> exact_upper;

    [[nodiscard]] bool is_exact() const {
        return exact_lower && exact_upper && *exact_lower == *exact_upper;
    }
};

struct JointDistribution {
    Backend backend = Backend::Born;
    std::array<Quantity, 4> cells; ///< ++, +-, -+, --
    Quantity cat_mass;
    std::size_t n = 0;
    std::uint64_t trials = 0;
    std::uint64_t seed = 0;
    std::string provenance;
};

JointDistribution joint_distribution(const EPRBScenario &sc, int alice_setting,
                                     int bob_setting);

struct Marginals {
    std::array<Quantity, 2> alice; ///< +1, −1
    std::array<Quantity, 2> bob;
};

/// Sums of the cells (normalized over labeled mass), with interval sums.
Marginals marginals(const JointDistribution &jd);

struct ConditionalDistribution {
    bool defined = false;        ///< false when p(t) = 0
    bool interval_valued = false; ///< conditioning event has cat mass
    std::array<Quantity, 2> alice;
};

/// Alice's distribution given Bob's outcome t.
ConditionalDistribution conditional(const JointDistribution &jd, int bob_outcome);

/// E = Σ s·t·p(s,t). Counting intervals come from the classification of
/// every microstate against Π_{++} + Π_{−−}.
Quantity correlation(const EPRBScenario &sc, int alice_setting, int bob_setting);

struct ChshValue {
    Quantity s;
    /// (a,b), (a,b′), (a′,b), (a′,b′).
    std::array<Quantity, 4> correlations;
};

/// S = |E(a,b) − E(a,b′) + E(a′,b) + E(a′,b′)|.
ChshValue chsh(const EPRBScenario &sc);
ChshValue combine_chsh(const std::array<Quantity, 4> &correlations);

enum class Verdict { Holds, Violated, WidthLimited, NotApplicable };

std::string to_string(Verdict v);

struct ConditionResult {
    std::string name;
    Verdict verdict = Verdict::NotApplicable;
    double lhs = 0.0;
    double rhs = 0.0;
    double deviation = 0.0;
    double tolerance = 0.0;
    std::string note;
};

struct ContextResult {
    int alice_setting = 0;
    int bob_setting = 0;
    JointDistribution joint;
    Quantity correlation;
    /// Computed from Π_s^a ⊗ I and I ⊗ Π_t^b alone.
    Marginals local;
};

struct ConditionReport {
    Backend backend = Backend::Born;
    std::vector<ConditionResult> conditions;
    ChshValue chsh;
    std::vector<ContextResult> contexts;

    [[nodiscard]] const ConditionResult &condition(const std::string &name) const;
};

/// Evaluates all four contexts once.
std::vector<ContextResult> evaluate_contexts(const EPRBScenario &sc);

ConditionReport condition_battery(const EPRBScenario &sc, double tolerance = 1e-9);

struct CompletenessDemo {
    std::size_t m_a = 0;
    std::size_t n_a = 0;
    std::size_t m_b = 0;
    std::size_t n_b = 0;
    std::size_t joint_count = 0; ///< grid microstates in range(P_A ⊗ P_B)
    Rational joint;
    Rational alice_marginal;
    Rational bob_marginal;
    bool factorizes = false;
    VerificationReport verification;
};

/**
 * Expands ϕ and χ separately (both must come out cat-free), forms the
 * n_a·n_b product grid and counts joint and marginal eigenstates.
 */
CompletenessDemo product_completeness_demo(const StateVector &phi, const StateVector &chi,
                                           const Projector &p_a, const Projector &p_b,
                                           std::size_t n_a, std::size_t n_b);

/// Photon in one of two boxes, boxes opened by Alice and Bob.
EPRBScenario photon_box();

struct PhotonBoxReport {
    double p_found_a = 0.0;
    double p_found_a_given_found_b = 0.0;
    double p_found_a_given_not_found_b = 0.0;
    double completeness_deviation = 0.0;
    ConditionReport battery;
};

PhotonBoxReport photon_box_scenario();

/// Ensemble factories for the measurement-independence check.
EnsembleFactory lambda_many_factory(const EPRBScenario &sc);
EnsembleFactory lambda_one_factory(const EPRBScenario &sc);

/**
 * Least-squares slope of log|E(θ) − E(0)| against log θ over `points`
 * geometrically spaced angles in [lo, hi] radians.
 */
double fit_exponent(const std::function<double(double)> &e, double lo, double hi,
                    std::size_t points = 40);

struct SweepRow {
    double theta_deg = 0.0;
    double e_born = 0.0;
    double e_counting_lo = 0.0;
    double e_counting_hi = 0.0;
    double e_mc = 0.0;
    double std_error = 0.0;
};

/// Correlation versus the angle between a and b = a rotated by θ in the
/// plane, for each backend.
std::vector<SweepRow> correlation_sweep(const EPRBScenario &sc,
                                        const std::vector<double> &thetas_deg);

} // namespace lmany
