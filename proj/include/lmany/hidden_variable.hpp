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
 * @file hidden_variable.hpp
 * Deterministic hidden-variable models. λ-ONE realizes one microstate of a
 * context-specific product-adapted expansion per trial; the local baseline
 * draws a unit vector and reads off outcome signs.
 */
#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "lmany/expansion.hpp"
#include "lmany/lambda_many.hpp"
#include "lmany/rng.hpp"

namespace lmany {

/// Alice's and Bob's measurement directions.
struct Context {
    Vec3 a = Vec3::UnitZ();
    Vec3 b = Vec3::UnitZ();

    [[nodiscard]] bool same_as(const Context &other, double tol = 1e-12) const;
};

/// Setting grid {a, a′} × {b, b′}.
struct SettingGrid {
    Vec3 a = Vec3::UnitZ();
    Vec3 a_prime = Vec3::UnitZ();
    Vec3 b = Vec3::UnitZ();
    Vec3 b_prime = Vec3::UnitZ();

    /// alice, bob ∈ {0, 1}; 1 selects the primed direction.
    [[nodiscard]] Context context(int alice, int bob) const;
};

/// A microstate index for finite models, a direction otherwise.
using Lambda = std::variant<std::size_t, Vec3>;

struct Evaluation {
    enum class Kind { Definite, Cat, ContextBound };
    Kind kind = Kind::Definite;
    OutcomeLabel outcome;
};

class HiddenVariableModel {
  public:
    virtual ~HiddenVariableModel() = default;

    [[nodiscard]] virtual std::string name() const = 0;
    /// Context the model was built for; Monte Carlo evaluates here.
    [[nodiscard]] virtual const Context &context() const = 0;
    /// Draws λ from the model's distribution.
    virtual Lambda draw(CounterRng &rng) const = 0;
    /// Outcome for λ at the given settings. Pure.
    [[nodiscard]] virtual Evaluation evaluate(const Lambda &lambda,
                                              const Context &ctx) const = 0;
    /// Size of a finite, uniformly weighted Λ.
    [[nodiscard]] virtual std::optional<std::size_t> finite_size() const {
        return std::nullopt;
    }
};

/**
 * λ-ONE: λ is a uniformly drawn microstate index of a product-adapted
 * expansion, and the outcome is its branch label. Cat microstates carry no
 * label. The expansion belongs to one context; asking about any other
 * context yields ContextBound.
 */
class LambdaOneModel final : public HiddenVariableModel {
  public:
    LambdaOneModel(const AdaptedExpansion &ae, Context ctx);

    [[nodiscard]] std::string name() const override { return "lambda-one"; }
    [[nodiscard]] const Context &context() const override { return context_; }
    Lambda draw(CounterRng &rng) const override;
    [[nodiscard]] Evaluation evaluate(const Lambda &lambda,
                                      const Context &ctx) const override;
    [[nodiscard]] std::optional<std::size_t> finite_size() const override {
        return labels_.size();
    }

  private:
    Context context_;
    std::vector<std::optional<OutcomeLabel>> labels_;
};

LambdaOneModel lambda_one_model(const AdaptedExpansion &ae, const Context &ctx);

/**
 * λ uniform on the unit sphere, s = sign(a·λ), t = −sign(b·λ). Zero
 * projections count as +1.
 */
class LocalBaselineModel final : public HiddenVariableModel {
  public:
    explicit LocalBaselineModel(Context ctx) : context_(std::move(ctx)) {}

    [[nodiscard]] std::string name() const override { return "local-baseline"; }
    [[nodiscard]] const Context &context() const override { return context_; }
    Lambda draw(CounterRng &rng) const override { return rng.unit_vector(); }
    [[nodiscard]] Evaluation evaluate(const Lambda &lambda,
                                      const Context &ctx) const override;

    /// Exact cell probabilities, ++, +-, -+, -- order.
    [[nodiscard]] static std::array<double, 4> joint(const Context &ctx);
    /// E = −1 + 2θ/π.
    [[nodiscard]] static double correlation(const Context &ctx);

  private:
    Context context_;
};

LocalBaselineModel local_baseline(const Context &ctx);

struct EmpiricalJoint {
    std::array<std::uint64_t, 4> counts{}; // ++, +-, -+, --
    std::uint64_t trials = 0;
    std::uint64_t cat_hits = 0;
    std::uint64_t seed = 0;

    /// Trials that produced an outcome.
    [[nodiscard]] std::uint64_t labeled() const { return trials - cat_hits; }
    /// Cell frequency among labeled trials.
    [[nodiscard]] double estimate(std::size_t cell) const;
    [[nodiscard]] double std_error(std::size_t cell) const;
};

/// Trial i draws from stream i of `seed`.
EmpiricalJoint monte_carlo(const HiddenVariableModel &model, std::uint64_t trials,
                           std::uint64_t seed);

struct ExactAverage {
    std::array<Rational, 4> cells; // count / n
    Rational cat_mass;
    std::size_t n = 0;
};

/// Exact average over a finite uniform Λ at the model's own context.
ExactAverage exact_average(const HiddenVariableModel &model);

struct CorrespondenceReport {
    std::size_t alice_plus_first = 0;
    std::size_t alice_plus_second = 0;
    bool marginal_counts_equal = false;
    std::size_t shared_microstates = 0;
    bool disjoint = false;
};

/**
 * Compares two product-adapted expansions of the same ψ and n that share
 * Alice's outcome family: Alice's +1 counts must agree, and the microstate
 * sets are compared for common members.
 */
CorrespondenceReport ensemble_correspondence(const AdaptedExpansion &first,
                                             const AdaptedExpansion &second);

enum class LambdaVerdict { Factorizable, NotFactorizable, ContextBound };

std::string to_string(LambdaVerdict v);

struct FactorizabilityReport {
    std::vector<LambdaVerdict> verdicts;
    std::size_t factorizable = 0;
    std::size_t not_factorizable = 0;
    std::size_t context_bound = 0;
};

/**
 * Evaluates each λ over the four contexts of `grid`: factorizable iff s
 * ignores Bob's setting and t ignores Alice's. Finite models check all of Λ;
 * others check `samples` draws from `seed`.
 */
FactorizabilityReport factorizability_check(const HiddenVariableModel &model,
                                            const SettingGrid &grid,
                                            std::size_t samples = 1000,
                                            std::uint64_t seed = 0);

using Ensemble = std::vector<Microstate>;
using EnsembleFactory = std::function<Ensemble(const Context &)>;

struct IndependenceReport {
    bool independent = false;
    std::string diagnostic;
};

/// True iff the factory returns the same ensemble, as a set, for every
/// context of the grid.
IndependenceReport measurement_independence_check(const EnsembleFactory &factory,
                                                  const SettingGrid &grid,
                                                  double tol = kDefaultTolerance);

/// Local-baseline ensemble: `size` seeded directions, whatever the context.
EnsembleFactory baseline_ensemble_factory(std::uint64_t seed, std::size_t size);

} // namespace lmany
