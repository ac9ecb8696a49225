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

#include "lmany/hidden_variable.hpp"

#include <cmath>
#include <numbers>

namespace lmany {

namespace {

const Projector &plus_projector(const std::vector<LabeledProjector> &family) {
    for (const auto &lp : family) {
        if (lp.outcome == 1) {
            return lp.projector;
        }
    }
    throw PreconditionError("outcome family has no +1 projector");
}

std::size_t alice_plus_count(const AdaptedExpansion &ae) {
    const Projector &plus = plus_projector(ae.alice_family);
    const std::size_t d_b = ae.bob_family.front().projector.dim();
    std::optional<Projector> embedded;
    std::size_t count = 0;
    for (const auto &m : ae.expansion.microstates()) {
        Classification c;
        if (const auto &parts = m.product_parts();
            parts && parts->left.dim() == plus.dim()) {
            c = classify(parts->left, plus);
        } else {
            if (!embedded) {
                embedded = embed_left(plus, d_b);
            }
            c = classify(m, *embedded);
        }
        count += c == Classification::InRange ? 1 : 0;
    }
    return count;
}

bool contains_match(const Ensemble &set, const Microstate &m, double tol) {
    return std::any_of(set.begin(), set.end(), [&](const Microstate &x) {
        return x.dim() == m.dim() &&
               distance(x, m) <= tol * std::max({x.norm(), m.norm(), 1e-300});
    });
}

} // namespace

bool Context::same_as(const Context &other, double tol) const {
    return (a - other.a).norm() <= tol && (b - other.b).norm() <= tol;
}

Context SettingGrid::context(int alice, int bob) const {
    return Context{alice == 0 ? a : a_prime, bob == 0 ? b : b_prime};
}

// ---------------------------------------------------------------------------

LambdaOneModel::LambdaOneModel(const AdaptedExpansion &ae, Context ctx)
    : context_(std::move(ctx)) {
    if (ae.alice_family.empty() || ae.bob_family.empty()) {
        throw PreconditionError("lambda_one_model: expansion carries no branch labels");
    }
    if (!ae.verification.passed) {
        throw PreconditionError("lambda_one_model: expansion failed verification");
    }
    labels_.reserve(ae.n());
    for (const auto &m : ae.expansion.microstates()) {
        labels_.push_back(m.branch_label());
    }
}

Lambda LambdaOneModel::draw(CounterRng &rng) const {
    return static_cast<std::size_t>(rng.below(labels_.size()));
}

Evaluation LambdaOneModel::evaluate(const Lambda &lambda, const Context &ctx) const {
    if (!ctx.same_as(context_)) {
        return Evaluation{Evaluation::Kind::ContextBound, {}};
    }
    const auto *index = std::get_if<std::size_t>(&lambda);
    if (index == nullptr || *index >= labels_.size()) {
        throw PreconditionError("lambda-one: lambda is not a microstate index");
    }
    const auto &label = labels_[*index];
    if (!label) {
        return Evaluation{Evaluation::Kind::Cat, {}};
    }
    return Evaluation{Evaluation::Kind::Definite, *label};
}

LambdaOneModel lambda_one_model(const AdaptedExpansion &ae, const Context &ctx) {
    return LambdaOneModel(ae, ctx);
}

Evaluation LocalBaselineModel::evaluate(const Lambda &lambda, const Context &ctx) const {
    const auto *v = std::get_if<Vec3>(&lambda);
    if (v == nullptr) {
        throw PreconditionError("local-baseline: lambda is not a direction");
    }
    const int s = ctx.a.dot(*v) >= 0.0 ? 1 : -1;
    const int t = ctx.b.dot(*v) >= 0.0 ? -1 : 1;
    return Evaluation{Evaluation::Kind::Definite, OutcomeLabel{s, t}};
}

std::array<double, 4> LocalBaselineModel::joint(const Context &ctx) {
    // Equal signs of a·λ and b·λ occur on a sphere fraction 1 − θ/π.
    const double theta = angle_between(ctx.a, ctx.b);
    const double same = (std::numbers::pi - theta) / (2.0 * std::numbers::pi);
    const double diff = theta / (2.0 * std::numbers::pi);
    return {diff, same, same, diff};
}

double LocalBaselineModel::correlation(const Context &ctx) {
    return -1.0 + 2.0 * angle_between(ctx.a, ctx.b) / std::numbers::pi;
}

LocalBaselineModel local_baseline(const Context &ctx) { return LocalBaselineModel(ctx); }

// ---------------------------------------------------------------------------

double EmpiricalJoint::estimate(std::size_t cell) const {
    const auto n = labeled();
    return n == 0 ? 0.0 : static_cast<double>(counts.at(cell)) / static_cast<double>(n);
}

double EmpiricalJoint::std_error(std::size_t cell) const {
    const auto n = labeled();
    if (n == 0) {
        return 0.0;
    }
    const double p = estimate(cell);
    return std::sqrt(p * (1.0 - p) / static_cast<double>(n));
}

EmpiricalJoint monte_carlo(const HiddenVariableModel &model, std::uint64_t trials,
                           std::uint64_t seed) {
    if (trials == 0) {
        throw PreconditionError("monte_carlo: trials must be at least 1");
    }
    EmpiricalJoint ej;
    ej.trials = trials;
    ej.seed = seed;
    for (std::uint64_t i = 0; i < trials; ++i) {
        CounterRng rng(seed, i);
        const auto ev = model.evaluate(model.draw(rng), model.context());
        switch (ev.kind) {
        case Evaluation::Kind::Definite:
            ++ej.counts[cell_index(ev.outcome)];
            break;
        case Evaluation::Kind::Cat:
            ++ej.cat_hits;
            break;
        case Evaluation::Kind::ContextBound:
            throw Error("monte_carlo: model is not defined at its own context");
        }
    }
    return ej;
}

ExactAverage exact_average(const HiddenVariableModel &model) {
    const auto size = model.finite_size();
    if (!size) {
        throw PreconditionError("exact_average: model has no finite lambda space");
    }
    std::array<std::size_t, 4> counts{};
    std::size_t cats = 0;
    for (std::size_t i = 0; i < *size; ++i) {
        const auto ev = model.evaluate(Lambda{i}, model.context());
        if (ev.kind == Evaluation::Kind::Definite) {
            ++counts[cell_index(ev.outcome)];
        } else {
            ++cats;
        }
    }
    ExactAverage out;
    out.n = *size;
    const auto den = static_cast<std::int64_t>(*size);
    for (std::size_t c = 0; c < 4; ++c) {
        out.cells[c] = Rational(static_cast<std::int64_t>(counts[c]), den);
    }
    out.cat_mass = Rational(static_cast<std::int64_t>(cats), den);
    return out;
}

// ---------------------------------------------------------------------------

CorrespondenceReport ensemble_correspondence(const AdaptedExpansion &first,
                                             const AdaptedExpansion &second) {
    if (first.alice_family.empty() || second.alice_family.empty()) {
        throw PreconditionError("ensemble_correspondence: expansions are not product-adapted");
    }
    if (first.n() != second.n()) {
        throw PreconditionError("ensemble_correspondence: microstate counts differ");
    }
    const auto &psi = first.expansion.parent();
    if (psi.dim() != second.expansion.parent().dim() ||
        distance(psi, second.expansion.parent()) > kDefaultTolerance * psi.norm()) {
        throw PreconditionError("ensemble_correspondence: parent states differ");
    }
    if (!plus_projector(first.alice_family)
             .same_subspace(plus_projector(second.alice_family))) {
        throw PreconditionError("ensemble_correspondence: Alice settings differ");
    }
    CorrespondenceReport r;
    r.alice_plus_first = alice_plus_count(first);
    r.alice_plus_second = alice_plus_count(second);
    r.marginal_counts_equal = r.alice_plus_first == r.alice_plus_second;
    const double a = first.expansion.amplitude();
    for (const auto &x : first.expansion.microstates()) {
        for (const auto &y : second.expansion.microstates()) {
            if (distance(x, y) <= kDefaultTolerance * a) {
                ++r.shared_microstates;
                break;
            }
        }
    }
    r.disjoint = r.shared_microstates == 0;
    return r;
}

std::string to_string(LambdaVerdict v) {
    switch (v) {
    case LambdaVerdict::Factorizable:
        return "factorizable";
    case LambdaVerdict::NotFactorizable:
        return "not-factorizable";
    case LambdaVerdict::ContextBound:
        return "context-bound";
    }
    return "unknown";
}

FactorizabilityReport factorizability_check(const HiddenVariableModel &model,
                                            const SettingGrid &grid, std::size_t samples,
                                            std::uint64_t seed) {
    std::vector<Lambda> lambdas;
    if (const auto size = model.finite_size()) {
        for (std::size_t i = 0; i < *size; ++i) {
            lambdas.emplace_back(i);
        }
    } else {
        for (std::size_t i = 0; i < samples; ++i) {
            CounterRng rng(seed, i);
            lambdas.push_back(model.draw(rng));
        }
    }
    FactorizabilityReport r;
    r.verdicts.reserve(lambdas.size());
    for (const auto &lambda : lambdas) {
        std::array<std::array<OutcomeLabel, 2>, 2> out{};
        bool bound = false;
        for (int i = 0; i < 2 && !bound; ++i) {
            for (int j = 0; j < 2 && !bound; ++j) {
                const auto ev = model.evaluate(lambda, grid.context(i, j));
                if (ev.kind != Evaluation::Kind::Definite) {
                    bound = true;
                }
                out[i][j] = ev.outcome;
            }
        }
        LambdaVerdict v = LambdaVerdict::ContextBound;
        if (!bound) {
            const bool s_local = out[0][0].alice == out[0][1].alice &&
                                 out[1][0].alice == out[1][1].alice;
            const bool t_local =
                out[0][0].bob == out[1][0].bob && out[0][1].bob == out[1][1].bob;
            v = s_local && t_local ? LambdaVerdict::Factorizable
                                   : LambdaVerdict::NotFactorizable;
        }
        r.verdicts.push_back(v);
        switch (v) {
        case LambdaVerdict::Factorizable:
            ++r.factorizable;
            break;
        case LambdaVerdict::NotFactorizable:
            ++r.not_factorizable;
            break;
        case LambdaVerdict::ContextBound:
            ++r.context_bound;
            break;
        }
    }
    return r;
}

IndependenceReport measurement_independence_check(const EnsembleFactory &factory,
                                                  const SettingGrid &grid, double tol) {
    const Ensemble reference = factory(grid.context(0, 0));
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            if (i == 0 && j == 0) {
                continue;
            }
            const Ensemble other = factory(grid.context(i, j));
            bool same = other.size() == reference.size();
            for (std::size_t k = 0; same && k < other.size(); ++k) {
                same = contains_match(reference, other[k], tol);
            }
            if (!same) {
                return IndependenceReport{
                    false, "ensemble depends on (a,b): retrocausal bookkeeping"};
            }
        }
    }
    return IndependenceReport{true, "ensemble identical across settings"};
}

EnsembleFactory baseline_ensemble_factory(std::uint64_t seed, std::size_t size) {
    return [seed, size](const Context &) {
        Ensemble out;
        out.reserve(size);
        for (std::size_t i = 0; i < size; ++i) {
            CounterRng rng(seed, i);
            const Vec3 v = rng.unit_vector();
            out.emplace_back(StateVector{v.x(), v.y(), v.z()});
        }
        return out;
    };
}

} // namespace lmany
