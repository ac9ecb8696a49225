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

#include <algorithm>

#include <boost/math/distributions/chi_squared.hpp>

#include "lmany/eprb.hpp"
#include "lmany/hidden_variable.hpp"
#include "test_support.hpp"

using namespace lmany;
using namespace lmany::testing;

namespace {

EPRBScenario singlet_at(double a_deg, double b_deg, std::size_t n, std::size_t ancilla = 4) {
    EPRBScenario sc;
    sc.settings = planar_settings(a_deg, a_deg, b_deg, b_deg);
    sc.ancilla_a = ancilla;
    sc.ancilla_b = ancilla;
    sc.n = n;
    return sc;
}

LambdaOneModel lambda_one_at(const EPRBScenario &sc) {
    return lambda_one_model(context_expansion(sc, 0, 0), sc.settings.context(0, 0));
}

// Analytic cells of the local baseline: P(s = t) = θ/π split evenly.
std::array<double, 4> baseline_oracle(double theta) {
    const double same = theta / (2.0 * std::numbers::pi);
    const double diff = (std::numbers::pi - theta) / (2.0 * std::numbers::pi);
    return {same, diff, diff, same};
}

// s follows Bob's direction: a signalling model.
class SignallingModel final : public HiddenVariableModel {
  public:
    explicit SignallingModel(Context ctx) : context_(std::move(ctx)) {}
    [[nodiscard]] std::string name() const override { return "signalling"; }
    [[nodiscard]] const Context &context() const override { return context_; }
    Lambda draw(CounterRng &rng) const override { return rng.unit_vector(); }
    [[nodiscard]] Evaluation evaluate(const Lambda &lambda,
                                      const Context &ctx) const override {
        const auto &l = std::get<Vec3>(lambda);
        const int s = ctx.b.dot(l) >= 0.0 ? 1 : -1;
        const int t = ctx.b.dot(l) >= 0.0 ? -1 : 1;
        return Evaluation{Evaluation::Kind::Definite, OutcomeLabel{s, t}};
    }

  private:
    Context context_;
};

} // namespace

TEST(LambdaOne, ParallelSingletHalfAndHalf) {
    const auto model = lambda_one_at(singlet_at(20.0, 20.0, 8));
    ASSERT_EQ(model.finite_size(), std::optional<std::size_t>(8));
    const auto avg = exact_average(model);
    EXPECT_EQ(avg.cells[0], Rational(0));
    EXPECT_EQ(avg.cells[1], Rational(1, 2));
    EXPECT_EQ(avg.cells[2], Rational(1, 2));
    EXPECT_EQ(avg.cells[3], Rational(0));
    EXPECT_EQ(avg.cat_mass, Rational(0));
    const auto mc = monte_carlo(model, 200000, 7);
    EXPECT_EQ(mc.counts[0], 0u);
    EXPECT_EQ(mc.counts[3], 0u);
    EXPECT_EQ(mc.cat_hits, 0u);
    EXPECT_NEAR(mc.estimate(1), 0.5, 4.0 * mc.std_error(1));
    EXPECT_NEAR(mc.estimate(2), 0.5, 4.0 * mc.std_error(2));
}

TEST(LambdaOne, SamplerIsUniform) {
    const auto model = lambda_one_at(singlet_at(20.0, 20.0, 8));
    std::array<double, 8> hits{};
    const std::size_t draws = 100000;
    for (std::size_t i = 0; i < draws; ++i) {
        CounterRng rng(2024, i);
        ++hits[std::get<std::size_t>(model.draw(rng))];
    }
    double chi2 = 0.0;
    const double expected = static_cast<double>(draws) / 8.0;
    for (double h : hits) {
        chi2 += (h - expected) * (h - expected) / expected;
    }
    const boost::math::chi_squared dist(7.0);
    EXPECT_GT(boost::math::cdf(boost::math::complement(dist, chi2)), 0.001);
}

TEST(LambdaOne, EvaluationIsDeterministic) {
    const auto sc = singlet_at(0.0, 60.0, 16);
    const auto model = lambda_one_at(sc);
    for (std::size_t k = 0; k < 16; ++k) {
        const auto x = model.evaluate(Lambda{k}, sc.settings.context(0, 0));
        const auto y = model.evaluate(Lambda{k}, sc.settings.context(0, 0));
        EXPECT_EQ(x.kind, y.kind);
        EXPECT_EQ(x.outcome, y.outcome);
    }
}

TEST(LambdaOne, OtherContextIsContextBound) {
    const auto sc = singlet_at(0.0, 60.0, 16);
    const auto model = lambda_one_at(sc);
    const Context other{plane(0.0), plane(30.0)};
    EXPECT_EQ(model.evaluate(Lambda{std::size_t{0}}, other).kind,
              Evaluation::Kind::ContextBound);
}

TEST(LambdaOne, RejectsUnlabeledExpansion) {
    const auto ae = adapted_expand(singlet(), embed_left(spin_projector(Vec3::UnitZ(), 1), 2), 2);
    EXPECT_THROW(lambda_one_model(ae, Context{}), PreconditionError);
}

TEST(LambdaOne, SixtyDegreesMonteCarlo) {
    const auto model = lambda_one_at(singlet_at(0.0, 60.0, 16));
    const auto mc = monte_carlo(model, 1000000, 11);
    const double born = born_oracle(singlet_oracle(), plane(0.0), plane(60.0), 1, 1);
    EXPECT_NEAR(born, 0.125, 1e-15);
    EXPECT_NEAR(mc.estimate(0), born, 0.001);
    EXPECT_EQ(mc.cat_hits, 0u);
}

TEST(LambdaOne, CatRateVanishesForIntegralWeights) {
    const auto avg = exact_average(lambda_one_at(singlet_at(0.0, 60.0, 16)));
    EXPECT_EQ(avg.cat_mass, Rational(0));
}

TEST(LambdaOne, CatsAreCountedAndExcluded) {
    // 45° weights are irrational, so some microstates are cats.
    const auto model = lambda_one_at(singlet_at(0.0, 45.0, 10));
    const auto avg = exact_average(model);
    ASSERT_GT(avg.cat_mass, Rational(0));
    const auto mc = monte_carlo(model, 100000, 3);
    EXPECT_GT(mc.cat_hits, 0u);
    std::uint64_t labeled = 0;
    for (auto c : mc.counts) {
        labeled += c;
    }
    EXPECT_EQ(labeled + mc.cat_hits, mc.trials);
    EXPECT_NEAR(static_cast<double>(mc.cat_hits) / 100000.0, to_double(avg.cat_mass), 0.01);
}

TEST(MonteCarlo, ReproducibleForSeed) {
    const auto model = lambda_one_at(singlet_at(0.0, 60.0, 16));
    const auto x = monte_carlo(model, 50000, 99);
    const auto y = monte_carlo(model, 50000, 99);
    const auto z = monte_carlo(model, 50000, 100);
    EXPECT_EQ(x.counts, y.counts);
    EXPECT_EQ(x.cat_hits, y.cat_hits);
    EXPECT_EQ(x.seed, 99u);
    EXPECT_NE(x.counts, z.counts);
}

TEST(MonteCarlo, StandardErrorBound) {
    const auto model = local_baseline(Context{plane(0.0), plane(70.0)});
    for (std::uint64_t trials : {1u, 10u, 1000u, 100000u}) {
        const auto mc = monte_carlo(model, trials, 5);
        for (std::size_t c = 0; c < 4; ++c) {
            EXPECT_LE(mc.std_error(c), 0.5 / std::sqrt(static_cast<double>(trials)) + 1e-15);
        }
    }
    EXPECT_THROW(monte_carlo(model, 0, 5), PreconditionError);
}

TEST(MonteCarlo, ConvergesToExactAverage) {
    const auto model = lambda_one_at(singlet_at(0.0, 60.0, 16));
    const auto avg = exact_average(model);
    int within = 0;
    const int runs = 200;
    for (int r = 0; r < runs; ++r) {
        const auto mc = monte_carlo(model, 10000, 1000 + static_cast<std::uint64_t>(r));
        bool ok = true;
        for (std::size_t c = 0; c < 4; ++c) {
            const double p = to_double(avg.cells[c]);
            const double sigma = std::sqrt(p * (1.0 - p) / 10000.0);
            ok = ok && std::abs(mc.estimate(c) - p) <= 4.0 * sigma;
        }
        within += ok ? 1 : 0;
    }
    EXPECT_GE(within, 198);
}

TEST(MonteCarlo, ZeroWeightBranchNeverHit) {
    const auto mc = monte_carlo(lambda_one_at(singlet_at(40.0, 40.0, 8)), 100000, 17);
    EXPECT_EQ(mc.counts[0], 0u);
    EXPECT_EQ(mc.counts[3], 0u);
}

TEST(LocalBaseline, AnalyticCorrelation) {
    EXPECT_NEAR(LocalBaselineModel::correlation(Context{plane(10.0), plane(10.0)}), -1.0,
                1e-15);
    EXPECT_NEAR(LocalBaselineModel::correlation(Context{plane(0.0), plane(90.0)}), 0.0,
                1e-15);
    EXPECT_NEAR(LocalBaselineModel::correlation(Context{plane(0.0), plane(180.0)}), 1.0,
                1e-15);
}

static Context random_context(Rng &rng) {
    std::normal_distribution<double> g;
    const Vec3 a(g(rng), g(rng), g(rng));
    const Vec3 b(g(rng), g(rng), g(rng));
    return Context{a.normalized(), b.normalized()};
}

TEST(LocalBaseline, ExactJointMatchesAnalyticIntegral) {
    Rng rng(59);
    for (int k = 0; k < 50; ++k) {
        const auto ctx = random_context(rng);
        const auto oracle = baseline_oracle(std::acos(std::clamp(ctx.a.dot(ctx.b), -1.0, 1.0)));
        const auto exact = LocalBaselineModel::joint(ctx);
        for (std::size_t c = 0; c < 4; ++c) {
            EXPECT_NEAR(exact[c], oracle[c], 1e-12);
        }
    }
}

TEST(LocalBaseline, MonteCarloCellsWithinThreeSigma) {
    // 10^6 trials per run. A single 3σ check misses about 0.27% of the
    // time, so over 120 cells at most 3 misses are allowed (P ≈ 4e-4).
    Rng rng(60);
    int misses = 0;
    for (int k = 0; k < 30; ++k) {
        const auto ctx = random_context(rng);
        const auto oracle = baseline_oracle(std::acos(std::clamp(ctx.a.dot(ctx.b), -1.0, 1.0)));
        const auto mc = monte_carlo(local_baseline(ctx), 1000000, 31 + k);
        for (std::size_t c = 0; c < 4; ++c) {
            const double sigma = std::sqrt(oracle[c] * (1.0 - oracle[c]) / 1e6);
            misses += std::abs(mc.estimate(c) - oracle[c]) > 3.0 * sigma ? 1 : 0;
        }
    }
    EXPECT_LE(misses, 3);
}

TEST(LocalBaseline, PooledMonteCarloIsUnbiased) {
    Rng rng(61);
    const auto ctx = random_context(rng);
    const auto oracle = baseline_oracle(std::acos(std::clamp(ctx.a.dot(ctx.b), -1.0, 1.0)));
    std::array<std::uint64_t, 4> counts{};
    std::uint64_t trials = 0;
    for (std::uint64_t run = 0; run < 20; ++run) {
        const auto mc = monte_carlo(local_baseline(ctx), 1000000, 700 + run);
        for (std::size_t c = 0; c < 4; ++c) {
            counts[c] += mc.counts[c];
        }
        trials += mc.trials;
    }
    for (std::size_t c = 0; c < 4; ++c) {
        const double p = static_cast<double>(counts[c]) / static_cast<double>(trials);
        const double sigma = std::sqrt(oracle[c] * (1.0 - oracle[c]) / static_cast<double>(trials));
        EXPECT_NEAR(p, oracle[c], 4.0 * sigma) << "cell " << c;
    }
}

TEST(LocalBaseline, ZeroProjectionCountsAsPlus) {
    const auto model = local_baseline(Context{Vec3::UnitZ(), Vec3::UnitZ()});
    const auto ev = model.evaluate(Lambda{Vec3::UnitX()}, model.context());
    EXPECT_EQ(ev.outcome.alice, 1);
    EXPECT_EQ(ev.outcome.bob, -1);
}

TEST(LocalBaseline, NoFiniteLambdaSpace) {
    EXPECT_THROW(exact_average(local_baseline(Context{})), PreconditionError);
}

TEST(ExactAverage, ProductStateCells) {
    const StateVector phi{0.5, std::sqrt(3.0) / 2.0};
    const StateVector chi{1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0)};
    const auto anc = StateVector::basis(4, 0);
    const auto psi = tensor(tensor(phi, anc), tensor(chi, anc));
    const std::vector<LabeledProjector> fam{
        {1, tensor(spin_projector(Vec3::UnitZ(), 1), Projector::identity(4))},
        {-1, tensor(spin_projector(Vec3::UnitZ(), -1), Projector::identity(4))}};
    const auto ae = product_adapted_expand(psi, fam, fam, 8);
    const auto avg = exact_average(lambda_one_model(ae, Context{}));
    // (m_a m_b) / (n_a n_b) with m_a/n_a = 1/4 and m_b/n_b = 1/2.
    EXPECT_EQ(avg.cells[0], Rational(1, 4) * Rational(1, 2));
    EXPECT_EQ(avg.cells[1], Rational(1, 4) * Rational(1, 2));
    EXPECT_EQ(avg.cells[2], Rational(3, 4) * Rational(1, 2));
    EXPECT_EQ(avg.cells[3], Rational(3, 4) * Rational(1, 2));
}

TEST(ExactAverage, AgreesWithCountingFractions) {
    for (const auto &[a, b, n] : std::vector<std::tuple<double, double, std::size_t>>{
             {0.0, 60.0, 16}, {0.0, 90.0, 4}, {30.0, 150.0, 8}, {0.0, 0.0, 8}, {0.0, 180.0, 6}}) {
        const auto sc = singlet_at(a, b, n);
        const auto ae = context_expansion(sc, 0, 0);
        ASSERT_EQ(ae.cat_count(), 0u);
        const auto avg = exact_average(lambda_one_model(ae, sc.settings.context(0, 0)));
        for (std::size_t c = 0; c < 4; ++c) {
            const auto ip = probability_bounds(ae, *ae.target_index(to_string(cell_label(c))));
            ASSERT_TRUE(ip.is_precise());
            EXPECT_EQ(avg.cells[c], ip.lower);
        }
    }
}

TEST(EnsembleCorrespondence, DifferentBobSettings) {
    EPRBScenario sc;
    sc.settings = planar_settings(0.0, 90.0, 45.0, 90.0);
    sc.ancilla_a = 8;
    sc.ancilla_b = 8;
    sc.n = 16;
    const auto first = context_expansion(sc, 0, 0);
    const auto second = context_expansion(sc, 0, 1);
    const auto report = ensemble_correspondence(first, second);
    EXPECT_TRUE(report.marginal_counts_equal);
    EXPECT_EQ(report.alice_plus_first, report.alice_plus_second);
    // Born marginal of the singlet is 1/2.
    EXPECT_EQ(report.alice_plus_first, 8u);
    EXPECT_TRUE(report.disjoint);
    EXPECT_EQ(report.shared_microstates, 0u);
}

TEST(EnsembleCorrespondence, SameSettingsGiveSameEnsemble) {
    EPRBScenario sc;
    sc.settings = planar_settings(0.0, 90.0, 45.0, 45.0);
    sc.ancilla_a = 8;
    sc.ancilla_b = 8;
    sc.n = 16;
    const auto report =
        ensemble_correspondence(context_expansion(sc, 0, 0), context_expansion(sc, 0, 1));
    EXPECT_TRUE(report.marginal_counts_equal);
    EXPECT_EQ(report.shared_microstates, 16u);
    EXPECT_FALSE(report.disjoint);
}

TEST(EnsembleCorrespondence, RejectsDifferentAliceSettings) {
    EPRBScenario sc;
    sc.settings = planar_settings(0.0, 90.0, 45.0, 45.0);
    sc.ancilla_a = 8;
    sc.ancilla_b = 8;
    sc.n = 16;
    EXPECT_THROW(
        ensemble_correspondence(context_expansion(sc, 0, 0), context_expansion(sc, 1, 0)),
        PreconditionError);
}

TEST(Factorizability, LocalBaselineFactorizes) {
    const auto grid = planar_settings(0.0, 90.0, 45.0, 135.0);
    const auto report = factorizability_check(local_baseline(grid.context(0, 0)), grid, 2000, 8);
    EXPECT_EQ(report.factorizable, 2000u);
    EXPECT_EQ(report.not_factorizable, 0u);
}

TEST(Factorizability, LambdaOneIsContextBound) {
    EPRBScenario sc;
    sc.settings = planar_settings(0.0, 90.0, 60.0, 120.0);
    sc.ancilla_a = 4;
    sc.ancilla_b = 4;
    sc.n = 16;
    const auto model = lambda_one_model(context_expansion(sc, 0, 0), sc.settings.context(0, 0));
    const auto report = factorizability_check(model, sc.settings);
    EXPECT_EQ(report.context_bound, 16u);
    for (auto v : report.verdicts) {
        EXPECT_EQ(v, LambdaVerdict::ContextBound);
    }
}

TEST(Factorizability, SignallingModelFails) {
    const auto grid = planar_settings(0.0, 90.0, 45.0, 135.0);
    const auto report = factorizability_check(SignallingModel(grid.context(0, 0)), grid, 500, 9);
    EXPECT_GT(report.not_factorizable, 0u);
}

TEST(MeasurementIndependence, Verdicts) {
    EPRBScenario sc;
    sc.settings = planar_settings(0.0, 90.0, 60.0, 120.0);
    sc.ancilla_a = 4;
    sc.ancilla_b = 4;
    sc.n = 16;
    const auto baseline = measurement_independence_check(baseline_ensemble_factory(4, 100),
                                                         sc.settings);
    EXPECT_TRUE(baseline.independent);
    const auto one = measurement_independence_check(lambda_one_factory(sc), sc.settings);
    EXPECT_FALSE(one.independent);
    EXPECT_NE(one.diagnostic.find("retrocausal"), std::string::npos);
    const auto many = measurement_independence_check(lambda_many_factory(sc), sc.settings);
    EXPECT_TRUE(many.independent);
}
