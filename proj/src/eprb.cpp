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

#include "lmany/eprb.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

namespace lmany {

namespace {

constexpr std::array<int, 4> kChshSigns{1, -1, 1, 1};

std::uint64_t context_seed(std::uint64_t seed, int alice, int bob) {
    return mix64(seed ^ mix64(static_cast<std::uint64_t>(2 * alice + bob + 1)));
}

Rational rational(std::size_t num, std::size_t den) {
    return Rational(static_cast<std::int64_t>(num), static_cast<std::int64_t>(den));
}

Quantity point(double p) { return Quantity{p, p, p, 0.0, std::nullopt, std::nullopt}; }

Quantity from_bounds(const ImpreciseProbability &ip, double value) {
    Quantity q;
    q.value = value;
    q.exact_lower = ip.lower;
    q.exact_upper = ip.upper;
    q.lower = to_double(ip.lower);
    q.upper = to_double(ip.upper);
    return q;
}

Quantity exact_point(const Rational &r) {
    Quantity q = point(to_double(r));
    q.exact_lower = r;
    q.exact_upper = r;
    return q;
}

// Squared norm of P applied to a microstate, using tensor structure.
double projected_norm2(const Projector &p, const Microstate &m) {
    return apply(p, m).norm_squared();
}

JointDistribution counting_joint(const AdaptedExpansion &ae) {
    JointDistribution jd;
    jd.backend = Backend::Counting;
    jd.n = ae.n();
    const std::size_t cats = ae.cat_count();
    const std::size_t labeled = ae.n() - cats;
    for (std::size_t c = 0; c < 4; ++c) {
        const auto t = ae.target_index(to_string(cell_label(c)));
        if (!t) {
            throw ExpansionError("counting backend: missing branch " +
                                 to_string(cell_label(c)));
        }
        const auto ip = probability_bounds(ae, *t);
        const double value =
            labeled == 0 ? 0.0
                         : static_cast<double>(ae.counts[*t].in_range) /
                               static_cast<double>(labeled);
        jd.cells[c] = from_bounds(ip, value);
    }
    jd.cat_mass = exact_point(rational(cats, ae.n()));
    jd.provenance = "counting: product-adapted expansion, n = " + std::to_string(ae.n());
    return jd;
}

Quantity counting_correlation(const AdaptedExpansion &ae, const JointDistribution &jd) {
    // Classification against Q = Π++ + Π−−. The distance to range(Q) is the
    // weight on the anticorrelated branches, so no cancellation occurs.
    std::array<const Projector *, 4> branch{};
    for (std::size_t c = 0; c < 4; ++c) {
        branch[c] = &ae.targets[*ae.target_index(to_string(cell_label(c)))].projector;
    }
    std::size_t in = 0;
    std::size_t out = 0;
    for (const auto &m : ae.expansion.microstates()) {
        const double norm = m.norm();
        const double eps = kClassificationTolerance * norm;
        const double off = std::sqrt(projected_norm2(*branch[1], m) +
                                     projected_norm2(*branch[2], m));
        if (off <= eps) {
            ++in;
            continue;
        }
        const double on = std::sqrt(projected_norm2(*branch[0], m) +
                                    projected_norm2(*branch[3], m));
        if (on <= eps) {
            ++out;
        }
    }
    const auto q = bounds_from_counts(in, out, ae.n());
    Quantity e;
    e.value = jd.cells[0].value + jd.cells[3].value - jd.cells[1].value - jd.cells[2].value;
    e.exact_lower = Rational(2) * q.lower - Rational(1);
    e.exact_upper = Rational(2) * q.upper - Rational(1);
    e.lower = to_double(*e.exact_lower);
    e.upper = to_double(*e.exact_upper);
    return e;
}

JointDistribution born_joint(const EPRBScenario &sc, int i, int j) {
    const StateVector psi = full_state(sc);
    JointDistribution jd;
    jd.backend = Backend::Born;
    for (std::size_t c = 0; c < 4; ++c) {
        jd.cells[c] = point(born_quantity(psi, branch_projector(sc, i, j, cell_label(c))));
    }
    jd.cat_mass = point(0.0);
    jd.provenance = "born: projector norms";
    return jd;
}

JointDistribution mc_joint(const EPRBScenario &sc, const AdaptedExpansion &ae, int i,
                           int j) {
    const auto model = lambda_one_model(ae, sc.settings.context(i, j));
    const auto seed = context_seed(sc.seed, i, j);
    const auto ej = monte_carlo(model, sc.trials, seed);
    JointDistribution jd;
    jd.backend = Backend::MonteCarlo;
    jd.n = ae.n();
    jd.trials = ej.trials;
    jd.seed = seed;
    for (std::size_t c = 0; c < 4; ++c) {
        Quantity q = point(ej.estimate(c));
        q.std_error = ej.std_error(c);
        jd.cells[c] = q;
    }
    jd.cat_mass = point(static_cast<double>(ej.cat_hits) / static_cast<double>(ej.trials));
    jd.provenance = "montecarlo: lambda-one sampling, n = " + std::to_string(ae.n()) +
                    ", trials = " + std::to_string(ej.trials);
    return jd;
}

Quantity mc_correlation(const JointDistribution &jd) {
    const double e =
        jd.cells[0].value + jd.cells[3].value - jd.cells[1].value - jd.cells[2].value;
    const double labeled = static_cast<double>(jd.trials) * (1.0 - jd.cat_mass.value);
    Quantity q = point(e);
    q.std_error = labeled > 0.0 ? std::sqrt(std::max(0.0, 1.0 - e * e) / labeled) : 0.0;
    return q;
}

Quantity born_correlation(const JointDistribution &jd) {
    return point(jd.cells[0].value + jd.cells[3].value - jd.cells[1].value -
                 jd.cells[2].value);
}

Quantity sum_quantities(const Quantity &x, const Quantity &y) {
    Quantity q;
    q.value = x.value + y.value;
    q.lower = x.lower + y.lower;
    q.upper = std::min(1.0, x.upper + y.upper);
    q.std_error = std::hypot(x.std_error, y.std_error);
    if (x.exact_lower && y.exact_lower) {
        q.exact_lower = *x.exact_lower + *y.exact_lower;
        q.exact_upper = std::min(Rational(1), *x.exact_upper + *y.exact_upper);
    }
    return q;
}

double labeled_trials(const JointDistribution &jd) {
    return static_cast<double>(jd.trials) * (1.0 - jd.cat_mass.value);
}

// Distance between [l1, h1] and [l2, h2]; zero if they overlap.
double gap(double l1, double h1, double l2, double h2) {
    return std::max({0.0, l2 - h1, l1 - h2});
}

ConditionResult judge(std::string name, double lhs, double rhs, double deviation,
                      double interval_gap, double tol, std::string note = {}) {
    ConditionResult r;
    r.name = std::move(name);
    r.lhs = lhs;
    r.rhs = rhs;
    r.deviation = deviation;
    r.tolerance = tol;
    r.note = std::move(note);
    if (deviation <= tol) {
        r.verdict = Verdict::Holds;
    } else if (interval_gap <= tol) {
        r.verdict = Verdict::WidthLimited;
    } else {
        r.verdict = Verdict::Violated;
    }
    return r;
}

Marginals local_from_expansion(const StateVector &psi, const EPRBScenario &sc, int i,
                               int j, std::size_t n) {
    Marginals m;
    const auto fill = [&](const Projector &plus, std::array<Quantity, 2> &out) {
        const auto ae = adapted_expand(psi, plus, n);
        const auto ip = probability_bounds(ae, std::size_t{0});
        const auto &c = ae.counts.front();
        const std::size_t labeled = c.in_range + c.in_kernel;
        const double value =
            labeled == 0 ? 0.0 : static_cast<double>(c.in_range) / static_cast<double>(labeled);
        out[0] = from_bounds(ip, value);
        ImpreciseProbability minus;
        minus.lower = Rational(1) - ip.upper;
        minus.upper = Rational(1) - ip.lower;
        minus.n = ip.n;
        minus.cat_count = ip.cat_count;
        out[1] = from_bounds(minus, labeled == 0 ? 0.0 : 1.0 - value);
    };
    const std::size_t side_a = 2 * sc.ancilla_a;
    const std::size_t side_b = 2 * sc.ancilla_b;
    fill(embed_left(alice_family(sc, i).front().projector, side_b), m.alice);
    fill(embed_right(side_a, bob_family(sc, j).front().projector), m.bob);
    return m;
}

Marginals local_born(const StateVector &psi, const EPRBScenario &sc, int i, int j) {
    Marginals m;
    const std::size_t side_a = 2 * sc.ancilla_a;
    const std::size_t side_b = 2 * sc.ancilla_b;
    const auto af = alice_family(sc, i);
    const auto bf = bob_family(sc, j);
    for (std::size_t k = 0; k < 2; ++k) {
        m.alice[k] = point(born_quantity(psi, embed_left(af[k].projector, side_b)));
        m.bob[k] = point(born_quantity(psi, embed_right(side_a, bf[k].projector)));
    }
    return m;
}

} // namespace

std::string to_string(Backend b) {
    switch (b) {
    case Backend::Born:
        return "born";
    case Backend::Counting:
        return "counting";
    case Backend::MonteCarlo:
        return "montecarlo";
    }
    return "unknown";
}

std::optional<Backend> backend_from_string(const std::string &s) {
    if (s == "born") {
        return Backend::Born;
    }
    if (s == "counting") {
        return Backend::Counting;
    }
    if (s == "montecarlo") {
        return Backend::MonteCarlo;
    }
    return std::nullopt;
}

std::string to_string(Verdict v) {
    switch (v) {
    case Verdict::Holds:
        return "holds";
    case Verdict::Violated:
        return "violated";
    case Verdict::WidthLimited:
        return "width-limited";
    case Verdict::NotApplicable:
        return "not-applicable";
    }
    return "unknown";
}

StateVector singlet() {
    const double r = 1.0 / std::numbers::sqrt2;
    return StateVector{0.0, r, -r, 0.0};
}

SettingGrid planar_settings(double a_deg, double a_prime_deg, double b_deg,
                            double b_prime_deg) {
    const auto rad = [](double deg) { return deg * std::numbers::pi / 180.0; };
    return SettingGrid{planar_direction(rad(a_deg)), planar_direction(rad(a_prime_deg)),
                       planar_direction(rad(b_deg)), planar_direction(rad(b_prime_deg))};
}

void validate(const EPRBScenario &sc) {
    if (sc.spin_state.dim() != 4) {
        throw DimensionError("scenario: spin state must have dimension 4");
    }
    if (sc.spin_state.norm() == 0.0) {
        throw PreconditionError("scenario: zero spin state");
    }
    if (sc.ancilla_a == 0 || sc.ancilla_b == 0) {
        throw PreconditionError("scenario: ancilla dimensions must be at least 1");
    }
    for (const Vec3 *v : {&sc.settings.a, &sc.settings.a_prime, &sc.settings.b,
                          &sc.settings.b_prime}) {
        if (!v->allFinite() || std::abs(v->norm() - 1.0) > 1e-12) {
            throw PreconditionError("scenario: settings must be unit vectors");
        }
    }
    if (sc.n == 1) {
        throw PreconditionError("scenario: n must be at least 2");
    }
    if (sc.backend == Backend::MonteCarlo && sc.trials == 0) {
        throw PreconditionError("scenario: trials must be at least 1");
    }
}

StateVector full_state(const EPRBScenario &sc) {
    validate(sc);
    const std::size_t d_a = sc.ancilla_a;
    const std::size_t d_b = sc.ancilla_b;
    CVector amp = CVector::Zero(static_cast<Eigen::Index>(4 * d_a * d_b));
    for (std::size_t s_a = 0; s_a < 2; ++s_a) {
        for (std::size_t s_b = 0; s_b < 2; ++s_b) {
            const std::size_t index = ((s_a * d_a) * 2 + s_b) * d_b;
            amp[static_cast<Eigen::Index>(index)] = sc.spin_state[s_a * 2 + s_b];
        }
    }
    return StateVector(std::move(amp));
}

std::vector<LabeledProjector> alice_family(const EPRBScenario &sc, int setting) {
    const Vec3 &dir = setting == 0 ? sc.settings.a : sc.settings.a_prime;
    const auto id = Projector::identity(sc.ancilla_a);
    return {LabeledProjector{1, tensor(spin_projector(dir, 1), id)},
            LabeledProjector{-1, tensor(spin_projector(dir, -1), id)}};
}

std::vector<LabeledProjector> bob_family(const EPRBScenario &sc, int setting) {
    const Vec3 &dir = setting == 0 ? sc.settings.b : sc.settings.b_prime;
    const auto id = Projector::identity(sc.ancilla_b);
    return {LabeledProjector{1, tensor(spin_projector(dir, 1), id)},
            LabeledProjector{-1, tensor(spin_projector(dir, -1), id)}};
}

Projector branch_projector(const EPRBScenario &sc, int alice_setting, int bob_setting,
                           const OutcomeLabel &label) {
    const auto af = alice_family(sc, alice_setting);
    const auto bf = bob_family(sc, bob_setting);
    return tensor(af[label.alice > 0 ? 0 : 1].projector, bf[label.bob > 0 ? 0 : 1].projector);
}

std::size_t suggest_n(const EPRBScenario &sc, std::size_t n_min, std::size_t n_max) {
    EPRBScenario small = sc;
    small.ancilla_a = small.ancilla_b = 1;
    std::array<std::array<double, 4>, 4> w{};
    std::array<double, 4> e_born{};
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            const auto jd = born_joint(small, i, j);
            for (std::size_t c = 0; c < 4; ++c) {
                w[2 * i + j][c] = jd.cells[c].value;
            }
            e_born[2 * i + j] = born_correlation(jd).value;
        }
    }
    const std::size_t rank_a = sc.ancilla_a;
    const std::size_t rank_b = sc.ancilla_b;
    std::size_t best = 0;
    double best_loss = std::numeric_limits<double>::infinity();
    for (std::size_t n = std::max<std::size_t>(n_min, 4); n <= n_max; ++n) {
        bool integral = true;
        double loss = 0.0;
        for (std::size_t k = 0; k < 4; ++k) {
            std::array<double, 4> counts{};
            double total = 0.0;
            for (std::size_t c = 0; c < 4; ++c) {
                const double t = static_cast<double>(n) * w[k][c];
                counts[c] = static_cast<double>(
                    product_branch_allotment(w[k][c], n, rank_a, rank_b));
                if (std::abs(t - std::round(t)) > 1e-9 || counts[c] != std::round(t)) {
                    integral = false;
                }
                total += counts[c];
            }
            if (total == 0.0) {
                loss = std::numeric_limits<double>::infinity();
                break;
            }
            const double e = (counts[0] + counts[3] - counts[1] - counts[2]) / total;
            loss += std::abs(e - e_born[k]);
        }
        if (integral) {
            return n;
        }
        if (loss < best_loss - 1e-15) {
            best_loss = loss;
            best = n;
        }
    }
    if (best == 0) {
        throw PreconditionError("suggest_n: no admissible n in range");
    }
    return best;
}

std::size_t resolved_n(const EPRBScenario &sc) { return sc.n != 0 ? sc.n : suggest_n(sc); }

AdaptedExpansion context_expansion(const EPRBScenario &sc, int alice_setting,
                                   int bob_setting) {
    return product_adapted_expand(full_state(sc), alice_family(sc, alice_setting),
                                  bob_family(sc, bob_setting), resolved_n(sc));
}

JointDistribution joint_distribution(const EPRBScenario &sc, int alice_setting,
                                     int bob_setting) {
    validate(sc);
    if (alice_setting < 0 || alice_setting > 1 || bob_setting < 0 || bob_setting > 1) {
        throw PreconditionError("joint_distribution: invalid setting");
    }
    switch (sc.backend) {
    case Backend::Born:
        return born_joint(sc, alice_setting, bob_setting);
    case Backend::Counting:
        return counting_joint(context_expansion(sc, alice_setting, bob_setting));
    case Backend::MonteCarlo:
        return mc_joint(sc, context_expansion(sc, alice_setting, bob_setting),
                        alice_setting, bob_setting);
    }
    throw PreconditionError("joint_distribution: unknown backend");
}

Marginals marginals(const JointDistribution &jd) {
    Marginals m;
    m.alice[0] = sum_quantities(jd.cells[0], jd.cells[1]);
    m.alice[1] = sum_quantities(jd.cells[2], jd.cells[3]);
    m.bob[0] = sum_quantities(jd.cells[0], jd.cells[2]);
    m.bob[1] = sum_quantities(jd.cells[1], jd.cells[3]);
    if (jd.backend == Backend::MonteCarlo) {
        const double labeled = labeled_trials(jd);
        for (auto *side : {&m.alice, &m.bob}) {
            for (auto &q : *side) {
                q.std_error = labeled > 0.0
                                  ? std::sqrt(q.value * (1.0 - q.value) / labeled)
                                  : 0.0;
            }
        }
    }
    return m;
}

ConditionalDistribution conditional(const JointDistribution &jd, int bob_outcome) {
    const std::size_t plus = cell_index(OutcomeLabel{1, bob_outcome});
    const std::size_t minus = cell_index(OutcomeLabel{-1, bob_outcome});
    ConditionalDistribution out;
    const double pt = jd.cells[plus].value + jd.cells[minus].value;
    if (pt <= 0.0) {
        return out;
    }
    out.defined = true;
    const double labeled = labeled_trials(jd) * pt;
    std::array<std::size_t, 2> cells{plus, minus};
    for (std::size_t k = 0; k < 2; ++k) {
        const Quantity &x = jd.cells[cells[k]];
        const Quantity &y = jd.cells[cells[1 - k]];
        Quantity q;
        q.value = x.value / pt;
        // p(s|t) = x / (x + y) is increasing in x and decreasing in y.
        const auto ratio = [](double num, double other) {
            return num + other > 0.0 ? num / (num + other) : 0.0;
        };
        q.lower = ratio(x.lower, y.upper);
        q.upper = x.upper + y.lower > 0.0 ? ratio(x.upper, y.lower) : 1.0;
        if (x.exact_lower && y.exact_lower) {
            const auto exact_ratio = [](Rational num, Rational other) {
                return num + other > Rational(0) ? num / (num + other) : Rational(0);
            };
            q.exact_lower = exact_ratio(*x.exact_lower, *y.exact_upper);
            q.exact_upper = *x.exact_upper + *y.exact_lower > Rational(0)
                                ? exact_ratio(*x.exact_upper, *y.exact_lower)
                                : Rational(1);
        }
        if (jd.backend == Backend::MonteCarlo && labeled > 0.0) {
            q.std_error = std::sqrt(q.value * (1.0 - q.value) / labeled);
        }
        out.alice[k] = q;
    }
    out.interval_valued =
        jd.cells[plus].upper > jd.cells[plus].lower || jd.cells[minus].upper > jd.cells[minus].lower;
    return out;
}

Quantity correlation(const EPRBScenario &sc, int alice_setting, int bob_setting) {
    validate(sc);
    switch (sc.backend) {
    case Backend::Born:
        return born_correlation(born_joint(sc, alice_setting, bob_setting));
    case Backend::Counting: {
        const auto ae = context_expansion(sc, alice_setting, bob_setting);
        return counting_correlation(ae, counting_joint(ae));
    }
    case Backend::MonteCarlo: {
        const auto ae = context_expansion(sc, alice_setting, bob_setting);
        return mc_correlation(mc_joint(sc, ae, alice_setting, bob_setting));
    }
    }
    throw PreconditionError("correlation: unknown backend");
}

ChshValue combine_chsh(const std::array<Quantity, 4> &correlations) {
    ChshValue out;
    out.correlations = correlations;
    double value = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    double var = 0.0;
    bool exact = true;
    Rational elo(0);
    Rational ehi(0);
    for (std::size_t k = 0; k < 4; ++k) {
        const Quantity &e = correlations[k];
        const int sign = kChshSigns[k];
        value += sign * e.value;
        lo += sign > 0 ? e.lower : -e.upper;
        hi += sign > 0 ? e.upper : -e.lower;
        var += e.std_error * e.std_error;
        if (e.exact_lower && e.exact_upper) {
            elo += sign > 0 ? *e.exact_lower : -*e.exact_upper;
            ehi += sign > 0 ? *e.exact_upper : -*e.exact_lower;
        } else {
            exact = false;
        }
    }
    auto abs_interval = [](auto l, auto h, auto zero) {
        if (l >= zero) {
            return std::make_pair(l, h);
        }
        if (h <= zero) {
            return std::make_pair(-h, -l);
        }
        return std::make_pair(zero, std::max(-l, h));
    };
    out.s.value = std::abs(value);
    std::tie(out.s.lower, out.s.upper) = abs_interval(lo, hi, 0.0);
    out.s.std_error = std::sqrt(var);
    if (exact) {
        const auto [l, h] = abs_interval(elo, ehi, Rational(0));
        out.s.exact_lower = l;
        out.s.exact_upper = h;
    }
    return out;
}

std::vector<ContextResult> evaluate_contexts(const EPRBScenario &sc) {
    validate(sc);
    const StateVector psi = full_state(sc);
    const std::size_t n = sc.backend == Backend::Born ? 0 : resolved_n(sc);
    EPRBScenario fixed = sc;
    fixed.n = n;

    // Local marginals depend on one side's setting only; compute each once.
    std::map<int, std::array<Quantity, 2>> alice_local;
    std::map<int, std::array<Quantity, 2>> bob_local;
    std::vector<ContextResult> out;
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            ContextResult r;
            r.alice_setting = i;
            r.bob_setting = j;
            switch (sc.backend) {
            case Backend::Born: {
                r.joint = born_joint(fixed, i, j);
                r.correlation = born_correlation(r.joint);
                if (!alice_local.count(i) || !bob_local.count(j)) {
                    const auto m = local_born(psi, fixed, i, j);
                    alice_local.emplace(i, m.alice);
                    bob_local.emplace(j, m.bob);
                }
                r.local.alice = alice_local.at(i);
                r.local.bob = bob_local.at(j);
                break;
            }
            case Backend::Counting: {
                const auto ae = context_expansion(fixed, i, j);
                r.joint = counting_joint(ae);
                r.correlation = counting_correlation(ae, r.joint);
                if (!alice_local.count(i) || !bob_local.count(j)) {
                    const auto m = local_from_expansion(psi, fixed, i, j, n);
                    alice_local.emplace(i, m.alice);
                    bob_local.emplace(j, m.bob);
                }
                r.local.alice = alice_local.at(i);
                r.local.bob = bob_local.at(j);
                break;
            }
            case Backend::MonteCarlo: {
                const auto ae = context_expansion(fixed, i, j);
                r.joint = mc_joint(fixed, ae, i, j);
                r.correlation = mc_correlation(r.joint);
                r.local = marginals(r.joint);
                break;
            }
            }
            out.push_back(std::move(r));
        }
    }
    return out;
}

ChshValue chsh(const EPRBScenario &sc) {
    const auto contexts = evaluate_contexts(sc);
    std::array<Quantity, 4> e;
    for (std::size_t k = 0; k < 4; ++k) {
        e[k] = contexts[k].correlation;
    }
    return combine_chsh(e);
}

const ConditionResult &ConditionReport::condition(const std::string &name) const {
    for (const auto &c : conditions) {
        if (c.name == name) {
            return c;
        }
    }
    throw PreconditionError("ConditionReport: no condition named " + name);
}

ConditionReport condition_battery(const EPRBScenario &sc, double tolerance) {
    ConditionReport report;
    report.backend = sc.backend;
    report.contexts = evaluate_contexts(sc);
    const auto &ctx = report.contexts;
    const bool mc = sc.backend == Backend::MonteCarlo;
    auto tol_for = [&](double se) { return mc ? std::max(tolerance, 4.0 * se) : tolerance; };

    // Parameter independence: one side's marginal across the other side's settings.
    {
        ConditionResult worst = judge("ParameterIndependence", 0, 0, 0, 0, tolerance);
        double worst_excess = -std::numeric_limits<double>::infinity();
        auto consider = [&](const Quantity &x, const Quantity &y, const std::string &note) {
            const double dev = std::abs(x.value - y.value);
            const double tol = tol_for(std::hypot(x.std_error, y.std_error));
            const auto r = judge("ParameterIndependence", x.value, y.value, dev,
                                 gap(x.lower, x.upper, y.lower, y.upper), tol, note);
            if (dev - tol > worst_excess) {
                worst_excess = dev - tol;
                worst = r;
            }
        };
        for (int i = 0; i < 2; ++i) {
            for (std::size_t s = 0; s < 2; ++s) {
                consider(ctx[2 * i].local.alice[s], ctx[2 * i + 1].local.alice[s],
                         "Alice marginal across Bob's settings");
            }
        }
        for (int j = 0; j < 2; ++j) {
            for (std::size_t t = 0; t < 2; ++t) {
                consider(ctx[j].local.bob[t], ctx[2 + j].local.bob[t],
                         "Bob marginal across Alice's settings");
            }
        }
        report.conditions.push_back(worst);
    }

    // Outcome independence and completeness, per context.
    {
        ConditionResult oi = judge("OutcomeIndependence", 0, 0, 0, 0, tolerance);
        ConditionResult comp = judge("Completeness", 0, 0, 0, 0, tolerance);
        double oi_excess = -std::numeric_limits<double>::infinity();
        double comp_excess = -std::numeric_limits<double>::infinity();
        bool flagged = false;
        for (const auto &c : ctx) {
            const auto m = marginals(c.joint);
            for (int t : {1, -1}) {
                const auto cond = conditional(c.joint, t);
                if (!cond.defined) {
                    continue;
                }
                flagged = flagged || cond.interval_valued;
                for (std::size_t s = 0; s < 2; ++s) {
                    const Quantity &p = m.alice[s];
                    const Quantity &q = cond.alice[s];
                    const double dev = std::abs(p.value - q.value);
                    const double tol = tol_for(std::hypot(p.std_error, q.std_error));
                    if (dev - tol > oi_excess) {
                        oi_excess = dev - tol;
                        oi = judge("OutcomeIndependence", p.value, q.value, dev,
                                   gap(p.lower, p.upper, q.lower, q.upper), tol);
                    }
                }
            }
            for (std::size_t cell = 0; cell < 4; ++cell) {
                const auto label = cell_label(cell);
                const Quantity &ps = m.alice[label.alice > 0 ? 0 : 1];
                const Quantity &pt = m.bob[label.bob > 0 ? 0 : 1];
                const Quantity &joint = c.joint.cells[cell];
                const double product = ps.value * pt.value;
                const double dev = std::abs(joint.value - product);
                const double tol = tol_for(
                    std::hypot(joint.std_error, std::hypot(ps.std_error, pt.std_error)));
                if (dev - tol > comp_excess) {
                    comp_excess = dev - tol;
                    comp = judge("Completeness", joint.value, product, dev,
                                 gap(joint.lower, joint.upper, ps.lower * pt.lower,
                                     ps.upper * pt.upper),
                                 tol);
                }
            }
        }
        if (flagged) {
            oi.note = "conditionals are interval-valued: the conditioning event carries "
                      "cat mass";
        }
        report.conditions.push_back(oi);
        report.conditions.push_back(comp);
    }

    // Measurement independence of the ontic ensemble.
    {
        const auto mi = measurement_independence_check(
            mc ? lambda_one_factory(sc) : lambda_many_factory(sc), sc.settings);
        ConditionResult r;
        r.name = "MeasurementIndependence";
        r.verdict = mi.independent ? Verdict::Holds : Verdict::Violated;
        r.deviation = mi.independent ? 0.0 : 1.0;
        r.lhs = r.deviation;
        r.tolerance = tolerance;
        r.note = mi.diagnostic;
        report.conditions.push_back(r);
    }

    std::array<Quantity, 4> e;
    for (std::size_t k = 0; k < 4; ++k) {
        e[k] = ctx[k].correlation;
    }
    report.chsh = combine_chsh(e);
    return report;
}

CompletenessDemo product_completeness_demo(const StateVector &phi, const StateVector &chi,
                                           const Projector &p_a, const Projector &p_b,
                                           std::size_t n_a, std::size_t n_b) {
    const auto side_a = adapted_expand(phi, p_a, n_a);
    const auto side_b = adapted_expand(chi, p_b, n_b);
    if (side_a.counts.front().cat != 0 || side_b.counts.front().cat != 0) {
        throw ExpansionError("product_completeness_demo: side expansions must be cat-free");
    }
    std::vector<Microstate> grid;
    grid.reserve(n_a * n_b);
    for (const auto &x : side_a.expansion.microstates()) {
        for (const auto &y : side_b.expansion.microstates()) {
            grid.emplace_back(ProductParts{x.vector(), y.vector()}, std::nullopt);
        }
    }
    const Expansion joint(tensor(phi, chi), std::move(grid));

    CompletenessDemo d;
    d.verification = verify_expansion(joint);
    if (!d.verification.passed) {
        throw ExpansionError("product_completeness_demo: product grid failed verification");
    }
    d.m_a = side_a.counts.front().in_range;
    d.m_b = side_b.counts.front().in_range;
    d.n_a = n_a;
    d.n_b = n_b;
    const Projector both = tensor(p_a, p_b);
    const Projector alice_only = embed_left(p_a, chi.dim());
    const Projector bob_only = embed_right(phi.dim(), p_b);
    std::size_t alice_count = 0;
    std::size_t bob_count = 0;
    for (const auto &m : joint.microstates()) {
        d.joint_count += classify(m, both) == Classification::InRange ? 1 : 0;
        alice_count += classify(m, alice_only) == Classification::InRange ? 1 : 0;
        bob_count += classify(m, bob_only) == Classification::InRange ? 1 : 0;
    }
    const std::size_t total = n_a * n_b;
    d.joint = rational(d.joint_count, total);
    d.alice_marginal = rational(alice_count, total);
    d.bob_marginal = rational(bob_count, total);
    d.factorizes = d.joint == d.alice_marginal * d.bob_marginal &&
                   d.joint == rational(d.m_a * d.m_b, total);
    return d;
}

EPRBScenario photon_box() {
    EPRBScenario sc;
    sc.settings = SettingGrid{};
    const double r = 1.0 / std::numbers::sqrt2;
    sc.spin_state = StateVector{0.0, r, r, 0.0};
    sc.ancilla_a = sc.ancilla_b = 1;
    sc.backend = Backend::Born;
    return sc;
}

PhotonBoxReport photon_box_scenario() {
    const auto sc = photon_box();
    PhotonBoxReport r;
    r.battery = condition_battery(sc);
    const auto &jd = r.battery.contexts.front().joint;
    r.p_found_a = marginals(jd).alice[0].value;
    const auto found = conditional(jd, 1);
    const auto not_found = conditional(jd, -1);
    r.p_found_a_given_found_b = found.defined ? found.alice[0].value : 0.0;
    r.p_found_a_given_not_found_b = not_found.defined ? not_found.alice[0].value : 0.0;
    r.completeness_deviation = r.battery.condition("Completeness").deviation;
    return r;
}

EnsembleFactory lambda_many_factory(const EPRBScenario &sc) {
    const StateVector psi = full_state(sc);
    return [psi](const Context &) { return Ensemble{Microstate(psi)}; };
}

EnsembleFactory lambda_one_factory(const EPRBScenario &sc) {
    EPRBScenario fixed = sc;
    fixed.n = resolved_n(sc);
    return [fixed](const Context &ctx) {
        EPRBScenario local = fixed;
        local.settings.a = ctx.a;
        local.settings.b = ctx.b;
        return context_expansion(local, 0, 0).expansion.microstates();
    };
}

double fit_exponent(const std::function<double(double)> &e, double lo, double hi,
                    std::size_t points) {
    if (!(lo > 0.0) || !(hi > lo) || points < 2) {
        throw PreconditionError("fit_exponent: need 0 < lo < hi and at least two points");
    }
    const double e0 = e(0.0);
    double sx = 0.0;
    double sy = 0.0;
    double sxx = 0.0;
    double sxy = 0.0;
    const double step = std::log(hi / lo) / static_cast<double>(points - 1);
    for (std::size_t k = 0; k < points; ++k) {
        const double theta = lo * std::exp(step * static_cast<double>(k));
        const double x = std::log(theta);
        const double y = std::log(std::abs(e(theta) - e0));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double m = static_cast<double>(points);
    return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

std::vector<SweepRow> correlation_sweep(const EPRBScenario &sc,
                                        const std::vector<double> &thetas_deg) {
    validate(sc);
    const double base = std::atan2(sc.settings.a.x(), sc.settings.a.z());
    std::vector<SweepRow> rows;
    rows.reserve(thetas_deg.size());
    for (const double deg : thetas_deg) {
        EPRBScenario local = sc;
        local.settings.b = planar_direction(base + deg * std::numbers::pi / 180.0);
        local.settings.a_prime = local.settings.a;
        local.settings.b_prime = local.settings.b;
        SweepRow row;
        row.theta_deg = deg;
        local.backend = Backend::Born;
        row.e_born = correlation(local, 0, 0).value;
        local.backend = Backend::Counting;
        const auto c = correlation(local, 0, 0);
        row.e_counting_lo = c.lower;
        row.e_counting_hi = c.upper;
        local.backend = Backend::MonteCarlo;
        const auto m = correlation(local, 0, 0);
        row.e_mc = m.value;
        row.std_error = m.std_error;
        rows.push_back(row);
    }
    return rows;
}

} // namespace lmany
