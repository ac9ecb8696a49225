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

#include "lmany/serialize.hpp"

#include <charconv>
#include <sstream>

namespace lmany {

Json to_json(const Rational &r) {
    return Json{{"num", r.numerator()}, {"den", r.denominator()}};
}

Json to_json(Complex z) { return Json::array({z.real(), z.imag()}); }

Json to_json(const StateVector &x) {
    Json out = Json::array();
    for (std::size_t i = 0; i < x.dim(); ++i) {
        out.push_back(to_json(x[i]));
    }
    return out;
}

Json to_json(const ImpreciseProbability &ip) {
    return Json{{"lower", to_json(ip.lower)},
                {"upper", to_json(ip.upper)},
                {"n", ip.n},
                {"cat_count", ip.cat_count}};
}

Json to_json(const Quantity &q) {
    Json out{{"value", q.value}, {"lower", q.lower}, {"upper", q.upper}};
    if (q.std_error > 0.0) {
        out["std_error"] = q.std_error;
    }
    if (q.exact_lower && q.exact_upper) {
        out["exact"] = Json{{"lower", to_json(*q.exact_lower)},
                            {"upper", to_json(*q.exact_upper)}};
    }
    return out;
}

Json to_json(const JointDistribution &jd) {
    Json cells = Json::object();
    for (std::size_t c = 0; c < 4; ++c) {
        cells[to_string(cell_label(c))] = to_json(jd.cells[c]);
    }
    Json out{{"backend", to_string(jd.backend)},
             {"cells", cells},
             {"cat_mass", to_json(jd.cat_mass)},
             {"provenance", jd.provenance}};
    if (jd.backend != Backend::Born) {
        out["n"] = jd.n;
    }
    if (jd.backend == Backend::MonteCarlo) {
        out["trials"] = jd.trials;
        out["seed"] = jd.seed;
    }
    return out;
}

Json to_json(const Marginals &m) {
    return Json{{"alice", {{"+", to_json(m.alice[0])}, {"-", to_json(m.alice[1])}}},
                {"bob", {{"+", to_json(m.bob[0])}, {"-", to_json(m.bob[1])}}}};
}

Json to_json(const ChshValue &c) {
    static const std::array<const char *, 4> names{"a,b", "a,b'", "a',b", "a',b'"};
    Json corr = Json::object();
    for (std::size_t k = 0; k < 4; ++k) {
        corr[names[k]] = to_json(c.correlations[k]);
    }
    return Json{{"S", to_json(c.s)}, {"correlations", corr}};
}

Json to_json(const ConditionResult &r) {
    Json out{{"name", r.name},
             {"holds", to_string(r.verdict)},
             {"lhs", r.lhs},
             {"rhs", r.rhs},
             {"deviation", r.deviation},
             {"tolerance", r.tolerance}};
    if (!r.note.empty()) {
        out["note"] = r.note;
    }
    return out;
}

Json to_json(const ConditionReport &r) {
    static const std::array<const char *, 4> names{"a,b", "a,b'", "a',b", "a',b'"};
    Json conditions = Json::array();
    for (const auto &c : r.conditions) {
        conditions.push_back(to_json(c));
    }
    Json contexts = Json::array();
    for (std::size_t k = 0; k < r.contexts.size(); ++k) {
        const auto &c = r.contexts[k];
        contexts.push_back(Json{{"context", names[k]},
                                {"joint", to_json(c.joint)},
                                {"correlation", to_json(c.correlation)},
                                {"local_marginals", to_json(c.local)}});
    }
    return Json{{"backend", to_string(r.backend)},
                {"conditions", conditions},
                {"chsh", to_json(r.chsh)},
                {"contexts", contexts}};
}

Json to_json(const EmpiricalJoint &ej) {
    Json counts = Json::object();
    for (std::size_t c = 0; c < 4; ++c) {
        counts[to_string(cell_label(c))] = ej.counts[c];
    }
    return Json{{"counts", counts},
                {"trials", ej.trials},
                {"cat_hits", ej.cat_hits},
                {"seed", ej.seed}};
}

Json to_json(const VerificationReport &r) {
    return Json{{"max_overlap", r.max_overlap},
                {"max_norm_deviation", r.max_norm_deviation},
                {"reconstruction_error", r.reconstruction_error},
                {"passed", r.passed}};
}

Json to_json(const AdaptedExpansion &ae) {
    Json microstates = Json::array();
    const auto &ms = ae.expansion.microstates();
    for (std::size_t j = 0; j < ms.size(); ++j) {
        Json classification = Json::object();
        for (std::size_t t = 0; t < ae.targets.size(); ++t) {
            classification[ae.targets[t].label] = to_string(ae.classification[t][j]);
        }
        const auto &label = ms[j].branch_label();
        microstates.push_back(Json{{"amplitudes", to_json(ms[j].vector())},
                                   {"classification", classification},
                                   {"branch_label", label ? Json(to_string(*label))
                                                          : Json(nullptr)}});
    }
    return Json{{"parent", to_json(ae.expansion.parent())},
                {"amplitude", ae.expansion.amplitude()},
                {"n", ae.n()},
                {"verification", to_json(ae.verification)},
                {"microstates", microstates}};
}

std::string format_double(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

std::string to_csv(const std::vector<SweepPoint> &sweep) {
    std::ostringstream os;
    os << "n,lower_num,lower_den,upper_num,upper_den,born,width\n";
    for (const auto &p : sweep) {
        os << p.bounds.n << ',' << p.bounds.lower.numerator() << ','
           << p.bounds.lower.denominator() << ',' << p.bounds.upper.numerator() << ','
           << p.bounds.upper.denominator() << ',' << format_double(p.born) << ','
           << format_double(to_double(p.bounds.width())) << '\n';
    }
    return os.str();
}

std::string to_csv(const std::vector<SweepRow> &rows) {
    std::ostringstream os;
    os << "theta_deg,E_born,E_counting_lo,E_counting_hi,E_mc,stderr\n";
    for (const auto &r : rows) {
        os << format_double(r.theta_deg) << ',' << format_double(r.e_born) << ','
           << format_double(r.e_counting_lo) << ',' << format_double(r.e_counting_hi) << ','
           << format_double(r.e_mc) << ',' << format_double(r.std_error) << '\n';
    }
    return os.str();
}

} // namespace lmany
