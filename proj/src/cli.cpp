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

#include "lmany/cli.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include <unistd.h>

#include <CLI11.hpp>

namespace lmany {

namespace {

const std::vector<std::string> kFlagNames{"config", "backend", "n",        "trials",
                                          "seed",   "out",     "format",   "tolerance",
                                          "angles", "state",   "ancilla",  "schedule",
                                          "cell",   "context"};

std::vector<std::string> split_list(const std::string &s) {
    std::vector<std::string> parts;
    std::string item;
    std::istringstream is(s);
    while (std::getline(is, item, ',')) {
        parts.push_back(item);
    }
    return parts;
}

double parse_double(const std::string &s, const std::string &what) {
    double v = 0.0;
    const auto *end = s.data() + s.size();
    const auto res = std::from_chars(s.data(), end, v);
    if (res.ec != std::errc() || res.ptr != end || !std::isfinite(v)) {
        throw ConfigError("invalid " + what + ": '" + s + "'");
    }
    return v;
}

std::uint64_t parse_uint(const std::string &s, const std::string &what) {
    std::uint64_t v = 0;
    const auto *end = s.data() + s.size();
    const auto res = std::from_chars(s.data(), end, v);
    if (res.ec != std::errc() || res.ptr != end) {
        throw ConfigError("invalid " + what + ": '" + s + "'");
    }
    return v;
}

std::pair<int, int> parse_context(const std::string &s) {
    static const std::map<std::string, std::pair<int, int>> names{
        {"a,b", {0, 0}}, {"a,b'", {0, 1}}, {"a',b", {1, 0}}, {"a',b'", {1, 1}}};
    const auto it = names.find(s);
    if (it == names.end()) {
        throw ConfigError("invalid context '" + s + "' (expected a,b | a,b' | a',b | a',b')");
    }
    return it->second;
}

OutcomeLabel parse_cell(const std::string &s) {
    for (std::size_t c = 0; c < 4; ++c) {
        if (to_string(cell_label(c)) == s) {
            return cell_label(c);
        }
    }
    throw ConfigError("invalid cell '" + s + "' (expected ++, +-, -+ or --)");
}

StateVector parse_amplitudes(const Json &j, const std::string &what) {
    if (!j.is_array() || j.size() != 2) {
        throw ConfigError(what + " must list two amplitudes");
    }
    CVector amp(2);
    for (std::size_t k = 0; k < 2; ++k) {
        const auto &z = j[k];
        if (z.is_number()) {
            amp[static_cast<Eigen::Index>(k)] = Complex(z.get<double>(), 0.0);
        } else if (z.is_array() && z.size() == 2 && z[0].is_number() && z[1].is_number()) {
            amp[static_cast<Eigen::Index>(k)] = Complex(z[0].get<double>(), z[1].get<double>());
        } else {
            throw ConfigError(what + " amplitudes must be numbers or [re, im] pairs");
        }
    }
    if (amp.norm() == 0.0) {
        throw ConfigError(what + " must be nonzero");
    }
    return StateVector(std::move(amp));
}

void check_config(const RunConfig &cfg) {
    for (double a : cfg.angles_deg) {
        if (!std::isfinite(a)) {
            throw ConfigError("angles must be finite");
        }
    }
    if (cfg.state != "singlet" && cfg.state != "photon-box" && cfg.state != "product") {
        throw ConfigError("invalid state '" + cfg.state + "'");
    }
    if (cfg.ancilla && ((*cfg.ancilla)[0] == 0 || (*cfg.ancilla)[1] == 0)) {
        throw ConfigError("ancilla dimensions must be at least 1");
    }
    if (cfg.n == 1) {
        throw ConfigError("n must be at least 2");
    }
    if (cfg.backend != "born" && cfg.backend != "counting" && cfg.backend != "montecarlo" &&
        cfg.backend != "all") {
        throw ConfigError("invalid backend '" + cfg.backend + "'");
    }
    if (cfg.trials == 0) {
        throw ConfigError("trials must be at least 1");
    }
    if (!cfg.format.empty() && cfg.format != "json" && cfg.format != "csv") {
        throw ConfigError("invalid format '" + cfg.format + "'");
    }
    if (!(cfg.tolerance >= 0.0)) {
        throw ConfigError("tolerance must be nonnegative");
    }
    for (std::size_t k = 0; k < cfg.schedule.size(); ++k) {
        if (cfg.schedule[k] < 2 || (k > 0 && cfg.schedule[k] <= cfg.schedule[k - 1])) {
            throw ConfigError("schedule must be strictly increasing with entries >= 2");
        }
    }
    if (cfg.schedule.empty()) {
        throw ConfigError("schedule is empty");
    }
    parse_cell(cfg.cell);
    parse_context(cfg.context);
}

void write_atomically(const std::string &path, const std::string &payload) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    fs::path tmp = target;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) {
            throw Error("cannot write " + tmp.string());
        }
        f << payload;
        f.flush();
        if (!f) {
            throw Error("failed writing " + tmp.string());
        }
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp);
        throw Error("cannot move output into place: " + ec.message());
    }
}

std::vector<Backend> backends_of(const RunConfig &cfg) {
    if (cfg.backend == "all") {
        return {Backend::Born, Backend::Counting, Backend::MonteCarlo};
    }
    return {*backend_from_string(cfg.backend)};
}

void require_seed(const RunConfig &cfg, Backend b) {
    if (b == Backend::MonteCarlo && !cfg.seed) {
        throw ConfigError("the montecarlo backend requires --seed");
    }
}

Json angles_json(const RunConfig &cfg) {
    return Json{{"a", cfg.angles_deg[0]},
                {"a_prime", cfg.angles_deg[1]},
                {"b", cfg.angles_deg[2]},
                {"b_prime", cfg.angles_deg[3]}};
}

std::string dump(const Json &j) { return j.dump(2) + "\n"; }

std::string cmd_chsh(const RunConfig &cfg, const std::string &format) {
    const auto backends = backends_of(cfg);
    for (auto b : backends) {
        require_seed(cfg, b);
    }
    Json results = Json::array();
    std::ostringstream csv;
    csv << "backend,S,S_lower,S_upper,std_error\n";
    for (auto b : backends) {
        auto sc = make_scenario(cfg, b);
        if (b != Backend::Born) {
            sc.n = resolved_n(sc);
        }
        const auto value = chsh(sc);
        Json entry{{"backend", to_string(b)}};
        if (b != Backend::Born) {
            entry["n"] = sc.n;
        }
        if (b == Backend::MonteCarlo) {
            entry["trials"] = sc.trials;
            entry["seed"] = sc.seed;
        }
        const Json fields = to_json(value);
        for (const auto &[k, v] : fields.items()) {
            entry[k] = v;
        }
        results.push_back(entry);
        csv << to_string(b) << ',' << format_double(value.s.value) << ','
            << format_double(value.s.lower) << ',' << format_double(value.s.upper) << ','
            << format_double(value.s.std_error) << '\n';
    }
    if (format == "csv") {
        return csv.str();
    }
    return dump(Json{{"command", "chsh"},
                     {"state", cfg.state},
                     {"angles_deg", angles_json(cfg)},
                     {"results", results}});
}

std::string cmd_converge(const RunConfig &cfg, const std::string &format) {
    const auto [i, j] = parse_context(cfg.context);
    const auto sc = make_scenario(cfg, Backend::Counting);
    const auto p = branch_projector(sc, i, j, parse_cell(cfg.cell));
    const auto sweep = convergence_sweep(full_state(sc), p, cfg.schedule);
    if (format == "json") {
        Json points = Json::array();
        for (const auto &pt : sweep) {
            points.push_back(Json{{"n", pt.bounds.n},
                                  {"bounds", to_json(pt.bounds)},
                                  {"born", pt.born},
                                  {"width", to_double(pt.bounds.width())}});
        }
        return dump(Json{{"command", "converge"},
                         {"cell", cfg.cell},
                         {"context", cfg.context},
                         {"points", points}});
    }
    return to_csv(sweep);
}

std::string cmd_locality(const RunConfig &cfg, const std::string &format) {
    if (cfg.backend == "all") {
        throw ConfigError("locality takes a single backend");
    }
    const auto b = *backend_from_string(cfg.backend);
    require_seed(cfg, b);
    const auto report = condition_battery(make_scenario(cfg, b), cfg.tolerance);
    if (format == "csv") {
        std::ostringstream os;
        os << "name,holds,lhs,rhs,deviation,tolerance\n";
        for (const auto &c : report.conditions) {
            os << c.name << ',' << to_string(c.verdict) << ',' << format_double(c.lhs) << ','
               << format_double(c.rhs) << ',' << format_double(c.deviation) << ','
               << format_double(c.tolerance) << '\n';
        }
        os << "CHSH,," << format_double(report.chsh.s.value) << ",2,,\n";
        return os.str();
    }
    Json doc = to_json(report);
    doc["state"] = cfg.state;
    return dump(doc);
}

std::string cmd_sample(const RunConfig &cfg, const std::string &format) {
    require_seed(cfg, Backend::MonteCarlo);
    const auto [i, j] = parse_context(cfg.context);
    const auto sc = make_scenario(cfg, Backend::MonteCarlo);
    const auto ae = context_expansion(sc, i, j);
    const auto model = lambda_one_model(ae, sc.settings.context(i, j));
    const auto ej = monte_carlo(model, cfg.trials, *cfg.seed);
    if (format == "csv") {
        std::ostringstream os;
        os << "cell,count\n";
        for (std::size_t c = 0; c < 4; ++c) {
            os << to_string(cell_label(c)) << ',' << ej.counts[c] << '\n';
        }
        os << "cat," << ej.cat_hits << '\n';
        return os.str();
    }
    return dump(to_json(ej));
}

std::string cmd_dump(const RunConfig &cfg, const std::string &format) {
    if (format == "csv") {
        throw ConfigError("dump-expansion supports json only");
    }
    const auto [i, j] = parse_context(cfg.context);
    const auto sc = make_scenario(cfg, Backend::Counting);
    return dump(to_json(context_expansion(sc, i, j)));
}

} // namespace

void apply_config(const Json &doc, RunConfig &cfg) {
    if (!doc.is_object()) {
        throw ConfigError("config must be a JSON object");
    }
    try {
        for (const auto &[key, value] : doc.items()) {
            if (key == "angles") {
                if (value.is_array() && value.size() == 4) {
                    for (std::size_t k = 0; k < 4; ++k) {
                        cfg.angles_deg[k] = value[k].get<double>();
                    }
                } else if (value.is_object()) {
                    static const std::array<const char *, 4> names{"a", "a_prime", "b",
                                                                   "b_prime"};
                    for (const auto &[name, angle] : value.items()) {
                        const auto it = std::find(names.begin(), names.end(), name);
                        if (it == names.end()) {
                            throw ConfigError("unknown angle '" + name + "'");
                        }
                        if (!angle.is_number()) {
                            throw ConfigError("angle '" + name + "' must be a number");
                        }
                        cfg.angles_deg[static_cast<std::size_t>(it - names.begin())] =
                            angle.get<double>();
                    }
                } else {
                    throw ConfigError("angles must be an object or a list of four numbers");
                }
            } else if (key == "state") {
                if (value.is_string()) {
                    cfg.state = value.get<std::string>();
                } else if (value.is_object() && value.contains("product")) {
                    const auto &p = value.at("product");
                    cfg.state = "product";
                    cfg.product_alice = parse_amplitudes(p.at("alice"), "product.alice");
                    cfg.product_bob = parse_amplitudes(p.at("bob"), "product.bob");
                } else {
                    throw ConfigError("state must be a name or {\"product\": ...}");
                }
            } else if (key == "ancilla_dims") {
                if (value.is_number_unsigned()) {
                    const auto d = value.get<std::size_t>();
                    cfg.ancilla = std::array<std::size_t, 2>{d, d};
                } else if (value.is_array() && value.size() == 2) {
                    cfg.ancilla = std::array<std::size_t, 2>{value[0].get<std::size_t>(),
                                                             value[1].get<std::size_t>()};
                } else {
                    throw ConfigError("ancilla_dims must be a number or a pair");
                }
            } else if (key == "n") {
                cfg.n = value.get<std::size_t>();
            } else if (key == "backend") {
                cfg.backend = value.get<std::string>();
            } else if (key == "trials") {
                cfg.trials = value.get<std::uint64_t>();
            } else if (key == "seed") {
                cfg.seed = value.get<std::uint64_t>();
            } else if (key == "format") {
                cfg.format = value.get<std::string>();
            } else if (key == "out") {
                cfg.out = value.get<std::string>();
            } else if (key == "tolerance") {
                cfg.tolerance = value.get<double>();
            } else if (key == "schedule") {
                cfg.schedule = value.get<std::vector<std::size_t>>();
            } else if (key == "cell") {
                cfg.cell = value.get<std::string>();
            } else if (key == "context") {
                cfg.context = value.get<std::string>();
            } else {
                throw ConfigError("unknown config key '" + key + "'");
            }
        }
    } catch (const nlohmann::json::exception &e) {
        throw ConfigError(std::string("config type error: ") + e.what());
    }
}

EPRBScenario make_scenario(const RunConfig &cfg, Backend backend) {
    EPRBScenario sc;
    std::size_t default_ancilla = 64;
    if (cfg.state == "photon-box") {
        sc = photon_box();
        default_ancilla = 1;
    } else {
        sc.settings = planar_settings(cfg.angles_deg[0], cfg.angles_deg[1], cfg.angles_deg[2],
                                      cfg.angles_deg[3]);
        if (cfg.state == "product") {
            sc.spin_state = tensor(cfg.product_alice, cfg.product_bob);
        }
    }
    const auto anc = cfg.ancilla.value_or(std::array<std::size_t, 2>{default_ancilla,
                                                                     default_ancilla});
    sc.ancilla_a = anc[0];
    sc.ancilla_b = anc[1];
    sc.n = cfg.n;
    sc.backend = backend;
    sc.trials = cfg.trials;
    sc.seed = cfg.seed.value_or(0);
    return sc;
}

int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
    CLI::App app{"Microstate counting and hidden-variable models for EPRB experiments",
                 "lmany"};
    app.require_subcommand(1);
    std::map<std::string, std::string> values;
    std::map<std::string, std::vector<CLI::Option *>> given;
    const std::vector<std::pair<std::string, std::string>> commands{
        {"chsh", "CHSH value per backend"},
        {"converge", "counting bounds for one branch along an n schedule"},
        {"locality", "parameter/outcome independence, completeness, measurement "
                     "independence and CHSH"},
        {"sample", "lambda-one Monte Carlo sampling of one context"},
        {"dump-expansion", "product-adapted expansion of one context"}};
    const std::map<std::string, std::string> help{
        {"config", "JSON config file"},
        {"backend", "born | counting | montecarlo | all"},
        {"n", "microstates per expansion (default: suggested)"},
        {"trials", "Monte Carlo trials"},
        {"seed", "Monte Carlo seed"},
        {"out", "write the report to this file"},
        {"format", "json | csv"},
        {"tolerance", "verdict tolerance"},
        {"angles", "a,a',b,b' in degrees"},
        {"state", "singlet | photon-box"},
        {"ancilla", "ancilla dimension, or d_A,d_B"},
        {"schedule", "comma-separated n values"},
        {"cell", "++ | +- | -+ | --"},
        {"context", "a,b | a,b' | a',b | a',b'"}};
    std::vector<CLI::App *> subs;
    for (const auto &[name, description] : commands) {
        auto *sub = app.add_subcommand(name, description);
        for (const auto &flag : kFlagNames) {
            given[flag].push_back(sub->add_option("--" + flag, values[flag], help.at(flag)));
        }
        subs.push_back(sub);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError &e) {
        err << "lmany: " << e.what() << "\n";
        return kExitConfig;
    }
    std::string command;
    for (auto *sub : subs) {
        if (sub->parsed()) {
            command = sub->get_name();
        }
    }
    const auto has = [&](const std::string &flag) {
        const auto &opts = given.at(flag);
        return std::any_of(opts.begin(), opts.end(),
                           [](const CLI::Option *o) { return o->count() > 0; });
    };

    RunConfig cfg;
    try {
        if (has("config")) {
            std::ifstream f(values["config"]);
            if (!f) {
                throw ConfigError("cannot read config '" + values["config"] + "'");
            }
            Json doc;
            try {
                doc = Json::parse(f);
            } catch (const nlohmann::json::exception &e) {
                throw ConfigError(std::string("malformed config: ") + e.what());
            }
            apply_config(doc, cfg);
        }
        if (has("backend")) {
            cfg.backend = values["backend"];
        }
        if (has("n")) {
            cfg.n = parse_uint(values["n"], "n");
        }
        if (has("trials")) {
            cfg.trials = parse_uint(values["trials"], "trials");
        }
        if (has("seed")) {
            cfg.seed = parse_uint(values["seed"], "seed");
        }
        if (has("out")) {
            cfg.out = values["out"];
        }
        if (has("format")) {
            cfg.format = values["format"];
        }
        if (has("tolerance")) {
            cfg.tolerance = parse_double(values["tolerance"], "tolerance");
        }
        if (has("angles")) {
            const auto parts = split_list(values["angles"]);
            if (parts.size() != 4) {
                throw ConfigError("--angles needs four comma-separated values");
            }
            for (std::size_t k = 0; k < 4; ++k) {
                cfg.angles_deg[k] = parse_double(parts[k], "angle");
            }
        }
        if (has("state")) {
            cfg.state = values["state"];
            if (cfg.state == "product") {
                throw ConfigError("product states are configured through --config");
            }
        }
        if (has("ancilla")) {
            const auto parts = split_list(values["ancilla"]);
            if (parts.size() == 1) {
                const auto d = parse_uint(parts[0], "ancilla");
                cfg.ancilla = std::array<std::size_t, 2>{d, d};
            } else if (parts.size() == 2) {
                cfg.ancilla = std::array<std::size_t, 2>{parse_uint(parts[0], "ancilla"),
                                                         parse_uint(parts[1], "ancilla")};
            } else {
                throw ConfigError("--ancilla takes d or d_A,d_B");
            }
        }
        if (has("schedule")) {
            cfg.schedule.clear();
            for (const auto &p : split_list(values["schedule"])) {
                cfg.schedule.push_back(parse_uint(p, "schedule entry"));
            }
        }
        if (has("cell")) {
            cfg.cell = values["cell"];
        }
        if (has("context")) {
            cfg.context = values["context"];
        }
        check_config(cfg);
    } catch (const ConfigError &e) {
        err << "lmany: " << e.what() << "\n";
        return kExitConfig;
    }

    const std::string format =
        !cfg.format.empty() ? cfg.format : (command == "converge" ? "csv" : "json");
    std::string payload;
    try {
        if (command == "chsh") {
            payload = cmd_chsh(cfg, format);
        } else if (command == "converge") {
            payload = cmd_converge(cfg, format);
        } else if (command == "locality") {
            payload = cmd_locality(cfg, format);
        } else if (command == "sample") {
            payload = cmd_sample(cfg, format);
        } else {
            payload = cmd_dump(cfg, format);
        }
        if (cfg.out.empty()) {
            out << payload;
        } else {
            write_atomically(cfg.out, payload);
        }
    } catch (const ConfigError &e) {
        err << "lmany: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception &e) {
        err << "lmany: " << e.what() << "\n";
        return kExitComputation;
    }
    return kExitOk;
}

} // namespace lmany
