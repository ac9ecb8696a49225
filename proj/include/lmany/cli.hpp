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
 * @file cli.hpp
 * Command-line front end. A run is configured by an optional JSON document
 * whose values individual flags override.
 *
 * Exit codes: 0 success, 1 configuration error, 2 computation error.
 */
#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lmany/eprb.hpp"
#include "lmany/serialize.hpp"

namespace lmany {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitComputation = 2;

class ConfigError : public Error {
  public:
    using Error::Error;
};

struct RunConfig {
    std::array<double, 4> angles_deg{0.0, 90.0, 45.0, 135.0}; ///< a, a′, b, b′
    std::string state = "singlet"; ///< singlet | photon-box | product
    StateVector product_alice;     ///< used when state == "product"
    StateVector product_bob;
    std::optional<std::array<std::size_t, 2>> ancilla;
    std::size_t n = 0; ///< 0: suggested
    std::string backend = "born"; ///< born | counting | montecarlo | all
    std::uint64_t trials = 1'000'000;
    std::optional<std::uint64_t> seed;
    std::string format; ///< json | csv; empty: per-command default
    std::string out;    ///< empty: standard output
    double tolerance = 1e-9;
    std::vector<std::size_t> schedule{8, 16, 32, 64, 128, 256, 512, 1024};
    std::string cell = "++";
    std::string context = "a,b"; ///< a,b | a,b' | a',b | a',b'
};

/// Applies the keys of a JSON config to `cfg`; throws ConfigError.
void apply_config(const Json &doc, RunConfig &cfg);

/// Scenario described by a config, with `backend` selected.
EPRBScenario make_scenario(const RunConfig &cfg, Backend backend);

/// Runs one command; `out` receives the report unless --out is given.
int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

} // namespace lmany
