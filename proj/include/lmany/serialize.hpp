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
 * @file serialize.hpp
 * JSON and CSV encodings. Rationals are {"num", "den"} objects and complex
 * numbers are [re, im] pairs.
 */
#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "lmany/eprb.hpp"
#include "lmany/hidden_variable.hpp"
#include "lmany/lambda_many.hpp"

namespace lmany {

using Json = nlohmann::ordered_json;

Json to_json(const Rational &r);
Json to_json(Complex z);
Json to_json(const StateVector &x);
Json to_json(const ImpreciseProbability &ip);
Json to_json(const Quantity &q);
Json to_json(const JointDistribution &jd);
Json to_json(const Marginals &m);
Json to_json(const ChshValue &c);
Json to_json(const ConditionResult &r);
Json to_json(const ConditionReport &r);
Json to_json(const EmpiricalJoint &ej);
Json to_json(const VerificationReport &r);
/// {parent, amplitude, microstates: [{amplitudes, classification, branch_label}]}
Json to_json(const AdaptedExpansion &ae);

/// Shortest text that reads back to the same double.
std::string format_double(double x);

/// n, lower_num, lower_den, upper_num, upper_den, born, width
std::string to_csv(const std::vector<SweepPoint> &sweep);
/// theta_deg, E_born, E_counting_lo, E_counting_hi, E_mc, stderr
std::string to_csv(const std::vector<SweepRow> &rows);

} // namespace lmany
