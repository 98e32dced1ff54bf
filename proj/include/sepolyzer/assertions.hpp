// SPDX-License-Identifier: Apache-2.0
//
// Neverallow checking as an offline analysis: the same conflict the policy
// compiler would reject at build time, detectable after the fact on a
// policy the compiler never saw (e.g. an OEM policy checked against the
// reference neverallow set).

#pragma once

#include <set>
#include <string>
#include <vector>

#include "sepolyzer/policy.hpp"

namespace sepolyzer {

/// A (neverallow, allow) pair whose expansions overlap, with one concrete
/// witness tuple drawn from the overlap.
struct NeverallowViolation {
    NeverallowRule neverallow;
    AllowRule allow;
    std::string witnessSource;
    std::string witnessTarget;
    std::string witnessClass;
    std::set<std::string> witnessPerms;  // {"*"} when both sides grant everything
};

/// Checks every allow rule against the policy's neverallows plus any
/// extras (e.g. a reference neverallow set parsed from a data file whose
/// identifiers resolve against this policy). "self" targets pair each
/// source type with itself on both sides. One violation is reported per
/// conflicting rule pair, ordered by neverallow origin then allow origin.
std::vector<NeverallowViolation> check_neverallows(
    const Policy& policy, const std::vector<NeverallowRule>& extraNeverallows = {},
    bool strict = false);

/// All concrete (source, target) pairs covered by both sides of a
/// violation, for verbose reporting. Ordered lexicographically.
std::vector<std::pair<std::string, std::string>> enumerate_witnesses(
    const Policy& policy, const NeverallowViolation& violation);

}  // namespace sepolyzer
