// SPDX-License-Identifier: Apache-2.0
//
// Policy complexity metrics, deltas against a baseline, a filterable
// structural diff, and the attribute-hierarchy graph export.

#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sepolyzer/policy.hpp"

namespace sepolyzer {

class FilterUnknownTypeError : public Error {
  public:
    explicit FilterUnknownTypeError(const std::string& id)
        : Error("filter type '" + id + "' is declared in neither policy") {}
};

struct PolicyStats {
    std::int64_t typeCount = 0;
    std::int64_t domainCount = 0;  // members of the domain-marker attribute
    std::int64_t typeTransitionCount = 0;
    std::int64_t processTransitionCount = 0;
    std::int64_t allowRuleCount = 0;  // statements as written, no expansion
    std::int64_t attributeCount = 0;
    std::int64_t genfsContextCount = 0;
    std::int64_t untrustedAppRuleCount = 0;  // resolved source contains untrusted_app
    std::int64_t classCount = 0;
    std::int64_t permissionCount = 0;  // distinct permission names across classes
    std::int64_t initialSidCount = 0;

    bool operator==(const PolicyStats&) const = default;
};

struct StatsDelta {
    std::int64_t typeCount = 0;
    std::int64_t domainCount = 0;
    std::int64_t typeTransitionCount = 0;
    std::int64_t processTransitionCount = 0;
    std::int64_t allowRuleCount = 0;
    std::int64_t attributeCount = 0;
    std::int64_t genfsContextCount = 0;
    std::int64_t untrustedAppRuleCount = 0;
    std::int64_t classCount = 0;
    std::int64_t permissionCount = 0;
    std::int64_t initialSidCount = 0;

    bool operator==(const StatsDelta&) const = default;
};

/// Ratios are absent (undefined) when the denominator is zero.
struct ComplexityRatios {
    std::optional<double> allowPerType;
    std::optional<double> typesPerDomain;
    std::optional<double> processTransPerDomain;
};

/// SEAndroid convention marks every process type with the "domain"
/// attribute; both marker names are configurable for policies that deviate.
struct StatsOptions {
    std::string domainAttribute = "domain";
    std::string untrustedAppType = "untrusted_app";
};

PolicyStats compute_stats(const Policy& policy, const StatsOptions& options = {});

ComplexityRatios complexity_ratios(const PolicyStats& stats);

/// Fieldwise subject - baseline.
StatsDelta stats_delta(const PolicyStats& baseline, const PolicyStats& subject);

/// Number of distinct (source, target, class) triples after attribute
/// expansion; reported alongside the statement count to resolve the
/// usual ambiguity in "allow rule" totals.
std::int64_t expanded_allow_count(const Policy& policy);

struct PolicyDiff {
    std::set<std::string> addedTypes, removedTypes;
    std::set<std::string> addedAttributes, removedAttributes;
    std::vector<AllowRule> addedAllows, removedAllows;
    std::vector<NeverallowRule> addedNeverallows, removedNeverallows;
    std::vector<TypeTransitionRule> addedTransitions, removedTransitions;
    std::vector<GenfsContext> addedGenfs, removedGenfs;

    bool empty() const;
};

struct DiffFilter {
    std::string type;  // declared type or attribute in at least one policy
};

/// Structural set-difference of the two policies. Rules compare by
/// canonical rendering (sorted set members and permissions), so duplicate
/// statements count once. A filter keeps only entries whose resolved
/// source or target set touches the given type (attribute filters match
/// any of the attribute's members); throws FilterUnknownTypeError if the
/// identifier is declared in neither policy.
PolicyDiff diff_policies(const Policy& baseline, const Policy& subject,
                         const std::optional<DiffFilter>& filter = std::nullopt);

/// DOT digraph with one node per type and attribute (attributes drawn as
/// boxes) and one edge per attribute membership. Output is byte-stable:
/// nodes and edges are ordered lexicographically.
std::string export_attribute_graph(const Policy& policy);

}  // namespace sepolyzer
