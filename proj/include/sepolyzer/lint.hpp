// SPDX-License-Identifier: Apache-2.0
//
// Heuristic misconfiguration detectors for OEM policy review:
//
//   L1  default-type usage        warning  allow rule targets a catch-all
//                                          default object type
//   L2  crowded predefined domain warning  predefined app domain accumulates
//                                          far more rules than the baseline
//   L3  vestigial execute         warning  execute granted on file with no
//                                          process transition and no
//                                          execute_no_trans; never usable
//   L4  untrusted-domain addition error    new rule grants access to an
//                                          untrusted domain
//   L5  sensitive-type exposure   warning  rule targets a security-sensitive
//                                          type (error from untrusted source)
//   L6  missing open              info     read/write granted but no rule
//                                          grants open on the same pair
//
// L1/L2/L4/L5 are baseline-aware: with a baseline policy they report only
// what the subject adds. L3/L6 are structural and fire regardless.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sepolyzer/policy.hpp"

namespace sepolyzer {

struct Snapshot;  // device module; lint only forwards to refine_findings

class ConfigError : public Error {
  public:
    using Error::Error;
};

enum class Severity { Error = 0, Warning = 1, Info = 2 };
enum class Detector { L1 = 1, L2, L3, L4, L5, L6 };

std::string to_string(Severity s);
std::string to_string(Detector d);
std::optional<Severity> severity_from_string(std::string_view s);

struct LintConfig {
    std::set<std::string> defaultTypes = {"unlabeled", "socket_device", "device", "default_prop",
                                          "system_data_file"};
    std::set<std::string> sensitiveTypes = {"proc_security", "kmem_device", "security_file", "tee",
                                            "keystore"};
    std::set<std::string> untrustedDomains = {"untrusted_app"};
    std::set<std::string> crowdedDomains = {"system_app", "platform_app"};
    double crowdedRatioThreshold = 2.0;
    Severity missingOpenSeverity = Severity::Info;

    /// Throws ConfigError: threshold must exceed 1.0, sets must be nonempty.
    void validate() const;

    /// key=value text, '#' comments. Keys: default_types, sensitive_types,
    /// untrusted_domains, crowded_domains (comma-separated identifiers),
    /// crowded_ratio_threshold, missing_open_severity (error|warning|info).
    /// Unlisted keys keep their defaults.
    static LintConfig load(std::string_view text);
};

struct Finding {
    Detector detector;
    Severity severity;
    SourceLocation origin;
    std::string ruleText;
    std::string subjectType;
    std::string explanation;
    bool notFunctional = false;          // set by snapshot refinement
    std::optional<AllowRule> rule;       // absent for aggregate findings (L2)
};

/// Runs all detectors. Findings are sorted by severity (most severe
/// first), detector, origin, then subject; identical inputs produce
/// byte-identical lists. When a snapshot is supplied, reachability
/// refinement (device module) downgrades findings whose rules cannot be
/// exercised on the recorded device.
std::vector<Finding> run_lint(const Policy& policy, const Policy* baseline = nullptr,
                              const Snapshot* snapshot = nullptr, const LintConfig& config = {});

struct DefaultTypeUsage {
    std::int64_t subjectCount = 0;
    std::optional<std::int64_t> baselineCount;
};

/// Per-default-type allow-rule counts (rules whose resolved target set
/// contains the type), for the usage table that accompanies L1.
std::map<std::string, DefaultTypeUsage> default_type_usage(const Policy& policy,
                                                           const Policy* baseline = nullptr,
                                                           const LintConfig& config = {});

}  // namespace sepolyzer
