// SPDX-License-Identifier: Apache-2.0

#include "sepolyzer/lint.hpp"

#include <algorithm>
#include <cstdint>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "sepolyzer/device.hpp"

namespace sepolyzer {

std::string to_string(Severity s) {
    switch (s) {
    case Severity::Error:
        return "error";
    case Severity::Warning:
        return "warning";
    case Severity::Info:
        return "info";
    }
    return "?";
}

std::string to_string(Detector d) {
    return "L" + std::to_string(static_cast<int>(d));
}

std::optional<Severity> severity_from_string(std::string_view s) {
    if (s == "error") {
        return Severity::Error;
    }
    if (s == "warning") {
        return Severity::Warning;
    }
    if (s == "info") {
        return Severity::Info;
    }
    return std::nullopt;
}

void LintConfig::validate() const {
    if (!(crowdedRatioThreshold > 1.0)) {
        throw ConfigError("crowded_ratio_threshold must be greater than 1.0");
    }
    if (defaultTypes.empty() || sensitiveTypes.empty() || untrustedDomains.empty() ||
        crowdedDomains.empty()) {
        throw ConfigError("detector type sets must be nonempty");
    }
}

namespace {

std::string trim(std::string_view s) {
    size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) {
        return {};
    }
    size_t e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::set<std::string> parse_id_list(std::string_view value, const std::string& key) {
    std::set<std::string> out;
    std::string item;
    std::stringstream ss{std::string(value)};
    while (std::getline(ss, item, ',')) {
        std::string id = trim(item);
        if (id.empty()) {
            continue;
        }
        if (!is_valid_identifier(id)) {
            throw ConfigError(key + ": invalid identifier '" + id + "'");
        }
        out.insert(std::move(id));
    }
    return out;
}

}  // namespace

LintConfig LintConfig::load(std::string_view text) {
    LintConfig config;
    size_t start = 0;
    int lineno = 0;
    while (start <= text.size()) {
        auto nl = text.find('\n', start);
        std::string_view line =
            nl == std::string_view::npos ? text.substr(start) : text.substr(start, nl - start);
        start = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++lineno;
        std::string stripped = trim(line.substr(0, line.find('#')));
        if (stripped.empty()) {
            continue;
        }
        auto eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(lineno) + ": expected key=value");
        }
        std::string key = trim(stripped.substr(0, eq));
        std::string value = trim(stripped.substr(eq + 1));
        if (key == "default_types") {
            config.defaultTypes = parse_id_list(value, key);
        } else if (key == "sensitive_types") {
            config.sensitiveTypes = parse_id_list(value, key);
        } else if (key == "untrusted_domains") {
            config.untrustedDomains = parse_id_list(value, key);
        } else if (key == "crowded_domains") {
            config.crowdedDomains = parse_id_list(value, key);
        } else if (key == "crowded_ratio_threshold") {
            try {
                size_t used = 0;
                config.crowdedRatioThreshold = std::stod(value, &used);
                if (used != value.size()) {
                    throw std::invalid_argument(value);
                }
            } catch (const std::exception&) {
                throw ConfigError("crowded_ratio_threshold: invalid number '" + value + "'");
            }
        } else if (key == "missing_open_severity") {
            auto sev = severity_from_string(value);
            if (!sev) {
                throw ConfigError("missing_open_severity: expected error|warning|info");
            }
            config.missingOpenSeverity = *sev;
        } else {
            throw ConfigError("unknown configuration key '" + key + "'");
        }
    }
    config.validate();
    return config;
}

namespace {

bool intersects(const std::set<std::string>& a, const std::set<std::string>& b) {
    const auto& small = a.size() <= b.size() ? a : b;
    const auto& large = a.size() <= b.size() ? b : a;
    return std::any_of(small.begin(), small.end(),
                       [&](const std::string& x) { return large.count(x) != 0; });
}

std::string first_common(const std::set<std::string>& a, const std::set<std::string>& b) {
    const auto& small = a.size() <= b.size() ? a : b;
    const auto& large = a.size() <= b.size() ? b : a;
    for (const auto& x : small) {
        if (large.count(x)) {
            return x;
        }
    }
    return {};
}

bool grants(const AccessVector& av, const std::string& perm) {
    return av.allPermissions || av.permissions.count(perm) != 0;
}

// Enumerates the concrete (source, target) pairs of a rule in lexicographic
// order; a "self" target pairs each source with itself. Stops early when fn
// returns false.
template <typename Fn>
void for_each_pair(TypeSetResolver& resolver, const AllowRule& rule, Fn fn) {
    const auto& sources = resolver.sourceSet(rule);
    if (rule.target.kind == TypeSetExpr::Kind::Self) {
        for (const auto& s : sources) {
            if (!fn(s, s)) {
                return;
            }
        }
        return;
    }
    const auto& targets = resolver.resolve(rule.target);
    for (const auto& s : sources) {
        for (const auto& t : targets) {
            if (!fn(s, t)) {
                return;
            }
        }
    }
}

// Interned (source, target) pair sets; resolved type names are mapped to
// dense ids so membership checks are O(1) on big policies.
class PairIndex {
  public:
    void add(TypeSetResolver& resolver, const AllowRule& rule) {
        for_each_pair(resolver, rule, [&](const std::string& s, const std::string& t) {
            pairs_.insert(pack(id(s), id(t)));
            return true;
        });
    }

    void add(const std::set<std::string>& sources, const std::set<std::string>& targets) {
        for (const auto& s : sources) {
            for (const auto& t : targets) {
                pairs_.insert(pack(id(s), id(t)));
            }
        }
    }

    bool contains(const std::string& s, const std::string& t) const {
        auto si = ids_.find(s);
        auto ti = ids_.find(t);
        if (si == ids_.end() || ti == ids_.end()) {
            return false;
        }
        return pairs_.count(pack(si->second, ti->second)) != 0;
    }

  private:
    std::uint32_t id(const std::string& name) {
        auto [it, inserted] = ids_.emplace(name, static_cast<std::uint32_t>(ids_.size()));
        return it->second;
    }

    static std::uint64_t pack(std::uint32_t a, std::uint32_t b) {
        return (static_cast<std::uint64_t>(a) << 32) | b;
    }

    std::unordered_map<std::string, std::uint32_t> ids_;
    std::unordered_set<std::uint64_t> pairs_;
};

const std::set<std::string> kFileLikeClasses = {"file",      "chr_file", "blk_file",
                                                "fifo_file", "sock_file", "lnk_file"};

struct LintRun {
    const Policy& policy;
    const Policy* baseline;
    const LintConfig& config;
    TypeSetResolver resolver;
    std::set<std::string> baselineKeys;
    std::vector<Finding> findings;

    LintRun(const Policy& p, const Policy* b, const LintConfig& c)
        : policy(p), baseline(b), config(c), resolver(p) {
        if (baseline) {
            for (const auto& rule : baseline->allows) {
                baselineKeys.insert(rule.render());
            }
        }
    }

    bool in_baseline(const AllowRule& rule) const {
        return baseline && baselineKeys.count(rule.render()) != 0;
    }

    void add(Detector detector, Severity severity, const AllowRule& rule, std::string subjectType,
             std::string explanation) {
        findings.push_back({detector, severity, rule.origin, rule.render(), std::move(subjectType),
                            std::move(explanation), false, rule});
    }

    // L1: allow rules whose target set touches a catch-all default type.
    void default_type_usage() {
        for (const auto& rule : policy.allows) {
            if (in_baseline(rule)) {
                continue;
            }
            const auto& targets = resolver.targetUnion(rule);
            if (!intersects(targets, config.defaultTypes)) {
                continue;
            }
            std::string hit = first_common(targets, config.defaultTypes);
            add(Detector::L1, Severity::Warning, rule, hit,
                "targets default object type '" + hit +
                    "'; objects fall back to this label when no dedicated type is declared");
        }
    }

    // L2: predefined domains that accumulated rules well beyond the baseline.
    void crowded_domains() {
        if (!baseline) {
            return;  // inherently comparative
        }
        TypeSetResolver baseResolver(*baseline);
        for (const auto& domain : config.crowdedDomains) {
            std::int64_t subjectCount = 0;
            std::int64_t baselineCount = 0;
            for (const auto& rule : policy.allows) {
                if (resolver.sourceSet(rule).count(domain)) {
                    ++subjectCount;
                }
            }
            for (const auto& rule : baseline->allows) {
                if (baseResolver.sourceSet(rule).count(domain)) {
                    ++baselineCount;
                }
            }
            double floor = static_cast<double>(std::max<std::int64_t>(baselineCount, 1));
            if (static_cast<double>(subjectCount) >= config.crowdedRatioThreshold * floor) {
                std::ostringstream msg;
                msg << subjectCount << " allow rules with source '" << domain << "' vs "
                    << baselineCount << " in baseline; dedicated domains would confine the apps "
                    << "sharing it";
                findings.push_back({Detector::L2, Severity::Warning, SourceLocation{},
                                    std::to_string(subjectCount) + " allow rules with source '" +
                                        domain + "'",
                                    domain, msg.str(), false, std::nullopt});
            }
        }
    }

    // L3: execute on a file type that can never lead to a successful exec:
    // no (source, target) pair has a process transition or execute_no_trans.
    void vestigial_execute() {
        PairIndex functional;
        for (const auto& rule : policy.allows) {
            if (rule.av.cls == "file" && grants(rule.av, "execute_no_trans")) {
                functional.add(resolver, rule);
            }
        }
        for (const auto& trans : policy.transitions) {
            if (!trans.isProcessTransition()) {
                continue;
            }
            functional.add(resolver.resolve(TypeSetExpr::single(trans.subject)),
                           resolver.resolve(TypeSetExpr::single(trans.objectType)));
        }

        for (const auto& rule : policy.allows) {
            if (rule.av.cls != "file" || !grants(rule.av, "execute")) {
                continue;
            }
            bool usable = false;
            for_each_pair(resolver, rule, [&](const std::string& s, const std::string& t) {
                usable = functional.contains(s, t);
                return !usable;
            });
            if (!usable) {
                const auto& sources = resolver.sourceSet(rule);
                std::string subject = sources.empty() ? std::string("?") : *sources.begin();
                add(Detector::L3, Severity::Warning, rule, subject,
                    "not functional: grants execute but no process transition or "
                    "execute_no_trans exists for any (source, target) pair");
            }
        }
    }

    // L4: rules reaching an untrusted domain. With a baseline, every
    // addition is an error; without one, additions are undetectable and
    // only untrusted access to sensitive types is reported, downgraded.
    void untrusted_additions() {
        for (const auto& rule : policy.allows) {
            const auto& sources = resolver.sourceSet(rule);
            if (!intersects(sources, config.untrustedDomains)) {
                continue;
            }
            std::string domain = first_common(sources, config.untrustedDomains);
            if (baseline) {
                if (in_baseline(rule)) {
                    continue;
                }
                add(Detector::L4, Severity::Error, rule, domain,
                    "adds a rule for untrusted domain '" + domain +
                        "'; any addition widens the attack surface of untrusted code");
            } else {
                const auto& targets = resolver.targetUnion(rule);
                if (!intersects(targets, config.sensitiveTypes)) {
                    continue;
                }
                add(Detector::L4, Severity::Warning, rule, domain,
                    "untrusted domain '" + domain + "' reaches sensitive type '" +
                        first_common(targets, config.sensitiveTypes) +
                        "' (no baseline given, so additions cannot be distinguished)");
            }
        }
    }

    // L5: rules that expose security-sensitive target types.
    void sensitive_targets() {
        for (const auto& rule : policy.allows) {
            if (in_baseline(rule)) {
                continue;
            }
            const auto& targets = resolver.targetUnion(rule);
            if (!intersects(targets, config.sensitiveTypes)) {
                continue;
            }
            std::string hit = first_common(targets, config.sensitiveTypes);
            bool untrusted = intersects(resolver.sourceSet(rule), config.untrustedDomains);
            add(Detector::L5, untrusted ? Severity::Error : Severity::Warning, rule, hit,
                untrusted ? "grants an untrusted domain access to sensitive type '" + hit + "'"
                          : "grants access to sensitive type '" + hit +
                                "'; compromise of the source widens the attack surface");
        }
    }

    // L6: read/write granted on a file-like class where no rule grants open
    // on the same (source, target, class); without open the file cannot
    // normally be used. Symbolic links are exempt.
    void missing_open() {
        std::map<std::string, PairIndex> openPairs;
        for (const auto& rule : policy.allows) {
            if (!kFileLikeClasses.count(rule.av.cls) || !grants(rule.av, "open")) {
                continue;
            }
            openPairs[rule.av.cls].add(resolver, rule);
        }

        for (const auto& rule : policy.allows) {
            if (rule.av.cls == "lnk_file" || !kFileLikeClasses.count(rule.av.cls)) {
                continue;
            }
            if (!grants(rule.av, "read") && !grants(rule.av, "write")) {
                continue;
            }
            if (rule.av.allPermissions) {
                continue;  // grants open as well
            }
            const PairIndex* open = nullptr;
            if (auto it = openPairs.find(rule.av.cls); it != openPairs.end()) {
                open = &it->second;
            }
            std::string witnessSource, witnessTarget;
            bool flagged = false;
            for_each_pair(resolver, rule, [&](const std::string& s, const std::string& t) {
                if (!open || !open->contains(s, t)) {
                    witnessSource = s;
                    witnessTarget = t;
                    flagged = true;
                    return false;
                }
                return true;
            });
            if (flagged) {
                add(Detector::L6, config.missingOpenSeverity, rule, witnessSource,
                    "grants read/write on " + witnessTarget + ":" + rule.av.cls + " but no rule " +
                        "grants open to (" + witnessSource + ", " + witnessTarget + ")");
            }
        }
    }
};

void sort_findings(std::vector<Finding>& findings) {
    std::sort(findings.begin(), findings.end(), [](const Finding& a, const Finding& b) {
        return std::tie(a.severity, a.detector, a.origin, a.subjectType, a.ruleText) <
               std::tie(b.severity, b.detector, b.origin, b.subjectType, b.ruleText);
    });
}

}  // namespace

std::vector<Finding> run_lint(const Policy& policy, const Policy* baseline,
                              const Snapshot* snapshot, const LintConfig& config) {
    config.validate();
    LintRun run(policy, baseline, config);
    run.default_type_usage();
    run.crowded_domains();
    run.vestigial_execute();
    run.untrusted_additions();
    run.sensitive_targets();
    run.missing_open();

    std::vector<Finding> findings = std::move(run.findings);
    if (snapshot) {
        findings = refine_findings(policy, *snapshot, std::move(findings));
    }
    sort_findings(findings);
    return findings;
}

std::map<std::string, DefaultTypeUsage> default_type_usage(const Policy& policy,
                                                           const Policy* baseline,
                                                           const LintConfig& config) {
    std::map<std::string, DefaultTypeUsage> usage;
    for (const auto& type : config.defaultTypes) {
        usage[type] = DefaultTypeUsage{0, baseline ? std::optional<std::int64_t>(0) : std::nullopt};
    }
    TypeSetResolver resolver(policy);
    for (const auto& rule : policy.allows) {
        const auto& targets = resolver.targetUnion(rule);
        for (const auto& type : config.defaultTypes) {
            if (targets.count(type)) {
                ++usage[type].subjectCount;
            }
        }
    }
    if (baseline) {
        TypeSetResolver baseResolver(*baseline);
        for (const auto& rule : baseline->allows) {
            const auto& targets = baseResolver.targetUnion(rule.source, rule.target);
            for (const auto& type : config.defaultTypes) {
                if (targets.count(type)) {
                    ++*usage[type].baselineCount;
                }
            }
        }
    }
    return usage;
}

}  // namespace sepolyzer
