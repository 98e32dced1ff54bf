// SPDX-License-Identifier: Apache-2.0
//
// sepolyzer - SEAndroid Type Enforcement policy analyzer.
//
// Subcommands: stats, diff, check-neverallow, lint, query, ingest, graph.
// Exit codes: 0 clean, 1 findings/violations at or above the failure
// threshold, 2 input or parse error, 3 usage error. With --json the only
// thing written to stdout is a single JSON document; diagnostics go to
// stderr.

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sepolyzer/assertions.hpp"
#include "sepolyzer/device.hpp"
#include "sepolyzer/lint.hpp"
#include "sepolyzer/parser.hpp"
#include "sepolyzer/policy.hpp"
#include "sepolyzer/stats.hpp"

namespace {

using nlohmann::ordered_json;
using namespace sepolyzer;

constexpr int kExitClean = 0;
constexpr int kExitFindings = 1;
constexpr int kExitInputError = 2;
constexpr int kExitUsageError = 3;

std::optional<std::string> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        return std::nullopt;
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::optional<Policy> load_policy(const std::string& path) {
    auto text = read_file(path);
    if (!text) {
        std::cerr << "sepolyzer: cannot read '" << path << "'\n";
        return std::nullopt;
    }
    ParseResult result = parse_policy(*text, path);
    if (!result.ok()) {
        for (const auto& e : result.errors) {
            std::cerr << path << ":" << e.str() << "\n";
            if (!e.snippet.empty()) {
                std::cerr << "    " << e.snippet << "\n";
            }
        }
        return std::nullopt;
    }
    return std::move(result.policy);
}

std::optional<Snapshot> load_snapshot(const std::string& path) {
    auto text = read_file(path);
    if (!text) {
        std::cerr << "sepolyzer: cannot read '" << path << "'\n";
        return std::nullopt;
    }
    try {
        return snapshot_from_json(*text);
    } catch (const Error& e) {
        std::cerr << "sepolyzer: " << path << ": " << e.what() << "\n";
        return std::nullopt;
    }
}

std::string fmt2(const std::optional<double>& v) {
    if (!v) {
        return "undefined";
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f", *v);
    return buf;
}

ordered_json stats_json(const PolicyStats& s) {
    return ordered_json{{"type_count", s.typeCount},
                        {"domain_count", s.domainCount},
                        {"type_transition_count", s.typeTransitionCount},
                        {"process_transition_count", s.processTransitionCount},
                        {"allow_rule_count", s.allowRuleCount},
                        {"attribute_count", s.attributeCount},
                        {"genfs_context_count", s.genfsContextCount},
                        {"untrusted_app_rule_count", s.untrustedAppRuleCount},
                        {"class_count", s.classCount},
                        {"permission_count", s.permissionCount},
                        {"initial_sid_count", s.initialSidCount}};
}

ordered_json delta_json(const StatsDelta& d) {
    return ordered_json{{"type_count", d.typeCount},
                        {"domain_count", d.domainCount},
                        {"type_transition_count", d.typeTransitionCount},
                        {"process_transition_count", d.processTransitionCount},
                        {"allow_rule_count", d.allowRuleCount},
                        {"attribute_count", d.attributeCount},
                        {"genfs_context_count", d.genfsContextCount},
                        {"untrusted_app_rule_count", d.untrustedAppRuleCount},
                        {"class_count", d.classCount},
                        {"permission_count", d.permissionCount},
                        {"initial_sid_count", d.initialSidCount}};
}

void print_stats_row(const char* label, std::int64_t value,
                     const std::optional<std::int64_t>& delta) {
    std::printf("  %-28s %8lld", label, static_cast<long long>(value));
    if (delta) {
        std::printf("  %+lld", static_cast<long long>(*delta));
    }
    std::printf("\n");
}

int cmd_stats(const std::string& policyPath, const std::string& baselinePath, bool json) {
    auto policy = load_policy(policyPath);
    if (!policy) {
        return kExitInputError;
    }
    std::optional<Policy> baseline;
    if (!baselinePath.empty()) {
        baseline = load_policy(baselinePath);
        if (!baseline) {
            return kExitInputError;
        }
    }

    PolicyStats stats = compute_stats(*policy);
    ComplexityRatios ratios = complexity_ratios(stats);
    std::int64_t expanded = expanded_allow_count(*policy);
    std::optional<PolicyStats> baseStats;
    std::optional<StatsDelta> delta;
    if (baseline) {
        baseStats = compute_stats(*baseline);
        delta = stats_delta(*baseStats, stats);
    }

    if (json) {
        ordered_json doc;
        doc["stats"] = stats_json(stats);
        doc["stats"]["allow_rule_count_expanded"] = expanded;
        doc["ratios"] = {{"allow_per_type",
                          ratios.allowPerType ? ordered_json(*ratios.allowPerType) : nullptr},
                         {"types_per_domain",
                          ratios.typesPerDomain ? ordered_json(*ratios.typesPerDomain) : nullptr},
                         {"process_trans_per_domain",
                          ratios.processTransPerDomain ? ordered_json(*ratios.processTransPerDomain)
                                                       : nullptr}};
        if (baseStats) {
            doc["baseline"] = stats_json(*baseStats);
            doc["delta"] = delta_json(*delta);
        }
        std::cout << doc.dump(2) << "\n";
        return kExitClean;
    }

    std::printf("policy: %s\n", policyPath.c_str());
    auto d = [&](std::int64_t StatsDelta::*field) -> std::optional<std::int64_t> {
        if (!delta) {
            return std::nullopt;
        }
        return (*delta).*field;
    };
    print_stats_row("types", stats.typeCount, d(&StatsDelta::typeCount));
    print_stats_row("domains", stats.domainCount, d(&StatsDelta::domainCount));
    print_stats_row("type transitions", stats.typeTransitionCount,
                    d(&StatsDelta::typeTransitionCount));
    print_stats_row("process transitions", stats.processTransitionCount,
                    d(&StatsDelta::processTransitionCount));
    print_stats_row("allow rules", stats.allowRuleCount, d(&StatsDelta::allowRuleCount));
    print_stats_row("allow rules (expanded)", expanded, std::nullopt);
    print_stats_row("attributes", stats.attributeCount, d(&StatsDelta::attributeCount));
    print_stats_row("genfs contexts", stats.genfsContextCount, d(&StatsDelta::genfsContextCount));
    print_stats_row("untrusted_app rules", stats.untrustedAppRuleCount,
                    d(&StatsDelta::untrustedAppRuleCount));
    print_stats_row("classes", stats.classCount, d(&StatsDelta::classCount));
    print_stats_row("permissions", stats.permissionCount, d(&StatsDelta::permissionCount));
    print_stats_row("initial SIDs", stats.initialSidCount, d(&StatsDelta::initialSidCount));
    std::printf("  (untrusted_app rules count statements whose resolved source set\n"
                "   contains untrusted_app, including grants via attributes)\n");
    std::printf("ratios:\n");
    std::printf("  %-32s %s\n", "allow rules / types", fmt2(ratios.allowPerType).c_str());
    std::printf("  %-32s %s\n", "types / domains", fmt2(ratios.typesPerDomain).c_str());
    std::printf("  %-32s %s\n", "process transitions / domains",
                fmt2(ratios.processTransPerDomain).c_str());
    if (delta) {
        std::printf("(second column: delta vs baseline %s)\n", baselinePath.c_str());
    }
    return kExitClean;
}

ordered_json rule_json(const std::string& text, const SourceLocation& origin) {
    return ordered_json{{"text", text}, {"file", origin.file}, {"line", origin.line}};
}

int cmd_diff(const std::string& baselinePath, const std::string& subjectPath,
             const std::string& filterType, bool json) {
    auto baseline = load_policy(baselinePath);
    auto subject = baseline ? load_policy(subjectPath) : std::nullopt;
    if (!baseline || !subject) {
        return kExitInputError;
    }
    std::optional<DiffFilter> filter;
    if (!filterType.empty()) {
        filter = DiffFilter{filterType};
    }
    PolicyDiff diff;
    try {
        diff = diff_policies(*baseline, *subject, filter);
    } catch (const FilterUnknownTypeError& e) {
        std::cerr << "sepolyzer: " << e.what() << "\n";
        return kExitUsageError;
    }

    if (json) {
        ordered_json doc;
        auto names = [](const std::set<std::string>& s) {
            return std::vector<std::string>(s.begin(), s.end());
        };
        doc["added_types"] = names(diff.addedTypes);
        doc["removed_types"] = names(diff.removedTypes);
        doc["added_attributes"] = names(diff.addedAttributes);
        doc["removed_attributes"] = names(diff.removedAttributes);
        auto rules = [](const auto& list) {
            ordered_json arr = ordered_json::array();
            for (const auto& r : list) {
                arr.push_back(rule_json(r.render(), r.origin));
            }
            return arr;
        };
        doc["added_allows"] = rules(diff.addedAllows);
        doc["removed_allows"] = rules(diff.removedAllows);
        doc["added_neverallows"] = rules(diff.addedNeverallows);
        doc["removed_neverallows"] = rules(diff.removedNeverallows);
        doc["added_transitions"] = rules(diff.addedTransitions);
        doc["removed_transitions"] = rules(diff.removedTransitions);
        auto genfs = [](const std::vector<GenfsContext>& list) {
            ordered_json arr = ordered_json::array();
            for (const auto& g : list) {
                arr.push_back(g.render());
            }
            return arr;
        };
        doc["added_genfs"] = genfs(diff.addedGenfs);
        doc["removed_genfs"] = genfs(diff.removedGenfs);
        std::cout << doc.dump(2) << "\n";
        return kExitClean;
    }

    if (diff.empty()) {
        std::printf("no differences\n");
        return kExitClean;
    }
    auto name_section = [](const char* title, const std::set<std::string>& s) {
        if (s.empty()) {
            return;
        }
        std::printf("%s (%zu):\n", title, s.size());
        for (const auto& n : s) {
            std::printf("  %s\n", n.c_str());
        }
    };
    auto rule_section = [](const char* title, const auto& list) {
        if (list.empty()) {
            return;
        }
        std::printf("%s (%zu):\n", title, list.size());
        for (const auto& r : list) {
            std::printf("  %s\n", r.render().c_str());
        }
    };
    name_section("added types", diff.addedTypes);
    name_section("removed types", diff.removedTypes);
    name_section("added attributes", diff.addedAttributes);
    name_section("removed attributes", diff.removedAttributes);
    rule_section("added allow rules", diff.addedAllows);
    rule_section("removed allow rules", diff.removedAllows);
    rule_section("added neverallow rules", diff.addedNeverallows);
    rule_section("removed neverallow rules", diff.removedNeverallows);
    rule_section("added type transitions", diff.addedTransitions);
    rule_section("removed type transitions", diff.removedTransitions);
    rule_section("added genfs contexts", diff.addedGenfs);
    rule_section("removed genfs contexts", diff.removedGenfs);
    return kExitClean;
}

int cmd_check_neverallow(const std::string& policyPath, const std::string& neverallowPath,
                         bool strict, bool verbose, bool json) {
    auto policy = load_policy(policyPath);
    if (!policy) {
        return kExitInputError;
    }
    std::vector<NeverallowRule> extra;
    if (!neverallowPath.empty()) {
        auto nv = load_policy(neverallowPath);
        if (!nv) {
            return kExitInputError;
        }
        extra = nv->neverallows;
    }

    std::vector<NeverallowViolation> violations;
    try {
        violations = check_neverallows(*policy, extra, strict);
    } catch (const UnresolvedIdentifierError& e) {
        std::cerr << "sepolyzer: " << e.what() << "\n";
        return kExitInputError;
    }

    if (json) {
        ordered_json doc;
        doc["violations"] = ordered_json::array();
        for (const auto& v : violations) {
            ordered_json item;
            item["neverallow"] = rule_json(v.neverallow.render(), v.neverallow.origin);
            item["allow"] = rule_json(v.allow.render(), v.allow.origin);
            item["witness"] = {{"source", v.witnessSource},
                               {"target", v.witnessTarget},
                               {"class", v.witnessClass},
                               {"perms", std::vector<std::string>(v.witnessPerms.begin(),
                                                                  v.witnessPerms.end())}};
            if (verbose) {
                ordered_json pairs = ordered_json::array();
                for (const auto& [s, t] : enumerate_witnesses(*policy, v)) {
                    pairs.push_back({{"source", s}, {"target", t}});
                }
                item["all_witnesses"] = pairs;
            }
            doc["violations"].push_back(std::move(item));
        }
        std::cout << doc.dump(2) << "\n";
    } else {
        for (const auto& v : violations) {
            std::printf("violation: %s:%d conflicts with %s:%d\n", v.allow.origin.file.c_str(),
                        v.allow.origin.line, v.neverallow.origin.file.c_str(),
                        v.neverallow.origin.line);
            std::printf("  %s\n", v.neverallow.render().c_str());
            std::printf("  %s\n", v.allow.render().c_str());
            std::string perms;
            for (const auto& p : v.witnessPerms) {
                perms += (perms.empty() ? "" : " ") + p;
            }
            std::printf("  witness: %s %s:%s { %s }\n", v.witnessSource.c_str(),
                        v.witnessTarget.c_str(), v.witnessClass.c_str(), perms.c_str());
            if (verbose) {
                for (const auto& [s, t] : enumerate_witnesses(*policy, v)) {
                    std::printf("    covers (%s, %s)\n", s.c_str(), t.c_str());
                }
            }
        }
        std::printf("%zu violation%s\n", violations.size(), violations.size() == 1 ? "" : "s");
    }
    return violations.empty() ? kExitClean : kExitFindings;
}

int cmd_lint(const std::string& policyPath, const std::string& baselinePath,
             const std::string& snapshotPath, const std::string& configPath,
             const std::string& failOn, bool json) {
    auto sev = severity_from_string(failOn);
    if (!sev) {
        std::cerr << "sepolyzer: --fail-on expects error|warning|info\n";
        return kExitUsageError;
    }
    auto policy = load_policy(policyPath);
    if (!policy) {
        return kExitInputError;
    }
    std::optional<Policy> baseline;
    if (!baselinePath.empty()) {
        baseline = load_policy(baselinePath);
        if (!baseline) {
            return kExitInputError;
        }
    }
    std::optional<Snapshot> snapshot;
    if (!snapshotPath.empty()) {
        snapshot = load_snapshot(snapshotPath);
        if (!snapshot) {
            return kExitInputError;
        }
    }
    LintConfig config;
    std::string effectiveConfig = configPath;
    if (effectiveConfig.empty()) {
        if (const char* env = std::getenv("SEPOLYZER_CONFIG")) {
            effectiveConfig = env;
        }
    }
    if (!effectiveConfig.empty()) {
        auto text = read_file(effectiveConfig);
        if (!text) {
            std::cerr << "sepolyzer: cannot read '" << effectiveConfig << "'\n";
            return kExitInputError;
        }
        try {
            config = LintConfig::load(*text);
        } catch (const ConfigError& e) {
            std::cerr << "sepolyzer: " << effectiveConfig << ": " << e.what() << "\n";
            return kExitInputError;
        }
    }

    std::vector<Finding> findings = run_lint(*policy, baseline ? &*baseline : nullptr,
                                             snapshot ? &*snapshot : nullptr, config);
    auto usage = default_type_usage(*policy, baseline ? &*baseline : nullptr, config);

    bool failed = std::any_of(findings.begin(), findings.end(),
                              [&](const Finding& f) { return f.severity <= *sev; });

    if (json) {
        ordered_json doc;
        doc["findings"] = ordered_json::array();
        for (const auto& f : findings) {
            doc["findings"].push_back({{"detector", to_string(f.detector)},
                                       {"severity", to_string(f.severity)},
                                       {"file", f.origin.file},
                                       {"line", f.origin.line},
                                       {"rule", f.ruleText},
                                       {"subject_type", f.subjectType},
                                       {"explanation", f.explanation},
                                       {"not_functional", f.notFunctional}});
        }
        doc["default_type_usage"] = ordered_json::object();
        for (const auto& [type, u] : usage) {
            ordered_json entry{{"subject", u.subjectCount}};
            entry["baseline"] = u.baselineCount ? ordered_json(*u.baselineCount) : nullptr;
            doc["default_type_usage"][type] = std::move(entry);
        }
        std::cout << doc.dump(2) << "\n";
        return failed ? kExitFindings : kExitClean;
    }

    Detector current = Detector::L1;
    bool first = true;
    std::vector<Finding> grouped = findings;
    std::stable_sort(grouped.begin(), grouped.end(), [](const Finding& a, const Finding& b) {
        return a.detector < b.detector;
    });
    for (const auto& f : grouped) {
        if (first || f.detector != current) {
            std::printf("%s:\n", to_string(f.detector).c_str());
            current = f.detector;
            first = false;
        }
        std::printf("  %s", to_string(f.severity).c_str());
        if (f.origin.line > 0) {
            std::printf(" %s:%d", f.origin.file.c_str(), f.origin.line);
        }
        std::printf(": %s\n      %s\n", f.ruleText.c_str(), f.explanation.c_str());
    }
    std::printf("default type usage:\n");
    for (const auto& [type, u] : usage) {
        if (u.baselineCount) {
            std::printf("  %-18s %6lld  (baseline %lld)\n", type.c_str(),
                        static_cast<long long>(u.subjectCount),
                        static_cast<long long>(*u.baselineCount));
        } else {
            std::printf("  %-18s %6lld\n", type.c_str(),
                        static_cast<long long>(u.subjectCount));
        }
    }
    size_t errors = 0, warnings = 0, infos = 0;
    for (const auto& f : findings) {
        if (f.severity == Severity::Error) {
            ++errors;
        } else if (f.severity == Severity::Warning) {
            ++warnings;
        } else {
            ++infos;
        }
    }
    std::printf("findings: %zu (%zu error, %zu warning, %zu info)\n", findings.size(), errors,
                warnings, infos);
    return failed ? kExitFindings : kExitClean;
}

ordered_json process_json(const ProcessEntry& p) {
    return ordered_json{{"pid", p.pid},
                        {"name", p.name},
                        {"domain", p.domain()},
                        {"user", p.user},
                        {"context", p.context.str()}};
}

int cmd_query(const std::string& policyPath, const std::string& snapshotPath,
              const std::string& processName, int pid, const std::string& filePath,
              const std::string& access, bool verbose, bool json) {
    auto kind = access_kind_from_string(access);
    if (!kind) {
        std::cerr << "sepolyzer: --access expects read|write|execute\n";
        return kExitUsageError;
    }
    auto policy = load_policy(policyPath);
    if (!policy) {
        return kExitInputError;
    }
    auto snapshot = load_snapshot(snapshotPath);
    if (!snapshot) {
        return kExitInputError;
    }

    if (!filePath.empty()) {
        if (!snapshot->files.count(filePath)) {
            std::cerr << "sepolyzer: no snapshot entry for '" << filePath << "'\n";
            return kExitUsageError;
        }
        auto processes = query_processes(*policy, *snapshot, filePath, *kind);
        if (json) {
            ordered_json doc;
            doc["access"] = access;
            doc["file"] = filePath;
            doc["processes"] = ordered_json::array();
            for (const auto& p : processes) {
                ordered_json entry = process_json(p);
                if (verbose) {
                    ordered_json trace = ordered_json::array();
                    for (const auto& step : can_access(*policy, *snapshot, p, filePath, *kind).trace) {
                        trace.push_back({{"step", step.description}, {"passed", step.passed}});
                    }
                    entry["trace"] = std::move(trace);
                }
                doc["processes"].push_back(std::move(entry));
            }
            std::cout << doc.dump(2) << "\n";
        } else {
            std::printf("%zu process%s can %s %s\n", processes.size(),
                        processes.size() == 1 ? "" : "es", access.c_str(), filePath.c_str());
            for (const auto& p : processes) {
                std::printf("  pid %d %s (domain %s, user %s)\n", p.pid, p.name.c_str(),
                            p.domain().c_str(), p.user.c_str());
                if (verbose) {
                    for (const auto& step :
                         can_access(*policy, *snapshot, p, filePath, *kind).trace) {
                        std::printf("    [%s] %s\n", step.passed ? "ok" : "DENIED",
                                    step.description.c_str());
                    }
                }
            }
        }
        return kExitClean;
    }

    std::vector<ProcessEntry> selected;
    for (const auto& p : snapshot->processes) {
        if (pid > 0 ? p.pid == pid : p.name == processName) {
            selected.push_back(p);
        }
    }
    if (selected.empty()) {
        std::cerr << "sepolyzer: no process matches the selector\n";
        return kExitUsageError;
    }

    if (json) {
        ordered_json doc;
        doc["access"] = access;
        doc["results"] = ordered_json::array();
        for (const auto& p : selected) {
            ordered_json entry;
            entry["process"] = process_json(p);
            entry["files"] = query_files(*policy, *snapshot, p, *kind);
            doc["results"].push_back(std::move(entry));
        }
        std::cout << doc.dump(2) << "\n";
    } else {
        for (const auto& p : selected) {
            auto files = query_files(*policy, *snapshot, p, *kind);
            std::printf("pid %d %s (domain %s, user %s): %zu file%s with %s access\n", p.pid,
                        p.name.c_str(), p.domain().c_str(), p.user.c_str(), files.size(),
                        files.size() == 1 ? "" : "s", access.c_str());
            for (const auto& f : files) {
                std::printf("  %s\n", f.c_str());
                if (verbose) {
                    for (const auto& step : can_access(*policy, *snapshot, p, f, *kind).trace) {
                        std::printf("    [%s] %s\n", step.passed ? "ok" : "DENIED",
                                    step.description.c_str());
                    }
                }
            }
        }
    }
    return kExitClean;
}

int cmd_ingest(const std::string& psPath, const std::string& lsPath, const std::string& groupsPath,
               const std::string& outPath) {
    auto psText = read_file(psPath);
    if (!psText) {
        std::cerr << "sepolyzer: cannot read '" << psPath << "'\n";
        return kExitInputError;
    }
    auto lsText = read_file(lsPath);
    if (!lsText) {
        std::cerr << "sepolyzer: cannot read '" << lsPath << "'\n";
        return kExitInputError;
    }
    std::map<std::string, std::set<std::string>> groups;
    try {
        std::vector<ProcessEntry> processes;
        std::map<std::string, FileEntry> files;
        try {
            processes = ingest_ps(*psText);
        } catch (const IngestError& e) {
            std::cerr << "sepolyzer: " << psPath << ": " << e.what() << "\n";
            return kExitInputError;
        }
        try {
            files = ingest_ls(*lsText);
        } catch (const IngestError& e) {
            std::cerr << "sepolyzer: " << lsPath << ": " << e.what() << "\n";
            return kExitInputError;
        }
        if (!groupsPath.empty()) {
            auto groupsText = read_file(groupsPath);
            if (!groupsText) {
                std::cerr << "sepolyzer: cannot read '" << groupsPath << "'\n";
                return kExitInputError;
            }
            try {
                groups = ingest_groups(*groupsText);
            } catch (const IngestError& e) {
                std::cerr << "sepolyzer: " << groupsPath << ": " << e.what() << "\n";
                return kExitInputError;
            }
        }
        Snapshot snapshot = make_snapshot(std::move(processes), std::move(files), std::move(groups));
        std::ofstream out(outPath, std::ios::binary);
        if (!out) {
            std::cerr << "sepolyzer: cannot write '" << outPath << "'\n";
            return kExitInputError;
        }
        out << snapshot_to_json(snapshot);
        return kExitClean;
    } catch (const IngestError& e) {
        std::cerr << "sepolyzer: " << e.what() << "\n";
        return kExitInputError;
    }
}

int cmd_graph(const std::string& policyPath, const std::string& outPath) {
    auto policy = load_policy(policyPath);
    if (!policy) {
        return kExitInputError;
    }
    std::string dot = export_attribute_graph(*policy);
    if (outPath.empty()) {
        std::cout << dot;
        return kExitClean;
    }
    std::ofstream out(outPath, std::ios::binary);
    if (!out) {
        std::cerr << "sepolyzer: cannot write '" << outPath << "'\n";
        return kExitInputError;
    }
    out << dot;
    return kExitClean;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"SEAndroid Type Enforcement policy analyzer"};
    app.require_subcommand(1);

    std::string policyPath, baselinePath, subjectPath, snapshotPath, configPath;
    std::string neverallowPath, filterType, failOn = "error", access;
    std::string psPath, lsPath, groupsPath, outPath, processName, filePath;
    int pid = 0;
    bool json = false, verbose = false, strict = false;

    auto* stats = app.add_subcommand("stats", "policy complexity metrics and ratios");
    stats->add_option("policy", policyPath, "policy text file")->required();
    stats->add_option("--baseline", baselinePath, "baseline policy for deltas");
    stats->add_flag("--json", json, "emit JSON on stdout");

    auto* diff = app.add_subcommand("diff", "structural differences against a baseline");
    diff->add_option("baseline", baselinePath, "baseline policy")->required();
    diff->add_option("subject", subjectPath, "subject policy")->required();
    diff->add_option("--type", filterType, "only report entries touching this type or attribute");
    diff->add_flag("--json", json, "emit JSON on stdout");

    auto* check = app.add_subcommand("check-neverallow", "find allow rules violating neverallows");
    check->add_option("policy", policyPath, "policy text file")->required();
    check->add_option("--neverallows", neverallowPath,
                      "extra neverallow statements (policy text) to check against");
    check->add_flag("--strict", strict, "reject undeclared identifiers");
    check->add_flag("--verbose", verbose, "enumerate every witness pair");
    check->add_flag("--json", json, "emit JSON on stdout");

    auto* lint = app.add_subcommand("lint", "run misconfiguration detectors");
    lint->add_option("policy", policyPath, "policy text file")->required();
    lint->add_option("--baseline", baselinePath, "baseline policy; enables addition-aware checks");
    lint->add_option("--snapshot", snapshotPath, "device snapshot JSON for reachability checks");
    lint->add_option("--config", configPath,
                     "detector configuration (falls back to $SEPOLYZER_CONFIG)");
    lint->add_option("--fail-on", failOn, "exit 1 at this severity or above (default error)");
    lint->add_flag("--json", json, "emit JSON on stdout");

    auto* query = app.add_subcommand("query", "who-can-access-what against a snapshot");
    query->add_option("--policy", policyPath, "policy text file")->required();
    query->add_option("--snapshot", snapshotPath, "device snapshot JSON")->required();
    auto* optProcess = query->add_option("--process", processName, "select processes by name");
    auto* optPid = query->add_option("--pid", pid, "select a process by pid");
    auto* optFile = query->add_option("--file", filePath, "list processes that can reach a path");
    optProcess->excludes(optPid)->excludes(optFile);
    optPid->excludes(optFile);
    query->add_option("--access", access, "read|write|execute")->required();
    query->add_flag("--verbose", verbose, "include per-step decision traces");
    query->add_flag("--json", json, "emit JSON on stdout");

    auto* ingest = app.add_subcommand("ingest", "build a snapshot from recorded device output");
    ingest->add_option("--ps", psPath, "recorded process listing")->required();
    ingest->add_option("--ls", lsPath, "recorded recursive file listing")->required();
    ingest->add_option("--groups", groupsPath, "user-to-groups mapping");
    ingest->add_option("-o,--output", outPath, "snapshot JSON output path")->required();

    auto* graph = app.add_subcommand("graph", "attribute-hierarchy DOT export");
    graph->add_option("policy", policyPath, "policy text file")->required();
    graph->add_option("-o,--output", outPath, "output path (stdout when omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : kExitUsageError;
    }

    if (query->parsed() && !optProcess->count() && !optPid->count() && !optFile->count()) {
        std::cerr << "sepolyzer: query needs --process, --pid or --file\n";
        return kExitUsageError;
    }

    if (stats->parsed()) {
        return cmd_stats(policyPath, baselinePath, json);
    }
    if (diff->parsed()) {
        return cmd_diff(baselinePath, subjectPath, filterType, json);
    }
    if (check->parsed()) {
        return cmd_check_neverallow(policyPath, neverallowPath, strict, verbose, json);
    }
    if (lint->parsed()) {
        return cmd_lint(policyPath, baselinePath, snapshotPath, configPath, failOn, json);
    }
    if (query->parsed()) {
        return cmd_query(policyPath, snapshotPath, processName, pid, filePath, access, verbose,
                         json);
    }
    if (ingest->parsed()) {
        return cmd_ingest(psPath, lsPath, groupsPath, outPath);
    }
    if (graph->parsed()) {
        return cmd_graph(policyPath, outPath);
    }
    return kExitUsageError;
}
