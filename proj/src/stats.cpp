// SPDX-License-Identifier: Apache-2.0

#include "sepolyzer/stats.hpp"

#include <algorithm>
#include <map>

namespace sepolyzer {

PolicyStats compute_stats(const Policy& policy, const StatsOptions& options) {
    PolicyStats s;
    s.typeCount = static_cast<std::int64_t>(policy.types.size());
    if (auto it = policy.attributes.find(options.domainAttribute); it != policy.attributes.end()) {
        s.domainCount = static_cast<std::int64_t>(it->second.members.size());
    }
    s.typeTransitionCount = static_cast<std::int64_t>(policy.transitions.size());
    s.processTransitionCount = std::count_if(policy.transitions.begin(), policy.transitions.end(),
                                             [](const TypeTransitionRule& t) {
                                                 return t.isProcessTransition();
                                             });
    s.allowRuleCount = static_cast<std::int64_t>(policy.allows.size());
    s.attributeCount = static_cast<std::int64_t>(policy.attributes.size());
    s.genfsContextCount = static_cast<std::int64_t>(policy.genfs.size());

    TypeSetResolver resolver(policy);
    for (const auto& rule : policy.allows) {
        if (resolver.sourceSet(rule).count(options.untrustedAppType)) {
            ++s.untrustedAppRuleCount;
        }
    }

    s.classCount = static_cast<std::int64_t>(policy.classes.size());
    std::set<std::string> permNames;
    for (const auto& [cls, perms] : policy.permissions) {
        permNames.insert(perms.begin(), perms.end());
    }
    s.permissionCount = static_cast<std::int64_t>(permNames.size());
    s.initialSidCount = static_cast<std::int64_t>(policy.sids.size());
    return s;
}

ComplexityRatios complexity_ratios(const PolicyStats& stats) {
    ComplexityRatios r;
    if (stats.typeCount > 0) {
        r.allowPerType = static_cast<double>(stats.allowRuleCount) / stats.typeCount;
    }
    if (stats.domainCount > 0) {
        r.typesPerDomain = static_cast<double>(stats.typeCount) / stats.domainCount;
        r.processTransPerDomain = static_cast<double>(stats.processTransitionCount) / stats.domainCount;
    }
    return r;
}

StatsDelta stats_delta(const PolicyStats& baseline, const PolicyStats& subject) {
    StatsDelta d;
    d.typeCount = subject.typeCount - baseline.typeCount;
    d.domainCount = subject.domainCount - baseline.domainCount;
    d.typeTransitionCount = subject.typeTransitionCount - baseline.typeTransitionCount;
    d.processTransitionCount = subject.processTransitionCount - baseline.processTransitionCount;
    d.allowRuleCount = subject.allowRuleCount - baseline.allowRuleCount;
    d.attributeCount = subject.attributeCount - baseline.attributeCount;
    d.genfsContextCount = subject.genfsContextCount - baseline.genfsContextCount;
    d.untrustedAppRuleCount = subject.untrustedAppRuleCount - baseline.untrustedAppRuleCount;
    d.classCount = subject.classCount - baseline.classCount;
    d.permissionCount = subject.permissionCount - baseline.permissionCount;
    d.initialSidCount = subject.initialSidCount - baseline.initialSidCount;
    return d;
}

std::int64_t expanded_allow_count(const Policy& policy) {
    TypeSetResolver resolver(policy);
    std::set<std::string> triples;
    for (const auto& rule : policy.allows) {
        const auto& sources = resolver.sourceSet(rule);
        if (rule.target.kind == TypeSetExpr::Kind::Self) {
            for (const auto& s : sources) {
                triples.insert(s + "\t" + s + "\t" + rule.av.cls);
            }
        } else {
            const auto& targets = resolver.resolve(rule.target);
            for (const auto& s : sources) {
                for (const auto& t : targets) {
                    triples.insert(s + "\t" + t + "\t" + rule.av.cls);
                }
            }
        }
    }
    return static_cast<std::int64_t>(triples.size());
}

bool PolicyDiff::empty() const {
    return addedTypes.empty() && removedTypes.empty() && addedAttributes.empty() &&
           removedAttributes.empty() && addedAllows.empty() && removedAllows.empty() &&
           addedNeverallows.empty() && removedNeverallows.empty() && addedTransitions.empty() &&
           removedTransitions.empty() && addedGenfs.empty() && removedGenfs.empty();
}

namespace {

// The set of concrete types the filter stands for, per policy: the type
// itself, or an attribute's membership.
std::optional<std::set<std::string>> filter_set(const Policy& policy, const std::string& id) {
    if (policy.isType(id)) {
        return std::set<std::string>{id};
    }
    if (auto it = policy.attributes.find(id); it != policy.attributes.end()) {
        return it->second.members;
    }
    return std::nullopt;
}

bool intersects(const std::set<std::string>& a, const std::set<std::string>& b) {
    const auto& small = a.size() <= b.size() ? a : b;
    const auto& large = a.size() <= b.size() ? b : a;
    return std::any_of(small.begin(), small.end(),
                       [&](const std::string& x) { return large.count(x) != 0; });
}

// One side of the diff: entries of `from` whose key is absent in `against`,
// ordered by key, duplicates collapsed.
template <typename Rule, typename Keep>
std::vector<Rule> side_diff(const std::vector<Rule>& from, const std::vector<Rule>& against,
                            Keep keep) {
    std::set<std::string> other;
    for (const auto& r : against) {
        other.insert(r.render());
    }
    std::map<std::string, const Rule*> picked;
    for (const auto& r : from) {
        std::string key = r.render();
        if (!other.count(key) && keep(r)) {
            picked.emplace(std::move(key), &r);
        }
    }
    std::vector<Rule> out;
    out.reserve(picked.size());
    for (const auto& [key, rule] : picked) {
        out.push_back(*rule);
    }
    return out;
}

}  // namespace

PolicyDiff diff_policies(const Policy& baseline, const Policy& subject,
                         const std::optional<DiffFilter>& filter) {
    std::optional<std::set<std::string>> baseFilter, subjFilter;
    if (filter) {
        baseFilter = filter_set(baseline, filter->type);
        subjFilter = filter_set(subject, filter->type);
        if (!baseFilter && !subjFilter) {
            throw FilterUnknownTypeError(filter->type);
        }
    }

    TypeSetResolver baseResolver(baseline);
    TypeSetResolver subjResolver(subject);

    auto rule_keep = [&](TypeSetResolver& resolver,
                         const std::optional<std::set<std::string>>& fset) {
        return [&resolver, &fset](const auto& rule) {
            if (!fset) {
                return false;
            }
            return intersects(resolver.resolve(rule.source), *fset) ||
                   intersects(resolver.targetUnion(rule.source, rule.target), *fset);
        };
    };
    auto keep_all = [](const auto&) { return true; };

    PolicyDiff d;
    if (!filter) {
        d.addedAllows = side_diff(subject.allows, baseline.allows, keep_all);
        d.removedAllows = side_diff(baseline.allows, subject.allows, keep_all);
        d.addedNeverallows = side_diff(subject.neverallows, baseline.neverallows, keep_all);
        d.removedNeverallows = side_diff(baseline.neverallows, subject.neverallows, keep_all);
    } else {
        d.addedAllows = side_diff(subject.allows, baseline.allows, rule_keep(subjResolver, subjFilter));
        d.removedAllows =
            side_diff(baseline.allows, subject.allows, rule_keep(baseResolver, baseFilter));
        d.addedNeverallows = side_diff(subject.neverallows, baseline.neverallows,
                                       rule_keep(subjResolver, subjFilter));
        d.removedNeverallows = side_diff(baseline.neverallows, subject.neverallows,
                                         rule_keep(baseResolver, baseFilter));
    }

    auto trans_keep = [&](TypeSetResolver& resolver,
                          const std::optional<std::set<std::string>>& fset) {
        return [&resolver, &fset](const TypeTransitionRule& t) {
            if (!fset) {
                return false;
            }
            return intersects(resolver.resolve(TypeSetExpr::single(t.subject)), *fset) ||
                   intersects(resolver.resolve(TypeSetExpr::single(t.objectType)), *fset) ||
                   fset->count(t.result) != 0;
        };
    };
    auto genfs_keep = [](const std::optional<std::set<std::string>>& fset) {
        return [&fset](const GenfsContext& g) { return fset && fset->count(g.label.type) != 0; };
    };

    if (!filter) {
        d.addedTransitions = side_diff(subject.transitions, baseline.transitions, keep_all);
        d.removedTransitions = side_diff(baseline.transitions, subject.transitions, keep_all);
        d.addedGenfs = side_diff(subject.genfs, baseline.genfs, keep_all);
        d.removedGenfs = side_diff(baseline.genfs, subject.genfs, keep_all);
    } else {
        d.addedTransitions = side_diff(subject.transitions, baseline.transitions,
                                       trans_keep(subjResolver, subjFilter));
        d.removedTransitions = side_diff(baseline.transitions, subject.transitions,
                                         trans_keep(baseResolver, baseFilter));
        d.addedGenfs = side_diff(subject.genfs, baseline.genfs, genfs_keep(subjFilter));
        d.removedGenfs = side_diff(baseline.genfs, subject.genfs, genfs_keep(baseFilter));
    }

    for (const auto& [name, type] : subject.types) {
        if (!baseline.types.count(name)) {
            if (!filter || (subjFilter && subjFilter->count(name))) {
                d.addedTypes.insert(name);
            }
        }
    }
    for (const auto& [name, type] : baseline.types) {
        if (!subject.types.count(name)) {
            if (!filter || (baseFilter && baseFilter->count(name))) {
                d.removedTypes.insert(name);
            }
        }
    }
    for (const auto& [name, attr] : subject.attributes) {
        if (!baseline.attributes.count(name)) {
            if (!filter || (subjFilter && intersects(attr.members, *subjFilter))) {
                d.addedAttributes.insert(name);
            }
        }
    }
    for (const auto& [name, attr] : baseline.attributes) {
        if (!subject.attributes.count(name)) {
            if (!filter || (baseFilter && intersects(attr.members, *baseFilter))) {
                d.removedAttributes.insert(name);
            }
        }
    }
    return d;
}

std::string export_attribute_graph(const Policy& policy) {
    std::string out = "digraph attribute_hierarchy {\n";

    // Single lexicographic walk over both namespaces (they are disjoint).
    auto ty = policy.types.begin();
    auto at = policy.attributes.begin();
    while (ty != policy.types.end() || at != policy.attributes.end()) {
        bool takeType = at == policy.attributes.end() ||
                        (ty != policy.types.end() && ty->first < at->first);
        if (takeType) {
            out += "  \"" + ty->first + "\";\n";
            ++ty;
        } else {
            out += "  \"" + at->first + "\" [shape=box];\n";
            ++at;
        }
    }

    for (const auto& [name, type] : policy.types) {
        for (const auto& attr : type.attributes) {
            out += "  \"" + name + "\" -> \"" + attr + "\";\n";
        }
    }

    out += "}\n";
    return out;
}

}  // namespace sepolyzer
