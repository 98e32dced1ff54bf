// SPDX-License-Identifier: Apache-2.0

#include "sepolyzer/assertions.hpp"

#include <algorithm>

namespace sepolyzer {

namespace {

// Permission overlap under the all-permissions marker. Empty result means
// no overlap; both-sides-* collapses to the {"*"} marker.
std::set<std::string> perm_overlap(const AccessVector& never, const AccessVector& allow) {
    if (never.allPermissions && allow.allPermissions) {
        return {"*"};
    }
    if (never.allPermissions) {
        return allow.permissions;
    }
    if (allow.allPermissions) {
        return never.permissions;
    }
    std::set<std::string> out;
    std::set_intersection(never.permissions.begin(), never.permissions.end(),
                          allow.permissions.begin(), allow.permissions.end(),
                          std::inserter(out, out.begin()));
    return out;
}

std::set<std::string> intersect(const std::set<std::string>& a, const std::set<std::string>& b) {
    std::set<std::string> out;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::inserter(out, out.begin()));
    return out;
}

bool is_self(const TypeSetExpr& e) {
    return e.kind == TypeSetExpr::Kind::Self;
}

}  // namespace

std::vector<NeverallowViolation> check_neverallows(const Policy& policy,
                                                   const std::vector<NeverallowRule>& extra,
                                                   bool strict) {
    std::vector<const NeverallowRule*> nevers;
    nevers.reserve(policy.neverallows.size() + extra.size());
    for (const auto& n : policy.neverallows) {
        nevers.push_back(&n);
    }
    for (const auto& n : extra) {
        nevers.push_back(&n);
    }

    // Memoize per-expression resolution across the pair scan.
    std::map<std::string, std::set<std::string>> cache;
    auto resolved = [&](const TypeSetExpr& e) -> const std::set<std::string>& {
        std::string key = e.render();
        auto it = cache.find(key);
        if (it != cache.end()) {
            return it->second;
        }
        return cache.emplace(std::move(key), resolve_type_set(policy, e, std::nullopt, strict))
            .first->second;
    };

    std::vector<NeverallowViolation> out;
    for (const NeverallowRule* never : nevers) {
        const auto& neverSources = resolved(never->source);
        for (const auto& allow : policy.allows) {
            if (never->av.cls != allow.av.cls) {
                continue;
            }
            std::set<std::string> perms = perm_overlap(never->av, allow.av);
            if (perms.empty()) {
                continue;
            }
            std::set<std::string> sources = intersect(neverSources, resolved(allow.source));
            if (sources.empty()) {
                continue;
            }

            std::string witnessSource, witnessTarget;
            bool found = false;
            if (!is_self(never->target) && !is_self(allow.target)) {
                std::set<std::string> targets =
                    intersect(resolved(never->target), resolved(allow.target));
                if (!targets.empty()) {
                    witnessSource = *sources.begin();
                    witnessTarget = *targets.begin();
                    found = true;
                }
            } else {
                // "self" pairs each source type with itself, so the overlap
                // must be checked per common source type.
                for (const auto& s : sources) {
                    const std::set<std::string> selfSet{s};
                    const auto& nt = is_self(never->target) ? selfSet : resolved(never->target);
                    const auto& at = is_self(allow.target) ? selfSet : resolved(allow.target);
                    std::set<std::string> targets = intersect(nt, at);
                    if (!targets.empty()) {
                        witnessSource = s;
                        witnessTarget = *targets.begin();
                        found = true;
                        break;
                    }
                }
            }
            if (found) {
                out.push_back({*never, allow, std::move(witnessSource), std::move(witnessTarget),
                               allow.av.cls, std::move(perms)});
            }
        }
    }
    return out;
}

std::vector<std::pair<std::string, std::string>> enumerate_witnesses(
    const Policy& policy, const NeverallowViolation& v) {
    std::set<std::string> sources = intersect(resolve_type_set(policy, v.neverallow.source),
                                              resolve_type_set(policy, v.allow.source));
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& s : sources) {
        const std::set<std::string> selfSet{s};
        const auto nt = is_self(v.neverallow.target) ? selfSet
                                                     : resolve_type_set(policy, v.neverallow.target);
        const auto at = is_self(v.allow.target) ? selfSet : resolve_type_set(policy, v.allow.target);
        for (const auto& t : intersect(nt, at)) {
            out.emplace_back(s, t);
        }
    }
    return out;
}

}  // namespace sepolyzer
