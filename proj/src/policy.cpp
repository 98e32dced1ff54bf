// SPDX-License-Identifier: Apache-2.0

#include "sepolyzer/policy.hpp"

#include <algorithm>
#include <cctype>

namespace sepolyzer {

bool is_valid_identifier(std::string_view name) {
    if (name.empty()) {
        return false;
    }
    auto head = static_cast<unsigned char>(name.front());
    if (!std::isalpha(head) && name.front() != '_') {
        return false;
    }
    return std::all_of(name.begin() + 1, name.end(), [](char c) {
        auto u = static_cast<unsigned char>(c);
        return std::isalnum(u) || c == '_' || c == '.' || c == '-';
    });
}

std::string SecurityContext::str() const {
    return user + ":" + role + ":" + type + ":" + range;
}

std::optional<SecurityContext> SecurityContext::parse(std::string_view text) {
    std::string parts[4];
    size_t start = 0;
    for (int i = 0; i < 3; ++i) {
        auto pos = text.find(':', start);
        if (pos == std::string_view::npos) {
            return std::nullopt;
        }
        parts[i] = std::string(text.substr(start, pos - start));
        start = pos + 1;
    }
    parts[3] = std::string(text.substr(start));
    for (const auto& p : parts) {
        if (p.empty()) {
            return std::nullopt;
        }
    }
    if (!is_valid_identifier(parts[0]) || !is_valid_identifier(parts[1]) ||
        !is_valid_identifier(parts[2])) {
        return std::nullopt;
    }
    return SecurityContext{parts[0], parts[1], parts[2], parts[3]};
}

namespace {

void sort_unique(std::vector<std::string>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
}

}  // namespace

TypeSetExpr TypeSetExpr::single(std::string id) {
    TypeSetExpr e;
    e.kind = Kind::Single;
    e.positives.push_back(std::move(id));
    return e;
}

TypeSetExpr TypeSetExpr::set(std::vector<std::string> positives, std::vector<std::string> negatives) {
    TypeSetExpr e;
    e.kind = Kind::Set;
    e.positives = std::move(positives);
    e.negatives = std::move(negatives);
    sort_unique(e.positives);
    sort_unique(e.negatives);
    return e;
}

TypeSetExpr TypeSetExpr::all() {
    TypeSetExpr e;
    e.kind = Kind::All;
    return e;
}

TypeSetExpr TypeSetExpr::self() {
    TypeSetExpr e;
    e.kind = Kind::Self;
    return e;
}

std::string TypeSetExpr::render() const {
    switch (kind) {
    case Kind::Single:
        return positives.front();
    case Kind::All:
        return "*";
    case Kind::Self:
        return "self";
    case Kind::Set: {
        std::string out = "{";
        for (const auto& p : positives) {
            out += " " + p;
        }
        for (const auto& n : negatives) {
            out += " -" + n;
        }
        out += " }";
        return out;
    }
    }
    return {};
}

std::string AccessVector::render() const {
    if (allPermissions) {
        return "*";
    }
    if (permissions.size() == 1) {
        return *permissions.begin();
    }
    std::string out = "{";
    for (const auto& p : permissions) {
        out += " " + p;
    }
    out += " }";
    return out;
}

namespace {

std::string render_av_rule(const char* keyword, const TypeSetExpr& source, const TypeSetExpr& target,
                           const AccessVector& av) {
    return std::string(keyword) + " " + source.render() + " " + target.render() + ":" + av.cls +
           " " + av.render() + ";";
}

}  // namespace

std::string AllowRule::render() const {
    return render_av_rule("allow", source, target, av);
}

std::string NeverallowRule::render() const {
    return render_av_rule("neverallow", source, target, av);
}

std::string TypeTransitionRule::render() const {
    return "type_transition " + subject + " " + objectType + ":" + cls + " " + result + ";";
}

std::string GenfsContext::render() const {
    return "genfscon " + filesystem + " " + path + " " + label.str() + ";";
}

std::string InitialSid::render() const {
    if (label) {
        return "sid " + name + " " + label->str() + ";";
    }
    return "sid " + name + ";";
}

namespace {

void resolve_one(const Policy& policy, const std::string& id, bool strict,
                 std::set<std::string>& out) {
    if (auto it = policy.attributes.find(id); it != policy.attributes.end()) {
        out.insert(it->second.members.begin(), it->second.members.end());
        return;
    }
    if (policy.types.count(id)) {
        out.insert(id);
        return;
    }
    if (strict) {
        throw UnresolvedIdentifierError(id);
    }
    // Lenient: an undeclared identifier behaves as an opaque concrete type,
    // keeping analyses meaningful on policy fragments and extended vendor
    // vocabularies.
    out.insert(id);
}

}  // namespace

std::set<std::string> resolve_type_set(const Policy& policy, const TypeSetExpr& expr,
                                       const std::optional<std::string>& selfType, bool strict) {
    std::set<std::string> out;
    switch (expr.kind) {
    case TypeSetExpr::Kind::All:
        for (const auto& [name, type] : policy.types) {
            out.insert(name);
        }
        return out;
    case TypeSetExpr::Kind::Self:
        if (!selfType) {
            throw SelfWithoutContextError();
        }
        out.insert(*selfType);
        return out;
    case TypeSetExpr::Kind::Single:
    case TypeSetExpr::Kind::Set:
        for (const auto& p : expr.positives) {
            resolve_one(policy, p, strict, out);
        }
        if (!expr.negatives.empty()) {
            std::set<std::string> removed;
            for (const auto& n : expr.negatives) {
                resolve_one(policy, n, strict, removed);
            }
            for (const auto& r : removed) {
                out.erase(r);
            }
        }
        return out;
    }
    return out;
}

bool av_matches(const AccessVector& av, const std::string& probeClass,
                const std::set<std::string>& probePerms) {
    if (av.cls != probeClass) {
        return false;
    }
    if (av.allPermissions) {
        return true;
    }
    return std::any_of(probePerms.begin(), probePerms.end(),
                       [&](const std::string& p) { return av.permissions.count(p) != 0; });
}

namespace {

template <typename Rule>
std::vector<std::string> sorted_renders(const std::vector<Rule>& rules) {
    std::vector<std::string> out;
    out.reserve(rules.size());
    for (const auto& r : rules) {
        out.push_back(r.render());
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

bool policy_equivalent(const Policy& a, const Policy& b) {
    if (a.types != b.types || a.attributes != b.attributes || a.classes != b.classes ||
        a.permissions != b.permissions || a.unknownIdentifiers != b.unknownIdentifiers) {
        return false;
    }
    if (sorted_renders(a.allows) != sorted_renders(b.allows) ||
        sorted_renders(a.neverallows) != sorted_renders(b.neverallows) ||
        sorted_renders(a.transitions) != sorted_renders(b.transitions) ||
        sorted_renders(a.genfs) != sorted_renders(b.genfs)) {
        return false;
    }
    auto sid_key = [](const InitialSid& s) {
        return s.name + "|" + (s.label ? s.label->str() : std::string());
    };
    std::vector<std::string> sa, sb;
    for (const auto& s : a.sids) {
        sa.push_back(sid_key(s));
    }
    for (const auto& s : b.sids) {
        sb.push_back(sid_key(s));
    }
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    return sa == sb;
}

const std::set<std::string>& TypeSetResolver::resolve(const TypeSetExpr& expr) {
    std::string key = expr.render();
    auto it = cache_.find(key);
    if (it != cache_.end()) {
        return it->second;
    }
    return cache_.emplace(std::move(key), resolve_type_set(policy_, expr)).first->second;
}

const std::set<std::string>& TypeSetResolver::targetUnion(const TypeSetExpr& source,
                                                          const TypeSetExpr& target) {
    if (target.kind == TypeSetExpr::Kind::Self) {
        return resolve(source);
    }
    return resolve(target);
}

}  // namespace sepolyzer
