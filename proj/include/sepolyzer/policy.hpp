// SPDX-License-Identifier: Apache-2.0
//
// Core domain model for SELinux/SEAndroid Type Enforcement policies:
// declarations, access-vector rules, and the type-set algebra (attribute
// expansion, negation, wildcard) that every analysis builds on.
//
// A Policy is immutable once built (normally by parse_policy); all
// operations here are pure reads and safe to run concurrently on a
// shared Policy.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sepolyzer {

class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class UnresolvedIdentifierError : public Error {
  public:
    explicit UnresolvedIdentifierError(std::string id)
        : Error("unresolved identifier: " + id), identifier(std::move(id)) {}

    std::string identifier;
};

class SelfWithoutContextError : public Error {
  public:
    SelfWithoutContextError() : Error("'self' target used without a source type") {}
};

/// True iff name matches [A-Za-z_][A-Za-z0-9_.-]*
bool is_valid_identifier(std::string_view name);

struct SourceLocation {
    std::string file;
    int line = 0;

    auto operator<=>(const SourceLocation&) const = default;
};

/// Full security label user:role:type:range. Only the type field carries
/// meaning for Type Enforcement analysis; user/role/range are kept opaque
/// (range may itself contain ':', e.g. "s0:c512,c768").
struct SecurityContext {
    std::string user;
    std::string role;
    std::string type;
    std::string range;

    std::string str() const;

    /// Splits at most 3 times from the left; all four fields must be
    /// nonempty and user/role/type must be valid identifiers.
    static std::optional<SecurityContext> parse(std::string_view text);

    bool operator==(const SecurityContext&) const = default;
};

struct SecurityType {
    std::string name;
    std::set<std::string> attributes;  // names of attributes this type belongs to

    bool operator==(const SecurityType&) const = default;
};

struct Attribute {
    std::string name;
    std::set<std::string> members;  // type names; mirror of SecurityType::attributes

    bool operator==(const Attribute&) const = default;
};

/// Symbolic source/target set of an access-vector rule: a bare identifier,
/// a braced set with negations ("{ domain -init }"), the wildcard "*", or
/// the target-only keyword "self". Member lists are kept sorted and
/// deduplicated so structural equality is also canonical equality.
struct TypeSetExpr {
    enum class Kind { Single, Set, All, Self };

    Kind kind = Kind::Single;
    std::vector<std::string> positives;
    std::vector<std::string> negatives;

    static TypeSetExpr single(std::string id);
    static TypeSetExpr set(std::vector<std::string> positives, std::vector<std::string> negatives);
    static TypeSetExpr all();
    static TypeSetExpr self();

    std::string render() const;

    bool operator==(const TypeSetExpr&) const = default;
};

/// One object class plus the permissions granted/forbidden on it.
/// permissions is empty iff allPermissions is set (the "*" marker).
struct AccessVector {
    std::string cls;
    std::set<std::string> permissions;
    bool allPermissions = false;

    std::string render() const;

    bool operator==(const AccessVector&) const = default;
};

struct AllowRule {
    TypeSetExpr source;
    TypeSetExpr target;
    AccessVector av;
    SourceLocation origin;

    /// Canonical one-line statement text; used as the structural identity
    /// of a rule (origins excluded) by diff, lint and the serializer.
    std::string render() const;
};

struct NeverallowRule {
    TypeSetExpr source;
    TypeSetExpr target;
    AccessVector av;
    SourceLocation origin;

    std::string render() const;
};

/// class == "process" makes this a process (domain) transition; any other
/// class describes the labeling of a newly created object.
struct TypeTransitionRule {
    std::string subject;
    std::string objectType;
    std::string cls;
    std::string result;
    SourceLocation origin;

    std::string render() const;
    bool isProcessTransition() const { return cls == "process"; }
};

struct GenfsContext {
    std::string filesystem;
    std::string path;  // begins with "/"
    SecurityContext label;

    std::string render() const;
};

struct InitialSid {
    std::string name;
    std::optional<SecurityContext> label;

    std::string render() const;
};

/// Parsed policy database. Types and attributes live in disjoint
/// namespaces. Identifiers referenced by rules but declared nowhere are
/// collected in unknownIdentifiers rather than rejected: real OEM policies
/// extend the class/permission vocabulary, and fragments reference types
/// declared elsewhere.
struct Policy {
    std::map<std::string, SecurityType> types;
    std::map<std::string, Attribute> attributes;
    std::set<std::string> classes;
    std::map<std::string, std::set<std::string>> permissions;  // class -> declared perms
    std::vector<AllowRule> allows;
    std::vector<NeverallowRule> neverallows;
    std::vector<TypeTransitionRule> transitions;
    std::vector<GenfsContext> genfs;
    std::vector<InitialSid> sids;
    std::set<std::string> unknownIdentifiers;

    bool isType(const std::string& name) const { return types.count(name) != 0; }
    bool isAttribute(const std::string& name) const { return attributes.count(name) != 0; }
};

/// Expands a type-set expression to concrete type names: attributes are
/// replaced by their members, negatives subtracted after all positives are
/// unioned, "*" is every declared type, "self" is {selfType}.
///
/// In lenient mode (default) an identifier that is neither a declared type
/// nor attribute resolves to itself, treated as an opaque type; strict mode
/// throws UnresolvedIdentifierError instead. Throws SelfWithoutContextError
/// when the expression contains "self" and no selfType is supplied.
std::set<std::string> resolve_type_set(const Policy& policy, const TypeSetExpr& expr,
                                       const std::optional<std::string>& selfType = std::nullopt,
                                       bool strict = false);

/// True iff the access vector covers the probe: same class and at least one
/// probe permission granted (the all-permissions marker intersects
/// everything). probe_perms must be nonempty.
bool av_matches(const AccessVector& av, const std::string& probeClass,
                const std::set<std::string>& probePerms);

/// Value equality ignoring statement order and rule origins.
bool policy_equivalent(const Policy& a, const Policy& b);

/// Memoizing wrapper around resolve_type_set for scans that resolve the
/// same expressions over and over (stats, lint, diff). Always lenient.
class TypeSetResolver {
  public:
    explicit TypeSetResolver(const Policy& policy) : policy_(policy) {}

    /// Resolution without a self context; expr must not be Self.
    const std::set<std::string>& resolve(const TypeSetExpr& expr);

    const std::set<std::string>& sourceSet(const AllowRule& rule) { return resolve(rule.source); }

    /// Union of the rule's concrete targets over all sources: for a "self"
    /// target each source pairs with itself, so the union is the source set.
    const std::set<std::string>& targetUnion(const TypeSetExpr& source, const TypeSetExpr& target);
    const std::set<std::string>& targetUnion(const AllowRule& rule) {
        return targetUnion(rule.source, rule.target);
    }

    const Policy& policy() const { return policy_; }

  private:
    const Policy& policy_;
    std::map<std::string, std::set<std::string>> cache_;
};

}  // namespace sepolyzer
