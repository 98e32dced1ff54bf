// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "sepolyzer/assertions.hpp"
#include "sepolyzer/parser.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace sepolyzer;

namespace {

Policy parse_ok(std::string_view text) {
    ParseResult r = parse_policy(text);
    REQUIRE(r.ok());
    return std::move(r.policy);
}

constexpr std::string_view kProcSecurityFixture =
    "class file { read write open append getattr };\n"
    "attribute domain;\n"
    "type init, domain;\n"
    "type vold, domain;\n"
    "type proc_security;\n"
    "neverallow { domain -init } proc_security:file { append write };\n";

}  // namespace

TEST_CASE("write access from a non-exempt domain is a violation with a witness") {
    Policy p = parse_ok(std::string(kProcSecurityFixture) +
                        "allow vold proc_security:file write;\n");
    auto violations = check_neverallows(p);
    REQUIRE(violations.size() == 1);
    const NeverallowViolation& v = violations[0];
    CHECK(v.witnessSource == "vold");
    CHECK(v.witnessTarget == "proc_security");
    CHECK(v.witnessClass == "file");
    CHECK(v.witnessPerms == std::set<std::string>{"write"});
    CHECK(v.allow.origin.line == 7);
    CHECK(v.neverallow.origin.line == 6);
}

TEST_CASE("the negated domain is exempt") {
    Policy p = parse_ok(std::string(kProcSecurityFixture) +
                        "allow init proc_security:file write;\n");
    CHECK(check_neverallows(p).empty());
}

TEST_CASE("no neverallow rules, no violations") {
    Policy p = parse_ok("type a;\nallow a a:file read;\n");
    CHECK(check_neverallows(p).empty());
}

TEST_CASE("disjoint permissions do not violate") {
    Policy p = parse_ok(std::string(kProcSecurityFixture) +
                        "allow vold proc_security:file { read getattr open };\n");
    CHECK(check_neverallows(p).empty());
}

TEST_CASE("external neverallow set is checked against the policy") {
    Policy p = parse_ok("class file { write append };\n"
                        "attribute domain;\n"
                        "type init, domain;\n"
                        "type vold, domain;\n"
                        "type proc_security;\n"
                        "allow vold proc_security:file write;\n");
    // the reference assertions ship as bare statements; identifiers resolve
    // against the target policy
    Policy assertions =
        parse_policy("neverallow { domain -init } proc_security:file { append write };\n").policy;
    REQUIRE(check_neverallows(p).empty());
    auto violations = check_neverallows(p, assertions.neverallows);
    REQUIRE(violations.size() == 1);
    CHECK(violations[0].witnessSource == "vold");
}

TEST_CASE("all-permissions markers intersect everything") {
    Policy p = parse_ok("type a;\ntype b;\n"
                        "neverallow a b:file *;\n"
                        "allow a b:file read;\n");
    auto violations = check_neverallows(p);
    REQUIRE(violations.size() == 1);
    CHECK(violations[0].witnessPerms == std::set<std::string>{"read"});

    Policy q = parse_ok("type a;\ntype b;\n"
                        "neverallow a b:file write;\n"
                        "allow a b:file *;\n");
    auto violations2 = check_neverallows(q);
    REQUIRE(violations2.size() == 1);
    CHECK(violations2[0].witnessPerms == std::set<std::string>{"write"});
}

TEST_CASE("self targets pair per source type") {
    // the allow touches (a, a); the neverallow forbids self access for both
    Policy p = parse_ok("attribute domain;\n"
                        "type a, domain;\n"
                        "type b, domain;\n"
                        "neverallow domain self:file write;\n"
                        "allow a a:file write;\n");
    auto violations = check_neverallows(p);
    REQUIRE(violations.size() == 1);
    CHECK(violations[0].witnessSource == "a");
    CHECK(violations[0].witnessTarget == "a");

    // cross-type access is not self access
    Policy q = parse_ok("attribute domain;\n"
                        "type a, domain;\n"
                        "type b, domain;\n"
                        "neverallow domain self:file write;\n"
                        "allow a b:file write;\n");
    CHECK(check_neverallows(q).empty());

    // self on the allow side as well
    Policy r = parse_ok("attribute domain;\n"
                        "type a, domain;\n"
                        "type b, domain;\n"
                        "neverallow { domain -b } self:file write;\n"
                        "allow domain self:file write;\n");
    auto violations3 = check_neverallows(r);
    REQUIRE(violations3.size() == 1);
    CHECK(violations3[0].witnessSource == "a");
    CHECK(violations3[0].witnessTarget == "a");
}

TEST_CASE("class must match exactly") {
    Policy p = parse_ok("type a;\ntype b;\n"
                        "neverallow a b:file write;\n"
                        "allow a b:dir write;\n");
    CHECK(check_neverallows(p).empty());
}

TEST_CASE("violations are ordered by neverallow origin then allow origin") {
    Policy p = parse_ok("type a;\ntype b;\n"
                        "neverallow a b:file read;\n"
                        "neverallow a b:file write;\n"
                        "allow a b:file { read write };\n"
                        "allow a b:file read;\n");
    auto violations = check_neverallows(p);
    REQUIRE(violations.size() == 3);
    CHECK(violations[0].neverallow.origin.line == 3);
    CHECK(violations[0].allow.origin.line == 5);
    CHECK(violations[1].neverallow.origin.line == 3);
    CHECK(violations[1].allow.origin.line == 6);
    CHECK(violations[2].neverallow.origin.line == 4);
    CHECK(violations[2].allow.origin.line == 5);
}

TEST_CASE("strict mode rejects undeclared identifiers") {
    Policy p = parse_ok("type a;\n"
                        "neverallow a ghost:file write;\n"
                        "allow a ghost:file write;\n");
    CHECK(check_neverallows(p).size() == 1);  // lenient: ghost is opaque
    CHECK_THROWS_AS(check_neverallows(p, {}, true), UnresolvedIdentifierError);
}

namespace {

void check_against_oracle(const Policy& p) {
    auto impl = check_neverallows(p);
    auto expected = oracle::neverallow_violations(p);

    std::set<std::pair<int, int>> implPairs;
    for (const auto& v : impl) {
        implPairs.emplace(v.neverallow.origin.line, v.allow.origin.line);
    }
    REQUIRE(implPairs.size() == impl.size());  // one violation per pair
    CHECK(implPairs == expected.pairs);

    for (const auto& v : impl) {
        auto key = std::make_pair(v.neverallow.origin.line, v.allow.origin.line);
        const auto& quads = expected.quadruples.at(key);
        for (const auto& perm : v.witnessPerms) {
            if (perm == "*") {
                continue;  // both sides grant everything; pair already checked
            }
            std::string quad =
                v.witnessSource + "|" + v.witnessTarget + "|" + v.witnessClass + "|" + perm;
            CHECK_MESSAGE(quads.count(quad), "witness ", quad, " not covered by expansion");
        }
    }
}

}  // namespace

TEST_CASE("matches the full-expansion oracle on random policies") {
    std::mt19937 rng(6301);
    testgen::PolicyGenConfig cfg;
    cfg.maxTypes = 30;
    cfg.maxAttributes = 5;
    cfg.maxRules = 200;
    for (int iter = 0; iter < 300; ++iter) {
        ParseResult r = parse_policy(testgen::generate_policy_text(rng, cfg));
        REQUIRE(r.ok());
        check_against_oracle(r.policy);
    }
}

TEST_CASE("adding allow rules never removes violations") {
    std::mt19937 rng(6302);
    testgen::PolicyGenConfig cfg;
    cfg.maxRules = 80;
    for (int iter = 0; iter < 60; ++iter) {
        std::string text = testgen::generate_policy_text(rng, cfg);
        ParseResult base = parse_policy(text);
        REQUIRE(base.ok());
        if (base.policy.types.empty()) {
            continue;
        }
        auto pick = [&](const std::map<std::string, SecurityType>& m) {
            auto it = m.begin();
            std::advance(it, std::uniform_int_distribution<size_t>(0, m.size() - 1)(rng));
            return it->first;
        };
        std::string extra = "allow " + pick(base.policy.types) + " " + pick(base.policy.types) +
                            ":file { read write open };\n";
        ParseResult grown = parse_policy(text + extra);
        REQUIRE(grown.ok());

        auto pairs = [](const std::vector<NeverallowViolation>& vs) {
            std::set<std::pair<int, int>> out;
            for (const auto& v : vs) {
                out.emplace(v.neverallow.origin.line, v.allow.origin.line);
            }
            return out;
        };
        auto before = pairs(check_neverallows(base.policy));
        auto after = pairs(check_neverallows(grown.policy));
        for (const auto& p : before) {
            CHECK(after.count(p));
        }
    }
}

TEST_CASE("reported witnesses satisfy both rules' resolved sets") {
    std::mt19937 rng(6303);
    testgen::PolicyGenConfig cfg;
    cfg.maxRules = 100;
    for (int iter = 0; iter < 60; ++iter) {
        ParseResult r = parse_policy(testgen::generate_policy_text(rng, cfg));
        REQUIRE(r.ok());
        const Policy& p = r.policy;
        for (const auto& v : check_neverallows(p)) {
            auto neverSources = resolve_type_set(p, v.neverallow.source);
            auto allowSources = resolve_type_set(p, v.allow.source);
            CHECK(neverSources.count(v.witnessSource));
            CHECK(allowSources.count(v.witnessSource));
            auto neverTargets =
                resolve_type_set(p, v.neverallow.target, v.witnessSource);
            auto allowTargets = resolve_type_set(p, v.allow.target, v.witnessSource);
            CHECK(neverTargets.count(v.witnessTarget));
            CHECK(allowTargets.count(v.witnessTarget));
            CHECK(v.witnessClass == v.allow.av.cls);
            for (const auto& perm : v.witnessPerms) {
                if (perm == "*") {
                    CHECK(v.neverallow.av.allPermissions);
                    CHECK(v.allow.av.allPermissions);
                } else {
                    CHECK(av_matches(v.neverallow.av, v.witnessClass, {perm}));
                    CHECK(av_matches(v.allow.av, v.witnessClass, {perm}));
                }
            }
            // every enumerated witness pair is honored by both sides
            for (const auto& [s, t] : enumerate_witnesses(p, v)) {
                CHECK(resolve_type_set(p, v.neverallow.source).count(s));
                CHECK(resolve_type_set(p, v.neverallow.target, s).count(t));
                CHECK(resolve_type_set(p, v.allow.target, s).count(t));
            }
        }
    }
}

TEST_CASE("deterministic output") {
    std::mt19937 rng(6304);
    ParseResult r = parse_policy(testgen::generate_policy_text(rng));
    REQUIRE(r.ok());
    auto render = [](const std::vector<NeverallowViolation>& vs) {
        std::string out;
        for (const auto& v : vs) {
            out += v.neverallow.render() + "|" + v.allow.render() + "|" + v.witnessSource + "|" +
                   v.witnessTarget + "\n";
        }
        return out;
    };
    CHECK(render(check_neverallows(r.policy)) == render(check_neverallows(r.policy)));
}
