// SPDX-License-Identifier: Apache-2.0
//
// Text parser for the expanded kernel-policy statement forms used by
// SEAndroid ("policy.conf" style, post-m4), plus a canonical serializer.
//
// Accepted statements (each terminated by ';', '#' comments to end of line):
//   class C;                    class C { p1 p2 ... };
//   sid NAME;                   sid NAME u:r:t:s0;
//   attribute A;
//   type T;                     type T, A1, A2;
//   typeattribute T A1, A2;
//   allow SRC TGT:CLS PERMS;    neverallow SRC TGT:CLS PERMS;
//   type_transition SUBJ OBJ:CLS RESULT;
//   genfscon FS /path u:r:t:s0;
//
// SRC/TGT are a bare identifier, "{ id -id ... }", "*", or (target only)
// "self"; PERMS is a permission, "{ p1 p2 }", or "*". The "~" complement
// operator is rejected. Malformed statements are reported one ParseError
// each and skipped by resynchronizing on the next ';'.

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "sepolyzer/policy.hpp"

namespace sepolyzer {

struct ParseError {
    int line = 0;    // 1-based
    int column = 0;  // 1-based
    std::string message;
    std::string snippet;  // text of the offending line

    std::string str() const;
};

struct ParseResult {
    Policy policy;  // statements that parsed cleanly, fully indexed
    std::vector<ParseError> errors;

    bool ok() const { return errors.empty(); }
};

ParseResult parse_policy(std::string_view text, std::string file = "<input>");

/// Canonical text form: statements grouped as classes, sids, attributes,
/// types, allows, neverallows, type_transitions, genfscons; one per line,
/// sorted within each group. parse_policy(serialize_policy(p)) yields a
/// policy equal to p modulo statement order and origins.
std::string serialize_policy(const Policy& policy);

}  // namespace sepolyzer
