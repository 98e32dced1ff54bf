// SPDX-License-Identifier: Apache-2.0
//
// Recorded-device analysis: a Snapshot holds the processes and labeled
// filesystem captured from a device (toolbox-style `ps -Z` / `ls -RlZ`
// output), and queries combine the policy's MAC decisions with classic
// DAC permission bits to answer "who can access what" offline.

#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "sepolyzer/lint.hpp"
#include "sepolyzer/policy.hpp"

namespace sepolyzer {

class IngestError : public Error {
  public:
    IngestError(int line, const std::string& message)
        : Error("line " + std::to_string(line) + ": " + message), line(line) {}

    int line;
};

class PathNotInSnapshotError : public Error {
  public:
    explicit PathNotInSnapshotError(const std::string& path)
        : Error("path not in snapshot: " + path) {}
};

struct ProcessEntry {
    SecurityContext context;
    std::string user;  // Android user string, e.g. u0_a12 or root
    int pid = 0;
    int ppid = 0;
    std::string name;

    const std::string& domain() const { return context.type; }
};

struct FileEntry {
    std::string path;  // absolute
    SecurityContext context;
    std::string mode;  // 10 chars: type char + rwx triads, e.g. "-rw-r--r--"
    std::string owner;
    std::string group;

    bool isDirectory() const { return !mode.empty() && mode[0] == 'd'; }
};

/// Immutable after construction. files satisfies the ancestor-closure
/// invariant: every proper ancestor directory of every path is present.
struct Snapshot {
    std::vector<ProcessEntry> processes;       // sorted by pid
    std::map<std::string, FileEntry> files;    // keyed (and sorted) by path
    std::map<std::string, std::set<std::string>> userGroups;
};

enum class AccessKind { Read, Write, Execute };

std::string to_string(AccessKind kind);
std::optional<AccessKind> access_kind_from_string(std::string_view s);

/// MAC permissions a kind requires on the file's class: read -> {open,
/// read}, write -> {open, write}, execute -> {execute}.
std::set<std::string> required_mac_perms(AccessKind kind);

/// Object class implied by the mode's type character ('-' file, 'd' dir,
/// 'c' chr_file, 'b' blk_file, 's' sock_file, 'p' fifo_file, 'l' lnk_file).
std::string file_class_for_mode(char modeType);

bool is_valid_mode(std::string_view mode);

/// One process per line: LABEL USER PID PPID NAME (NAME may contain
/// spaces). A line equal to the header "LABEL USER PID PPID NAME" is
/// skipped. Throws IngestError with the offending line number.
std::vector<ProcessEntry> ingest_ps(std::string_view text);

/// Recursive-listing blocks: a "PATH:" header line naming a directory
/// followed by "MODE OWNER GROUP SECLABEL NAME" entry lines, blocks
/// separated by blank lines. Directories named only by headers are
/// synthesized (root-owned drwxr-xr-x, label unlabeled) so the returned
/// map always satisfies ancestor closure.
std::map<std::string, FileEntry> ingest_ls(std::string_view text);

/// One mapping per line: USER GROUP [GROUP...]; '#' comments.
std::map<std::string, std::set<std::string>> ingest_groups(std::string_view text);

/// Canonicalizes (processes sorted by pid) and verifies ancestor closure;
/// throws IngestError naming the first missing ancestor.
Snapshot make_snapshot(std::vector<ProcessEntry> processes,
                       std::map<std::string, FileEntry> files,
                       std::map<std::string, std::set<std::string>> userGroups = {});

/// True iff the union of permissions granted by allow rules matching
/// (domain, targetType, class) covers all of perms. A "self" target
/// matches when targetType equals the domain.
bool mac_allows(const Policy& policy, const std::string& domain, const std::string& targetType,
                const std::string& cls, const std::set<std::string>& perms);

/// Classic permission-bit check. root bypasses DAC (never MAC). Users not
/// present in userGroups belong to exactly their own group. Setuid-style
/// bits count as x when lowercase (s/t), as cleared when uppercase (S/T).
bool dac_allows(const Snapshot& snapshot, const std::string& user, const FileEntry& file,
                AccessKind kind);

struct AccessStep {
    std::string description;
    bool passed;
};

struct AccessDecision {
    bool allowed = false;
    std::vector<AccessStep> trace;
};

/// Full reachability decision: every ancestor directory must be DAC
/// executable and MAC searchable, the leaf must pass DAC for the kind and
/// MAC for the kind's required permissions on the file's class. All steps
/// are evaluated and recorded in the trace. Throws PathNotInSnapshotError.
AccessDecision can_access(const Policy& policy, const Snapshot& snapshot,
                          const ProcessEntry& process, const std::string& path, AccessKind kind);

/// Paths the process can access, lexicographically sorted.
std::vector<std::string> query_files(const Policy& policy, const Snapshot& snapshot,
                                     const ProcessEntry& process, AccessKind kind);

/// Processes that can access the path, sorted by pid.
std::vector<ProcessEntry> query_processes(const Policy& policy, const Snapshot& snapshot,
                                          const std::string& path, AccessKind kind);

/// Reachability refinement of lint findings: an L3/L4/L5 finding whose
/// rule's target types label files in the snapshot, none of which any
/// process in the rule's source domains can access with any granted access
/// kind, is annotated not-functional and downgraded one severity level.
/// Findings without snapshot evidence pass through unchanged.
std::vector<Finding> refine_findings(const Policy& policy, const Snapshot& snapshot,
                                     std::vector<Finding> findings);

/// Canonical JSON persistence: {version, processes, files, userGroups};
/// files sorted by path, processes by pid. Serialization of a loaded
/// snapshot is byte-identical.
std::string snapshot_to_json(const Snapshot& snapshot);
Snapshot snapshot_from_json(std::string_view text);

}  // namespace sepolyzer
