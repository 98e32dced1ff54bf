// SPDX-License-Identifier: Apache-2.0

#include "sepolyzer/device.hpp"

#include <algorithm>
#include <charconv>

#include <json.hpp>

namespace sepolyzer {

std::string to_string(AccessKind kind) {
    switch (kind) {
    case AccessKind::Read:
        return "read";
    case AccessKind::Write:
        return "write";
    case AccessKind::Execute:
        return "execute";
    }
    return "?";
}

std::optional<AccessKind> access_kind_from_string(std::string_view s) {
    if (s == "read") {
        return AccessKind::Read;
    }
    if (s == "write") {
        return AccessKind::Write;
    }
    if (s == "execute") {
        return AccessKind::Execute;
    }
    return std::nullopt;
}

std::set<std::string> required_mac_perms(AccessKind kind) {
    switch (kind) {
    case AccessKind::Read:
        return {"open", "read"};
    case AccessKind::Write:
        return {"open", "write"};
    case AccessKind::Execute:
        return {"execute"};
    }
    return {};
}

std::string file_class_for_mode(char modeType) {
    switch (modeType) {
    case '-':
        return "file";
    case 'd':
        return "dir";
    case 'c':
        return "chr_file";
    case 'b':
        return "blk_file";
    case 's':
        return "sock_file";
    case 'p':
        return "fifo_file";
    case 'l':
        return "lnk_file";
    default:
        return "file";
    }
}

bool is_valid_mode(std::string_view mode) {
    if (mode.size() != 10) {
        return false;
    }
    auto one_of = [](char c, std::string_view allowed) {
        return allowed.find(c) != std::string_view::npos;
    };
    if (!one_of(mode[0], "-dlcbsp")) {
        return false;
    }
    for (int triad = 0; triad < 3; ++triad) {
        if (!one_of(mode[1 + triad * 3], "r-") || !one_of(mode[2 + triad * 3], "w-")) {
            return false;
        }
    }
    return one_of(mode[3], "xsS-") && one_of(mode[6], "xsS-") && one_of(mode[9], "xtT-");
}

namespace {

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    size_t start = 0;
    while (start <= text.size()) {
        auto nl = text.find('\n', start);
        if (nl == std::string_view::npos) {
            if (start < text.size()) {
                lines.push_back(text.substr(start));
            }
            break;
        }
        lines.push_back(text.substr(start, nl - start));
        start = nl + 1;
    }
    return lines;
}

std::string_view rtrim(std::string_view s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) {
        s.remove_suffix(1);
    }
    return s;
}

// Splits off `count` whitespace-separated fields and returns the trimmed
// remainder of the line (which may itself contain spaces).
bool split_fields(std::string_view line, size_t count, std::vector<std::string>& fields,
                  std::string& rest) {
    fields.clear();
    size_t i = 0;
    const size_t n = line.size();
    while (fields.size() < count) {
        while (i < n && (line[i] == ' ' || line[i] == '\t')) {
            ++i;
        }
        if (i >= n) {
            return false;
        }
        size_t j = i;
        while (j < n && line[j] != ' ' && line[j] != '\t') {
            ++j;
        }
        fields.emplace_back(line.substr(i, j - i));
        i = j;
    }
    while (i < n && (line[i] == ' ' || line[i] == '\t')) {
        ++i;
    }
    rest = std::string(rtrim(line.substr(i)));
    return true;
}

bool parse_int(std::string_view s, int& out) {
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

std::optional<std::string> parent_path(const std::string& path) {
    if (path == "/") {
        return std::nullopt;
    }
    auto pos = path.rfind('/');
    if (pos == 0) {
        return "/";
    }
    return path.substr(0, pos);
}

std::vector<std::string> ancestor_paths(const std::string& path) {
    std::vector<std::string> out;
    auto p = parent_path(path);
    while (p) {
        out.push_back(*p);
        p = parent_path(*p);
    }
    std::reverse(out.begin(), out.end());  // root first
    return out;
}

std::string join_path(const std::string& dir, const std::string& name) {
    if (dir == "/") {
        return "/" + name;
    }
    return dir + "/" + name;
}

}  // namespace

std::vector<ProcessEntry> ingest_ps(std::string_view text) {
    std::vector<ProcessEntry> out;
    std::vector<std::string> fields;
    std::string rest;
    int lineno = 0;
    for (auto raw : split_lines(text)) {
        ++lineno;
        std::string_view line = rtrim(raw);
        if (line.empty()) {
            continue;
        }
        if (!split_fields(line, 4, fields, rest)) {
            throw IngestError(lineno, "expected LABEL USER PID PPID NAME");
        }
        if (fields[0] == "LABEL" && fields[1] == "USER" && fields[2] == "PID" &&
            fields[3] == "PPID" && rest == "NAME") {
            continue;  // toolbox ps header
        }
        auto ctx = SecurityContext::parse(fields[0]);
        if (!ctx) {
            throw IngestError(lineno, "invalid security context '" + fields[0] + "'");
        }
        ProcessEntry entry;
        entry.context = *ctx;
        entry.user = fields[1];
        if (!parse_int(fields[2], entry.pid) || entry.pid <= 0) {
            throw IngestError(lineno, "invalid pid '" + fields[2] + "'");
        }
        if (!parse_int(fields[3], entry.ppid) || entry.ppid < 0) {
            throw IngestError(lineno, "invalid ppid '" + fields[3] + "'");
        }
        if (rest.empty()) {
            throw IngestError(lineno, "missing process name");
        }
        entry.name = rest;
        out.push_back(std::move(entry));
    }
    return out;
}

namespace {

// Directories known only from a block header get placeholder metadata; a
// later (or earlier) entry row for the same path replaces it.
FileEntry synthesized_dir(const std::string& path) {
    return FileEntry{path, SecurityContext{"u", "object_r", "unlabeled", "s0"}, "drwxr-xr-x",
                     "root", "root"};
}

}  // namespace

std::map<std::string, FileEntry> ingest_ls(std::string_view text) {
    std::map<std::string, FileEntry> files;
    std::set<std::string> synthesized;

    auto ensure_dir = [&](const std::string& path, int lineno) {
        std::string current = path;
        while (true) {
            auto it = files.find(current);
            if (it != files.end()) {
                if (!it->second.isDirectory()) {
                    throw IngestError(lineno, "'" + current + "' is listed as a directory but has "
                                                              "a non-directory entry");
                }
                break;
            }
            files.emplace(current, synthesized_dir(current));
            synthesized.insert(current);
            auto parent = parent_path(current);
            if (!parent) {
                break;
            }
            current = *parent;
        }
    };

    std::optional<std::string> currentDir;
    std::vector<std::string> fields;
    std::string rest;
    int lineno = 0;
    for (auto raw : split_lines(text)) {
        ++lineno;
        std::string_view line = rtrim(raw);
        if (line.empty()) {
            currentDir.reset();
            continue;
        }
        if (line.front() == '/' && line.back() == ':') {
            std::string dir(line.substr(0, line.size() - 1));
            if (dir.empty()) {
                dir = "/";
            }
            if (dir.size() > 1 && dir.back() == '/') {
                dir.pop_back();
            }
            ensure_dir(dir, lineno);
            currentDir = dir;
            continue;
        }
        if (!currentDir) {
            throw IngestError(lineno, "entry line outside of a directory block");
        }
        if (!split_fields(line, 4, fields, rest)) {
            throw IngestError(lineno, "expected MODE OWNER GROUP SECLABEL NAME");
        }
        if (!is_valid_mode(fields[0])) {
            throw IngestError(lineno, "invalid mode string '" + fields[0] + "'");
        }
        auto ctx = SecurityContext::parse(fields[3]);
        if (!ctx) {
            throw IngestError(lineno, "invalid security context '" + fields[3] + "'");
        }
        if (rest.empty()) {
            throw IngestError(lineno, "missing entry name");
        }
        if (rest.find('/') != std::string::npos) {
            throw IngestError(lineno, "entry name must not contain '/'");
        }
        std::string path = join_path(*currentDir, rest);
        FileEntry entry{path, *ctx, fields[0], fields[1], fields[2]};
        auto it = files.find(path);
        if (it == files.end()) {
            files.emplace(std::move(path), std::move(entry));
        } else if (synthesized.count(path)) {
            if (!entry.isDirectory()) {
                throw IngestError(lineno, "'" + path + "' is listed as a directory but has a "
                                                       "non-directory entry");
            }
            it->second = std::move(entry);
            synthesized.erase(path);
        } else {
            throw IngestError(lineno, "duplicate entry for '" + path + "'");
        }
    }
    return files;
}

std::map<std::string, std::set<std::string>> ingest_groups(std::string_view text) {
    std::map<std::string, std::set<std::string>> out;
    int lineno = 0;
    for (auto raw : split_lines(text)) {
        ++lineno;
        std::string_view line = rtrim(raw);
        auto hash = line.find('#');
        if (hash != std::string_view::npos) {
            line = rtrim(line.substr(0, hash));
        }
        if (line.empty()) {
            continue;
        }
        std::vector<std::string> fields;
        std::string rest;
        if (!split_fields(line, 1, fields, rest)) {
            throw IngestError(lineno, "expected USER GROUP...");
        }
        auto& groups = out[fields[0]];
        size_t i = 0;
        while (i < rest.size()) {
            while (i < rest.size() && (rest[i] == ' ' || rest[i] == '\t')) {
                ++i;
            }
            size_t j = i;
            while (j < rest.size() && rest[j] != ' ' && rest[j] != '\t') {
                ++j;
            }
            if (j > i) {
                groups.insert(rest.substr(i, j - i));
            }
            i = j;
        }
    }
    return out;
}

Snapshot make_snapshot(std::vector<ProcessEntry> processes, std::map<std::string, FileEntry> files,
                       std::map<std::string, std::set<std::string>> userGroups) {
    std::sort(processes.begin(), processes.end(), [](const ProcessEntry& a, const ProcessEntry& b) {
        return std::tie(a.pid, a.name) < std::tie(b.pid, b.name);
    });
    for (const auto& [path, entry] : files) {
        if (path.empty() || path.front() != '/') {
            throw IngestError(0, "file path must be absolute: '" + path + "'");
        }
        auto parent = parent_path(path);
        if (parent) {
            auto it = files.find(*parent);
            if (it == files.end()) {
                throw IngestError(0, "missing ancestor directory '" + *parent + "' of '" + path +
                                         "'");
            }
            if (!it->second.isDirectory()) {
                throw IngestError(0, "ancestor '" + *parent + "' of '" + path +
                                         "' is not a directory");
            }
        }
    }
    return Snapshot{std::move(processes), std::move(files), std::move(userGroups)};
}

bool mac_allows(const Policy& policy, const std::string& domain, const std::string& targetType,
                const std::string& cls, const std::set<std::string>& perms) {
    std::set<std::string> granted;
    for (const auto& rule : policy.allows) {
        if (rule.av.cls != cls) {
            continue;
        }
        auto sources = resolve_type_set(policy, rule.source);
        if (!sources.count(domain)) {
            continue;
        }
        if (rule.target.kind == TypeSetExpr::Kind::Self) {
            if (targetType != domain) {
                continue;
            }
        } else if (!resolve_type_set(policy, rule.target).count(targetType)) {
            continue;
        }
        if (rule.av.allPermissions) {
            return true;
        }
        granted.insert(rule.av.permissions.begin(), rule.av.permissions.end());
    }
    return std::includes(granted.begin(), granted.end(), perms.begin(), perms.end());
}

bool dac_allows(const Snapshot& snapshot, const std::string& user, const FileEntry& file,
                AccessKind kind) {
    if (user == "root") {
        return true;
    }
    int triad;
    if (file.owner == user) {
        triad = 0;
    } else {
        bool inGroup;
        if (auto it = snapshot.userGroups.find(user); it != snapshot.userGroups.end()) {
            inGroup = it->second.count(file.group) != 0;
        } else {
            inGroup = file.group == user;
        }
        triad = inGroup ? 1 : 2;
    }
    switch (kind) {
    case AccessKind::Read:
        return file.mode[1 + triad * 3] == 'r';
    case AccessKind::Write:
        return file.mode[2 + triad * 3] == 'w';
    case AccessKind::Execute: {
        char x = file.mode[3 + triad * 3];
        return x == 'x' || x == 's' || x == 't';
    }
    }
    return false;
}

AccessDecision can_access(const Policy& policy, const Snapshot& snapshot,
                          const ProcessEntry& process, const std::string& path, AccessKind kind) {
    auto it = snapshot.files.find(path);
    if (it == snapshot.files.end()) {
        throw PathNotInSnapshotError(path);
    }
    const FileEntry& file = it->second;

    AccessDecision decision;
    decision.allowed = true;
    auto record = [&](std::string description, bool passed) {
        decision.allowed = decision.allowed && passed;
        decision.trace.push_back({std::move(description), passed});
    };

    for (const auto& ancestor : ancestor_paths(path)) {
        const FileEntry& dir = snapshot.files.at(ancestor);
        record("dac execute " + ancestor,
               dac_allows(snapshot, process.user, dir, AccessKind::Execute));
        record("mac search " + ancestor + " [" + dir.context.type + ":dir]",
               mac_allows(policy, process.domain(), dir.context.type, "dir", {"search"}));
    }

    record("dac " + to_string(kind) + " " + path,
           dac_allows(snapshot, process.user, file, kind));

    std::string cls = file_class_for_mode(file.mode[0]);
    std::set<std::string> required = required_mac_perms(kind);
    std::string permtext;
    for (const auto& p : required) {
        if (!permtext.empty()) {
            permtext += " ";
        }
        permtext += p;
    }
    record("mac {" + permtext + "} " + path + " [" + file.context.type + ":" + cls + "]",
           mac_allows(policy, process.domain(), file.context.type, cls, required));

    return decision;
}

std::vector<std::string> query_files(const Policy& policy, const Snapshot& snapshot,
                                     const ProcessEntry& process, AccessKind kind) {
    std::vector<std::string> out;
    for (const auto& [path, entry] : snapshot.files) {
        if (can_access(policy, snapshot, process, path, kind).allowed) {
            out.push_back(path);
        }
    }
    return out;
}

std::vector<ProcessEntry> query_processes(const Policy& policy, const Snapshot& snapshot,
                                          const std::string& path, AccessKind kind) {
    std::vector<ProcessEntry> out;
    for (const auto& process : snapshot.processes) {
        if (can_access(policy, snapshot, process, path, kind).allowed) {
            out.push_back(process);
        }
    }
    return out;
}

namespace {

Severity downgraded(Severity s) {
    switch (s) {
    case Severity::Error:
        return Severity::Warning;
    case Severity::Warning:
        return Severity::Info;
    case Severity::Info:
        return Severity::Info;
    }
    return s;
}

std::vector<AccessKind> granted_kinds(const AccessVector& av) {
    std::vector<AccessKind> kinds;
    auto grants = [&](const char* p) { return av.allPermissions || av.permissions.count(p) != 0; };
    if (grants("read")) {
        kinds.push_back(AccessKind::Read);
    }
    if (grants("write")) {
        kinds.push_back(AccessKind::Write);
    }
    if (grants("execute")) {
        kinds.push_back(AccessKind::Execute);
    }
    return kinds;
}

}  // namespace

std::vector<Finding> refine_findings(const Policy& policy, const Snapshot& snapshot,
                                     std::vector<Finding> findings) {
    TypeSetResolver resolver(policy);
    for (auto& finding : findings) {
        if (!finding.rule) {
            continue;
        }
        if (finding.detector != Detector::L3 && finding.detector != Detector::L4 &&
            finding.detector != Detector::L5) {
            continue;
        }
        const AllowRule& rule = *finding.rule;
        const auto& targets = resolver.targetUnion(rule);
        std::vector<const FileEntry*> evidence;
        for (const auto& [path, entry] : snapshot.files) {
            if (targets.count(entry.context.type)) {
                evidence.push_back(&entry);
            }
        }
        if (evidence.empty()) {
            continue;  // nothing on the device carries the target label
        }
        const auto& sources = resolver.sourceSet(rule);
        std::vector<AccessKind> kinds = granted_kinds(rule.av);

        bool reachable = false;
        for (const auto& process : snapshot.processes) {
            if (!sources.count(process.domain())) {
                continue;
            }
            for (const FileEntry* file : evidence) {
                for (AccessKind kind : kinds) {
                    if (can_access(policy, snapshot, process, file->path, kind).allowed) {
                        reachable = true;
                        break;
                    }
                }
                if (reachable) {
                    break;
                }
            }
            if (reachable) {
                break;
            }
        }
        if (!reachable) {
            finding.notFunctional = true;
            finding.severity = downgraded(finding.severity);
            finding.explanation += "; not functional (unreachable on device)";
        }
    }
    return findings;
}

std::string snapshot_to_json(const Snapshot& snapshot) {
    nlohmann::ordered_json doc;
    doc["version"] = 1;
    doc["processes"] = nlohmann::ordered_json::array();
    for (const auto& p : snapshot.processes) {
        doc["processes"].push_back({{"context", p.context.str()},
                                    {"user", p.user},
                                    {"pid", p.pid},
                                    {"ppid", p.ppid},
                                    {"name", p.name}});
    }
    doc["files"] = nlohmann::ordered_json::array();
    for (const auto& [path, f] : snapshot.files) {
        doc["files"].push_back({{"path", f.path},
                                {"context", f.context.str()},
                                {"mode", f.mode},
                                {"owner", f.owner},
                                {"group", f.group}});
    }
    doc["userGroups"] = nlohmann::ordered_json::object();
    for (const auto& [user, groups] : snapshot.userGroups) {
        doc["userGroups"][user] = std::vector<std::string>(groups.begin(), groups.end());
    }
    return doc.dump(2) + "\n";
}

Snapshot snapshot_from_json(std::string_view text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(std::string("invalid snapshot JSON: ") + e.what());
    }
    try {
        if (doc.at("version").get<int>() != 1) {
            throw Error("unsupported snapshot version");
        }
        std::vector<ProcessEntry> processes;
        for (const auto& p : doc.at("processes")) {
            auto ctx = SecurityContext::parse(p.at("context").get<std::string>());
            if (!ctx) {
                throw Error("invalid process context in snapshot");
            }
            processes.push_back({*ctx, p.at("user").get<std::string>(), p.at("pid").get<int>(),
                                 p.at("ppid").get<int>(), p.at("name").get<std::string>()});
        }
        std::map<std::string, FileEntry> files;
        for (const auto& f : doc.at("files")) {
            auto ctx = SecurityContext::parse(f.at("context").get<std::string>());
            if (!ctx) {
                throw Error("invalid file context in snapshot");
            }
            std::string mode = f.at("mode").get<std::string>();
            if (!is_valid_mode(mode)) {
                throw Error("invalid mode in snapshot: '" + mode + "'");
            }
            std::string path = f.at("path").get<std::string>();
            files.emplace(path, FileEntry{path, *ctx, mode, f.at("owner").get<std::string>(),
                                          f.at("group").get<std::string>()});
        }
        std::map<std::string, std::set<std::string>> userGroups;
        for (const auto& [user, groups] : doc.at("userGroups").items()) {
            std::set<std::string> set;
            for (const auto& g : groups) {
                set.insert(g.get<std::string>());
            }
            userGroups.emplace(user, std::move(set));
        }
        return make_snapshot(std::move(processes), std::move(files), std::move(userGroups));
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("invalid snapshot document: ") + e.what());
    }
}

}  // namespace sepolyzer
