// SPDX-License-Identifier: Apache-2.0
//
// End-to-end checks of the sepolyzer binary: exit codes, JSON purity on
// stdout, determinism, and the snapshot pipeline.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>
#include <sys/wait.h>

#include "support/fixtures.hpp"

namespace fs = std::filesystem;

namespace {

struct CmdResult {
    int status = -1;
    std::string out;
};

CmdResult run_raw(std::string cmd, bool mergeStderr) {
    cmd += mergeStderr ? " 2>&1" : " 2>/dev/null";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    CmdResult result;
    char buf[4096];
    size_t n;
    while ((n = fread(buf, 1, sizeof(buf), pipe)) > 0) {
        result.out.append(buf, n);
    }
    int rc = pclose(pipe);
    result.status = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    return result;
}

CmdResult run(const std::string& args, bool mergeStderr = false) {
    return run_raw(std::string(SEPOLYZER_BIN) + " " + args, mergeStderr);
}

class TempDir {
  public:
    TempDir() {
        path_ = fs::temp_directory_path() /
                ("sepolyzer_cli_test_" + std::to_string(::getpid()));
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    std::string write(const std::string& name, std::string_view content) {
        fs::path p = path_ / name;
        std::ofstream out(p, std::ios::binary);
        out << content;
        return p.string();
    }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

  private:
    fs::path path_;
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

constexpr std::string_view kPsFixture =
    "LABEL USER PID PPID NAME\n"
    "u:r:init:s0 root 1 0 /init\n"
    "u:r:untrusted_app:s0 u0_a12 1234 321 com.example.app\n"
    "u:r:shell:s0 shell 700 1 /system/bin/sh\n";

constexpr std::string_view kLsFixture =
    "/:\n"
    "drwxr-xr-x root root u:object_r:system_file:s0 system\n"
    "drwxr-xr-x root root u:object_r:proc:s0 proc\n"
    "\n"
    "/system:\n"
    "drwxr-xr-x root root u:object_r:system_file:s0 bin\n"
    "\n"
    "/system/bin:\n"
    "-rwxr-xr-x root shell u:object_r:toolbox_exec:s0 toolbox\n"
    "\n"
    "/proc:\n"
    "dr-xr-xr-x root root u:object_r:proc:s0 sys\n"
    "\n"
    "/proc/sys:\n"
    "-rw-r--r-- root root u:object_r:proc_security:s0 mmap_min_addr\n";

constexpr std::string_view kQueryPolicy =
    "class file { read write open getattr execute };\n"
    "class dir { search open read };\n"
    "type init;\ntype untrusted_app;\ntype shell;\n"
    "type system_file;\ntype toolbox_exec;\ntype proc;\ntype proc_security;\ntype unlabeled;\n"
    "allow untrusted_app unlabeled:dir search;\n"
    "allow untrusted_app system_file:dir search;\n"
    "allow untrusted_app proc:dir search;\n"
    "allow untrusted_app toolbox_exec:file { read open getattr };\n"
    "allow shell unlabeled:dir search;\n"
    "allow shell system_file:dir search;\n"
    "allow shell toolbox_exec:file { read open execute };\n";

}  // namespace

TEST_CASE("stats: text, json, deltas and error paths") {
    TempDir tmp;
    std::string base = tmp.write("base.conf", fixtures::kBaseline);
    std::string subj = tmp.write(
        "subj.conf", fixtures::with_rules(fixtures::kBaseline, "type oem1;\ntype oem2;"));

    auto text = run("stats " + base);
    CHECK(text.status == 0);
    CHECK(text.out.find("allow rules") != std::string::npos);

    auto json = run("stats " + subj + " --baseline " + base + " --json");
    CHECK(json.status == 0);
    auto doc = nlohmann::json::parse(json.out);  // throws on trailing garbage
    CHECK(doc.at("stats").at("type_count").get<int>() ==
          doc.at("baseline").at("type_count").get<int>() + 2);
    CHECK(doc.at("delta").at("type_count").get<int>() == 2);
    CHECK(doc.at("ratios").contains("allow_per_type"));

    CHECK(run("stats /no/such/file.conf").status == 2);
    CHECK(run("stats " + tmp.write("broken.conf", "allow ;;;")).status == 2);
    CHECK(run("frobnicate " + base).status == 3);
    CHECK(run("stats").status == 3);
}

TEST_CASE("diff: text, filter and exit codes") {
    TempDir tmp;
    std::string base = tmp.write("base.conf", fixtures::kBaseline);
    std::string same = tmp.write("same.conf", fixtures::kBaseline);
    std::string subj = tmp.write(
        "subj.conf",
        fixtures::with_rules(fixtures::kBaseline,
                             "allow untrusted_app tee_exec:file { read getattr execute open };\n"
                             "allow vold tmpfs:file { read open };"));

    auto identical = run("diff " + base + " " + same);
    CHECK(identical.status == 0);
    CHECK(identical.out.find("no differences") != std::string::npos);

    auto added = run("diff " + base + " " + subj);
    CHECK(added.status == 0);
    CHECK(added.out.find("allow untrusted_app tee_exec:file { execute getattr open read };") !=
          std::string::npos);

    auto filtered = run("diff " + base + " " + subj + " --type untrusted_app --json");
    CHECK(filtered.status == 0);
    auto doc = nlohmann::json::parse(filtered.out);
    REQUIRE(doc.at("added_allows").size() == 1);
    CHECK(doc.at("added_allows")[0].at("text").get<std::string>().find("untrusted_app") !=
          std::string::npos);

    CHECK(run("diff " + base + " " + subj + " --type no_such_type").status == 3);
}

TEST_CASE("check-neverallow: violations fail the build") {
    TempDir tmp;
    std::string violating = tmp.write(
        "viol.conf", fixtures::with_rules(fixtures::kBaseline,
                                          "allow vold proc_security:file write;"));
    std::string clean = tmp.write("clean.conf", fixtures::kBaseline);

    auto bad = run("check-neverallow " + violating + " --json");
    CHECK(bad.status == 1);
    auto doc = nlohmann::json::parse(bad.out);
    REQUIRE(doc.at("violations").size() == 1);
    CHECK(doc.at("violations")[0].at("witness").at("source") == "vold");
    CHECK(doc.at("violations")[0].at("witness").at("perms")[0] == "write");

    CHECK(run("check-neverallow " + clean).status == 0);

    // assertions shipped out-of-band get merged before checking
    std::string stripped = tmp.write(
        "stripped.conf",
        "class file { write append };\nattribute domain;\ntype init, domain;\n"
        "type vold, domain;\ntype proc_security;\nallow vold proc_security:file write;\n");
    std::string extra = tmp.write(
        "assertions.conf", "neverallow { domain -init } proc_security:file { append write };\n");
    CHECK(run("check-neverallow " + stripped).status == 0);
    CHECK(run("check-neverallow " + stripped + " --neverallows " + extra).status == 1);
}

TEST_CASE("lint: severity threshold drives the exit code") {
    TempDir tmp;
    std::string base = tmp.write("base.conf", fixtures::kBaseline);
    std::string dangerous = tmp.write(
        "dangerous.conf",
        fixtures::with_rules(fixtures::kBaseline,
                             "allow untrusted_app proc_security:file { read getattr open };"));
    std::string warnOnly = tmp.write(
        "warn.conf", fixtures::with_rules(fixtures::kBaseline,
                                          "allow mediaserver default_prop:property_service set;"));

    auto errors = run("lint " + dangerous + " --baseline " + base + " --json");
    CHECK(errors.status == 1);
    auto doc = nlohmann::json::parse(errors.out);
    bool sawL4 = false;
    for (const auto& f : doc.at("findings")) {
        if (f.at("detector") == "L4") {
            sawL4 = true;
            CHECK(f.at("severity") == "error");
        }
    }
    CHECK(sawL4);
    CHECK(doc.at("default_type_usage").contains("unlabeled"));

    CHECK(run("lint " + warnOnly + " --baseline " + base).status == 0);
    CHECK(run("lint " + warnOnly + " --baseline " + base + " --fail-on warning").status == 1);
    CHECK(run("lint " + base + " --baseline " + base).status == 0);
    CHECK(run("lint " + base + " --fail-on bogus").status == 3);
}

TEST_CASE("lint: config file and environment fallback") {
    TempDir tmp;
    std::string policy = tmp.write(
        "p.conf", fixtures::with_rules(fixtures::kBaseline,
                                       "allow vold tmpfs:file { read open };"));
    // treat tmpfs as sensitive via configuration
    std::string config = tmp.write("lint.conf", "sensitive_types = tmpfs\n");
    std::string base = tmp.write("base.conf", fixtures::kBaseline);

    CHECK(run("lint " + policy + " --baseline " + base).status == 0);
    CHECK(run("lint " + policy + " --baseline " + base + " --config " + config +
              " --fail-on warning")
              .status == 1);
    auto viaEnv = run_raw("env SEPOLYZER_CONFIG=" + config + " " + SEPOLYZER_BIN + " lint " +
                              policy + " --baseline " + base + " --fail-on warning",
                          false);
    CHECK(viaEnv.status == 1);

    CHECK(run("lint " + policy + " --config /no/such/config").status == 2);
    std::string badConfig = tmp.write("bad.conf", "crowded_ratio_threshold = 0.1\n");
    CHECK(run("lint " + policy + " --config " + badConfig).status == 2);
}

TEST_CASE("ingest: canonical snapshot JSON, idempotent") {
    TempDir tmp;
    std::string ps = tmp.write("ps.txt", kPsFixture);
    std::string ls = tmp.write("ls.txt", kLsFixture);
    std::string groups = tmp.write("groups.txt", "u0_a12 u0_a12 sdcard_rw\n");

    auto first = run("ingest --ps " + ps + " --ls " + ls + " --groups " + groups + " -o " +
                     tmp.file("snap1.json"));
    REQUIRE(first.status == 0);
    auto second = run("ingest --ps " + ps + " --ls " + ls + " --groups " + groups + " -o " +
                      tmp.file("snap2.json"));
    REQUIRE(second.status == 0);
    std::string snap1 = slurp(tmp.file("snap1.json"));
    CHECK(snap1 == slurp(tmp.file("snap2.json")));
    auto doc = nlohmann::json::parse(snap1);
    CHECK(doc.at("version") == 1);
    CHECK(doc.at("processes").size() == 3);
    CHECK(doc.at("files").size() == 7);  // 6 listed entries + the synthesized "/"

    // processes-only snapshot from an empty listing
    std::string emptyLs = tmp.write("empty_ls.txt", "");
    auto procOnly = run("ingest --ps " + ps + " --ls " + emptyLs + " -o " + tmp.file("p.json"));
    CHECK(procOnly.status == 0);
    CHECK(nlohmann::json::parse(slurp(tmp.file("p.json"))).at("files").empty());

    // a malformed ps line is reported with its line number
    std::string badPs = tmp.write("bad_ps.txt",
                                  "u:r:init:s0 root 1 0 /init\n"
                                  "u:r:a:s0 root 2 0 x\n"
                                  "u:r:b:s0 root nope 0 y\n");
    auto bad = run("ingest --ps " + badPs + " --ls " + emptyLs + " -o " + tmp.file("x.json"),
                   true);
    CHECK(bad.status == 2);
    CHECK(bad.out.find("line 3") != std::string::npos);
}

TEST_CASE("query: files per process and processes per file") {
    TempDir tmp;
    std::string policy = tmp.write("policy.conf", kQueryPolicy);
    std::string ps = tmp.write("ps.txt", kPsFixture);
    std::string ls = tmp.write("ls.txt", kLsFixture);
    REQUIRE(run("ingest --ps " + ps + " --ls " + ls + " -o " + tmp.file("snap.json")).status == 0);
    std::string snap = tmp.file("snap.json");

    auto files = run("query --policy " + policy + " --snapshot " + snap +
                     " --pid 1234 --access read --json");
    REQUIRE(files.status == 0);
    auto doc = nlohmann::json::parse(files.out);
    REQUIRE(doc.at("results").size() == 1);
    // the app can read the toolbox binary; /proc/sys/* lacks MAC search
    std::vector<std::string> paths = doc.at("results")[0].at("files");
    CHECK(std::find(paths.begin(), paths.end(), "/system/bin/toolbox") != paths.end());
    CHECK(std::find(paths.begin(), paths.end(), "/proc/sys/mmap_min_addr") == paths.end());

    auto procs = run("query --policy " + policy + " --snapshot " + snap +
                     " --file /system/bin/toolbox --access read --json");
    REQUIRE(procs.status == 0);
    auto pdoc = nlohmann::json::parse(procs.out);
    std::vector<int> pids;
    for (const auto& p : pdoc.at("processes")) {
        pids.push_back(p.at("pid").get<int>());
    }
    // init runs as root but has no MAC grants; DAC bypass alone is not enough
    CHECK(pids == std::vector<int>{700, 1234});

    auto byName = run("query --policy " + policy + " --snapshot " + snap +
                      " --process /init --access read");
    CHECK(byName.status == 0);

    CHECK(run("query --policy " + policy + " --snapshot " + snap +
              " --file /nonexistent --access read")
              .status == 3);
    CHECK(run("query --policy " + policy + " --snapshot " + snap + " --pid 9999 --access read")
              .status == 3);
    CHECK(run("query --policy " + policy + " --snapshot " + snap + " --access read").status == 3);
    CHECK(run("query --policy " + policy + " --snapshot " + snap +
              " --pid 1234 --access frobnicate")
              .status == 3);

    // verbose trace names each step
    auto verbose = run("query --policy " + policy + " --snapshot " + snap +
                       " --file /system/bin/toolbox --access read --verbose");
    CHECK(verbose.status == 0);
    CHECK(verbose.out.find("mac search /system") != std::string::npos);

    // a name shared by two processes groups the results per pid
    std::string twinPs = tmp.write("twin_ps.txt",
                                   "u:r:untrusted_app:s0 u0_a12 100 1 worker\n"
                                   "u:r:shell:s0 shell 200 1 worker\n");
    std::string emptyLs = tmp.write("twin_ls.txt", "");
    REQUIRE(run("ingest --ps " + twinPs + " --ls " + emptyLs + " -o " +
                tmp.file("twin.json")).status == 0);
    auto twins = run("query --policy " + policy + " --snapshot " + tmp.file("twin.json") +
                     " --process worker --access read --json");
    REQUIRE(twins.status == 0);
    auto tdoc = nlohmann::json::parse(twins.out);
    REQUIRE(tdoc.at("results").size() == 2);
    CHECK(tdoc.at("results")[0].at("process").at("pid") == 100);
    CHECK(tdoc.at("results")[1].at("process").at("pid") == 200);
}

TEST_CASE("check-neverallow --strict rejects undeclared identifiers") {
    TempDir tmp;
    std::string loose = tmp.write("loose.conf",
                                  "type a;\n"
                                  "neverallow a ghost:file write;\n"
                                  "allow a ghost:file write;\n");
    CHECK(run("check-neverallow " + loose).status == 1);            // lenient: opaque match
    CHECK(run("check-neverallow " + loose + " --strict").status == 2);
}

TEST_CASE("graph: deterministic DOT output") {
    TempDir tmp;
    std::string policy = tmp.write("p.conf", "attribute domain;\ntype init, domain;\n");
    auto direct = run("graph " + policy);
    CHECK(direct.status == 0);
    CHECK(direct.out == "digraph attribute_hierarchy {\n"
                        "  \"domain\" [shape=box];\n"
                        "  \"init\";\n"
                        "  \"init\" -> \"domain\";\n"
                        "}\n");

    REQUIRE(run("graph " + policy + " -o " + tmp.file("a.dot")).status == 0);
    REQUIRE(run("graph " + policy + " -o " + tmp.file("b.dot")).status == 0);
    CHECK(slurp(tmp.file("a.dot")) == direct.out);
    CHECK(slurp(tmp.file("a.dot")) == slurp(tmp.file("b.dot")));
}

TEST_CASE("json mode keeps stdout pure even when findings exist") {
    TempDir tmp;
    std::string base = tmp.write("base.conf", fixtures::kBaseline);
    std::string subj = tmp.write(
        "subj.conf",
        fixtures::with_rules(fixtures::kBaseline,
                             "allow untrusted_app proc_security:file { read getattr open };"));
    for (const std::string& cmd :
         {std::string("stats " + subj + " --json"), std::string("diff " + base + " " + subj + " --json"),
          std::string("check-neverallow " + subj + " --json"),
          std::string("lint " + subj + " --baseline " + base + " --json")}) {
        auto r = run(cmd);
        auto doc = nlohmann::json::parse(r.out);
        CHECK(doc.is_object());
    }
}
