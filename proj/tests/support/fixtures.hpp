// SPDX-License-Identifier: Apache-2.0
//
// Shared test fixtures. kBaseline is an AOSP-shaped reference policy kept
// deliberately lint-clean: every execute grant has a process transition or
// execute_no_trans, every read/write grant carries open, no rule targets a
// default or sensitive type, and untrusted_app only touches its own data.

#pragma once

#include <string>
#include <string_view>

namespace fixtures {

inline constexpr std::string_view kBaseline = R"(
class file { read write open append getattr setattr create unlink lock ioctl execute execute_no_trans };
class dir { search read open getattr write add_name remove_name create };
class process { transition sigchld fork signal };
class lnk_file { read getattr };
class sock_file { read write open create unlink getattr };
class chr_file { read write open getattr ioctl };
class blk_file { read write open getattr };
class fifo_file { read write open getattr };
class property_service { set };
class filesystem { getattr mount associate };

sid kernel;
sid kernel u:r:kernel:s0;
sid unlabeledsid u:object_r:unlabeled:s0;

attribute domain;
attribute appdomain;

type init, domain;
type vold, domain;
type netd, domain;
type mediaserver, domain;
type keystore_daemon, domain;
type tee, domain;
type hal, domain;
type shell, domain;
type system_app, domain;
type platform_app, domain;
type untrusted_app, domain;
type release_app, domain;
typeattribute system_app appdomain;
typeattribute platform_app appdomain;
typeattribute untrusted_app appdomain;
typeattribute release_app appdomain;

type vold_exec;
type netd_exec;
type toolbox_exec;
type tee_exec;
type app_data_file;
type system_file;
type system_data_file;
type system_app_data_file;
type proc_security;
type unlabeled;
type default_prop;
type socket_device;
type device;
type rootfs;
type proc;
type tmpfs;

allow init vold_exec:file { read open execute };
allow init netd_exec:file { read open execute };
allow shell toolbox_exec:file { read getattr open execute execute_no_trans };
allow untrusted_app app_data_file:file { read write open getattr };
allow untrusted_app app_data_file:dir { search open read };
allow system_app app_data_file:file { read write open getattr };
allow system_app system_app_data_file:file { read write open getattr };
allow platform_app system_file:file { read open getattr };
allow mediaserver app_data_file:file { read open };
allow netd self:process sigchld;
allow vold tmpfs:dir { search open read };
allow keystore_daemon app_data_file:dir search;
allow appdomain system_file:dir { search open read };

neverallow { domain -init } proc_security:file { append write };

type_transition init vold_exec:process vold;
type_transition init netd_exec:process netd;
type_transition vold tmpfs:file app_data_file;

genfscon proc / u:object_r:proc:s0;
genfscon proc /sys/kernel/security u:object_r:proc_security:s0;
)";

// One statement from each form in the grammar, for serializer round-trips.
inline constexpr std::string_view kAllForms = R"(
# declarations
class file { read write open append getattr execute execute_no_trans };
class dir { search open read };
class process { transition sigchld };
class property_service { set };
class keystore_key;
sid kernel;
sid kernel u:r:kernel:s0;
sid fs u:object_r:labeledfs:s0:c512,c768;
attribute domain;
attribute appdomain;
type init, domain;
type vold, domain;
type vold_exec;
type untrusted_app;
typeattribute untrusted_app domain, appdomain;
type system_file;
type app_data_file;
type proc_security;
type tmpfs;
type app_tmpfs;
type labeledfs;
type proc;
# rules
allow init self:process sigchld;
allow { domain -init } system_file:file { read open };
allow * system_file:dir search;
allow untrusted_app app_data_file:file *;
allow vold vold:file read;
allow vold vold:file read;
neverallow { domain -init } proc_security:file { append write };
neverallow appdomain proc_security:dir search;
type_transition init vold_exec:process vold;
type_transition init tmpfs:file app_tmpfs;
genfscon proc / u:object_r:proc:s0;
genfscon proc /sys/kernel/security u:object_r:proc_security:s0;
genfscon debugfs /kgsl u:object_r:sysfs_kernel_debug_kgsl:s0;
)";

inline std::string with_rules(std::string_view base, std::string_view extra) {
    std::string out(base);
    out += "\n";
    out += extra;
    out += "\n";
    return out;
}

}  // namespace fixtures
