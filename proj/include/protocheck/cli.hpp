#pragma once

// The `protocheck` command line, callable in-process.

#include <ostream>
#include <string>
#include <vector>

namespace protocheck::cli {

namespace exit_code {
inline constexpr int kOk = 0;
inline constexpr int kCheckFailed = 1;  // a mandatory applicable requirement failed
inline constexpr int kInput = 2;        // spec, parse, link, validation or data error
inline constexpr int kIo = 3;           // missing or unreadable file, unwritable output
inline constexpr int kBackend = 4;      // predicate backend failure
inline constexpr int kRejected = 5;     // triage operation refused (unknown id, state, role)
}  // namespace exit_code

// `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace protocheck::cli
