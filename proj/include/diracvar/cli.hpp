#pragma once

// Command-line front end: list, show, check, run and dvp on builtin or file
// scenarios.
//
// Exit codes: 0 success, 1 a structural check failed, 2 domain, attainability
// or leaf error, 3 divergence, 64 malformed configuration or usage.

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

namespace diracvar {

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int check_failed = 1;
inline constexpr int domain = 2;
inline constexpr int divergence = 3;
inline constexpr int config = 64;
}  // namespace exit_code

/// A builtin name, a scenario document file, or a file of the form
/// {"scenario": name, "overrides": {...}}.
nlohmann::json resolve_document(const std::string& source);

/// Parses "key=value"; value is JSON when it parses as such, a bare string otherwise.
std::pair<std::string, nlohmann::json> parse_override(const std::string& text);

/// Shortest round-trip decimal form.
std::string format_double(double v);

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int cli_main(int argc, char** argv);

}  // namespace diracvar
