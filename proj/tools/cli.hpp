#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace coldstart::cli {

inline constexpr const char* kToolName = "coldstart";
inline constexpr const char* kToolVersion = "0.1.0";
/// Environment variable naming the default output directory.
inline constexpr const char* kOutDirEnv = "COLDSTART_OUT_DIR";

enum ExitCode : int {
    kExitOk = 0,
    kExitValidation = 2,
    kExitRuntime = 3,
};

/// Invalid command-line input or configuration; maps to kExitValidation.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct PolicySpec {
    std::string name;
    std::vector<std::pair<std::string, std::string>> params; // in the order written

    /// Value of `key`, or `fallback` when absent.
    std::string get(const std::string& key, const std::string& fallback) const;
};

/// Policy list grammar:
///
///   list   := policy ( "," policy )*
///   policy := name [ ":" param ( "," param )* ]
///   param  := key "=" value
///
/// A comma-separated token that contains "=" but no ":" is another parameter
/// of the preceding policy, so "lba:beta=1,tie=random,oracle" is two policies.
/// Names and keys are not validated here.
std::vector<PolicySpec> parse_policy_list(const std::string& text);

/// Policy names accepted by `simulate`, including the unimplemented "cbb" slot.
const std::vector<std::string>& available_policies();

/// Problems found in a file written by this tool (CSV output, model or tree
/// JSON); empty when the file is valid. `kind` receives the detected schema.
std::vector<std::string> check_file(const std::string& path, std::string* kind = nullptr);

/// Runs one command line (without the program name). Never throws.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace coldstart::cli
