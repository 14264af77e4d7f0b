#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "roughvol/exact_law.hpp"
#include "roughvol/function_spec.hpp"

namespace roughvol::cli {

// Bad command line or config: exit code 1, nothing written.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

using KeyValues = std::map<std::string, std::string, std::less<>>;

const std::vector<std::string>& known_keys();
const std::vector<std::string>& subcommands();

// key = value lines, '#' starts a comment; unknown or repeated keys throw.
KeyValues parse_config_text(std::string_view text, std::string_view origin = "config");
KeyValues read_config_file(const std::string& path);

struct RunConfig {
    std::string command;
    ModelParams model;
    std::vector<int> n_list;
    std::size_t paths = 10000;
    std::uint64_t seed = 1;
    FunctionSpec b;
    FunctionSpec f = FunctionSpec::affine(0.0, 1.0);
    FunctionSpec phi = FunctionSpec::polynomial({0.0, 0.0, 0.0, 1.0});
    int threads = 0;  // 0: ROUGHVOL_THREADS or hardware
    double tol = 1e-9;
    double band = 0.15;
    std::string quantity = "mean_X";
    int order = 3;
    std::string out = ".";
    // resolved key/value text, defaults included
    KeyValues resolved;
};

// Merges defaults, then values; validates everything before any computation.
RunConfig resolve_config(const std::string& command, const KeyValues& values);

// Shortest decimal text that reads back to the same double.
std::string format_number(double x);

}  // namespace roughvol::cli
