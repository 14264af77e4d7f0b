#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "roughvol/cli/config.hpp"

namespace roughvol::cli {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    void add(std::vector<std::string> row) { rows.push_back(std::move(row)); }
    std::string to_csv() const;
};

struct Artifacts {
    Table table;
    nlohmann::ordered_json summary;
};

// Runs the engines for one resolved config; throws on failure.
Artifacts run_command(const RunConfig& cfg);

nlohmann::ordered_json config_json(const RunConfig& cfg);

// Full front end: exit 0 on success, 1 on validation errors (nothing
// written), 2 on numerical failure.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace roughvol::cli
