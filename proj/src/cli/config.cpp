#include "roughvol/cli/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace roughvol::cli {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::string default_n(const std::string& command) {
    if (command == "weak-rate") return "64,128,256,512,1024,2048";
    if (command == "cubic-rate" || command == "strong-rate") return "64,128,256,512,1024";
    if (command == "freeze-gap") return "256,1024,4096";
    if (command == "mc") return "64,256";
    if (command == "moment") return "128";
    return "64";
}

double to_double(const KeyValues& kv, const std::string& key) {
    const std::string& text = kv.at(key);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v))
        throw ConfigError("key '" + key + "': expected a finite number, got '" + text + "'");
    return v;
}

template <class Int>
Int to_integer(const std::string& key, std::string_view text) {
    Int v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size())
        throw ConfigError("key '" + key + "': expected an integer, got '" + std::string(text) + "'");
    return v;
}

FunctionSpec to_function(const KeyValues& kv, const std::string& key) {
    try {
        return FunctionSpec::parse(kv.at(key));
    } catch (const std::exception& e) {
        throw ConfigError("key '" + key + "': " + e.what());
    }
}

}  // namespace

const std::vector<std::string>& known_keys() {
    static const std::vector<std::string> keys = {"alpha", "kappa1", "kappa2",  "sigma", "rho",      "x0",
                                                  "l0",    "horizon", "n",      "paths", "seed",     "b",
                                                  "f",     "phi",     "threads", "tol",  "band",     "quantity",
                                                  "order", "out"};
    return keys;
}

const std::vector<std::string>& subcommands() {
    static const std::vector<std::string> cmds = {"exact-law",   "scheme-law", "sample", "weak-rate",  "cubic-rate",
                                                  "strong-rate", "moment",     "stationary", "freeze-gap", "mc"};
    return cmds;
}

KeyValues parse_config_text(std::string_view text, std::string_view origin) {
    KeyValues kv;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto eol = text.find('\n');
        std::string_view line = text.substr(0, eol);
        text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto where = std::string(origin) + ":" + std::to_string(line_no);
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ConfigError(where + ": expected 'key = value'");
        const std::string key(trim(line.substr(0, eq)));
        const std::string value(trim(line.substr(eq + 1)));
        const auto& keys = known_keys();
        if (std::find(keys.begin(), keys.end(), key) == keys.end())
            throw ConfigError(where + ": unknown key '" + key + "'");
        if (value.empty()) throw ConfigError(where + ": key '" + key + "' has no value");
        if (!kv.emplace(key, value).second) throw ConfigError(where + ": key '" + key + "' given twice");
    }
    return kv;
}

KeyValues read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str(), path);
}

RunConfig resolve_config(const std::string& command, const KeyValues& values) {
    const auto& cmds = subcommands();
    if (std::find(cmds.begin(), cmds.end(), command) == cmds.end())
        throw ConfigError("unknown subcommand '" + command + "'");
    const auto& keys = known_keys();
    for (const auto& [key, value] : values)
        if (std::find(keys.begin(), keys.end(), key) == keys.end()) throw ConfigError("unknown key '" + key + "'");
    if (!values.contains("alpha")) throw ConfigError("key 'alpha' is required");

    KeyValues kv = {{"kappa1", "0"}, {"kappa2", "0"},      {"sigma", "1"},
                    {"rho", "0"},    {"x0", "0"},          {"l0", "0"},
                    {"horizon", "1"}, {"n", default_n(command)}, {"paths", "10000"},
                    {"seed", "1"},   {"b", "const:0"},     {"f", "affine:0,1"},
                    {"phi", "poly:0,0,0,1"}, {"threads", "0"}, {"tol", "1e-9"},
                    {"band", "0.15"}, {"quantity", command == "cubic-rate" ? "cubic_L" : "mean_X"},
                    {"order", "3"},   {"out", "."}};
    for (const auto& [key, value] : values) kv[key] = value;

    RunConfig c;
    c.command = command;
    c.model.alpha = to_double(kv, "alpha");
    c.model.kappa1 = to_double(kv, "kappa1");
    c.model.kappa2 = to_double(kv, "kappa2");
    c.model.sigma = to_double(kv, "sigma");
    c.model.rho = to_double(kv, "rho");
    c.model.x0 = to_double(kv, "x0");
    c.model.L0 = to_double(kv, "l0");
    c.model.T = to_double(kv, "horizon");
    try {
        c.model.validate();
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }

    std::string_view list = kv.at("n");
    while (true) {
        const auto comma = list.find(',');
        const int n = to_integer<int>("n", trim(list.substr(0, comma)));
        if (n < 1) throw ConfigError("key 'n': grid sizes must be positive");
        c.n_list.push_back(n);
        if (comma == std::string_view::npos) break;
        list = list.substr(comma + 1);
    }
    for (std::size_t i = 1; i < c.n_list.size(); ++i)
        if (c.n_list[i] <= c.n_list[i - 1]) throw ConfigError("key 'n': values must be strictly increasing");

    c.paths = to_integer<std::size_t>("paths", kv.at("paths"));
    c.seed = to_integer<std::uint64_t>("seed", kv.at("seed"));
    c.threads = to_integer<int>("threads", kv.at("threads"));
    if (c.threads < 0) throw ConfigError("key 'threads': must be >= 0");
    c.order = to_integer<int>("order", kv.at("order"));
    c.b = to_function(kv, "b");
    c.f = to_function(kv, "f");
    c.phi = to_function(kv, "phi");
    if (!c.phi.is_polynomial()) throw ConfigError("key 'phi': must be a polynomial");
    c.tol = to_double(kv, "tol");
    if (!(c.tol > 0.0)) throw ConfigError("key 'tol': must be positive");
    c.band = to_double(kv, "band");
    if (!(c.band > 0.0)) throw ConfigError("key 'band': must be positive");
    c.quantity = kv.at("quantity");
    if (c.quantity != "mean_X" && c.quantity != "var_X" && c.quantity != "cov_X" && c.quantity != "cubic_L")
        throw ConfigError("key 'quantity': expected mean_X, var_X, cov_X or cubic_L");
    c.out = kv.at("out");
    c.resolved = kv;
    return c;
}

std::string format_number(double x) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
    if (ec != std::errc()) throw std::runtime_error("format_number failed");
    return std::string(buf, ptr);
}

}  // namespace roughvol::cli
