#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "ebs/cli.hpp"

namespace ebs {

namespace {

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_real(std::string_view key, std::string_view text) {
    text = trim(text);
    double v = 0.0;
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || ec != std::errc() || end != text.data() + text.size())
        throw ConfigError("'" + std::string(key) + "' needs a number, got '" + std::string(text) + "'");
    return v;
}

template <typename Int>
Int to_int(std::string_view key, std::string_view text) {
    text = trim(text);
    Int v = 0;
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || ec != std::errc() || end != text.data() + text.size())
        throw ConfigError("'" + std::string(key) + "' needs an integer, got '" + std::string(text) + "'");
    return v;
}

using Setter = std::function<void(RunConfig&, std::string_view key, std::string_view value)>;

const std::map<std::string, Setter, std::less<>>& setters() {
    static const std::map<std::string, Setter, std::less<>> table{
        {"model", [](RunConfig& c, auto, auto v) { c.model = std::string(v); }},
        {"nx", [](RunConfig& c, auto k, auto v) { c.grid.nx = to_int<Index>(k, v); }},
        {"ny", [](RunConfig& c, auto k, auto v) { c.grid.ny = to_int<Index>(k, v); }},
        {"dt", [](RunConfig& c, auto k, auto v) { c.grid.dt = to_real(k, v); }},
        {"t_final", [](RunConfig& c, auto k, auto v) { c.grid.t_final = to_real(k, v); }},
        {"mode", [](RunConfig& c, auto, auto v) { c.mode = std::string(v); }},
        {"kernel_tol", [](RunConfig& c, auto k, auto v) { c.kernel_tol = to_real(k, v); }},
        {"kernel_max_iter", [](RunConfig& c, auto k, auto v) { c.kernel_max_iter = to_int<int>(k, v); }},
        {"snapshots", [](RunConfig& c, auto, auto v) { c.snapshot_times = parse_real_list(v); }},
        {"output_dir", [](RunConfig& c, auto, auto v) { c.output_dir = std::string(v); }},
        {"initial_condition", [](RunConfig& c, auto, auto v) { c.initial.kind = std::string(v); }},
        {"ic_amplitude_u", [](RunConfig& c, auto k, auto v) { c.initial.amplitude_u = to_real(k, v); }},
        {"ic_amplitude_v", [](RunConfig& c, auto k, auto v) { c.initial.amplitude_v = to_real(k, v); }},
        {"ic_center", [](RunConfig& c, auto k, auto v) { c.initial.center = to_real(k, v); }},
        {"ic_width", [](RunConfig& c, auto k, auto v) { c.initial.width = to_real(k, v); }},
        {"seed", [](RunConfig& c, auto k, auto v) { c.seed = to_int<std::uint64_t>(k, v); }},
        {"kernels_file", [](RunConfig& c, auto, auto v) { c.kernels_file = std::string(v); }},
        {"scale_lambda", [](RunConfig& c, auto k, auto v) { c.scaling.lambda = to_real(k, v); }},
        {"scale_mu", [](RunConfig& c, auto k, auto v) { c.scaling.mu = to_real(k, v); }},
        {"scale_theta", [](RunConfig& c, auto k, auto v) { c.scaling.theta = to_real(k, v); }},
        {"scale_w", [](RunConfig& c, auto k, auto v) { c.scaling.w = to_real(k, v); }},
        {"scale_xi", [](RunConfig& c, auto k, auto v) { c.scaling.xi = to_real(k, v); }},
        {"scale_q", [](RunConfig& c, auto k, auto v) { c.scaling.q = to_real(k, v); }},
    };
    return table;
}

}  // namespace

std::vector<double> parse_real_list(std::string_view text) {
    std::vector<double> out;
    text = trim(text);
    while (!text.empty()) {
        const auto comma = text.find(',');
        out.push_back(to_real("snapshots", text.substr(0, comma)));
        if (comma == std::string_view::npos) break;
        text = text.substr(comma + 1);
    }
    return out;
}

void set_config_value(RunConfig& config, std::string_view key, std::string_view value) {
    const auto it = setters().find(trim(key));
    if (it == setters().end()) throw ConfigError("unknown configuration key '" + std::string(trim(key)) + "'");
    it->second(config, trim(key), trim(value));
}

RunConfig parse_config_text(std::string_view text, RunConfig config) {
    std::istringstream in{std::string(text)};
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        std::string_view body(line);
        if (const auto hash = body.find('#'); hash != std::string_view::npos) body = body.substr(0, hash);
        body = trim(body);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError("line " + std::to_string(number) + ": expected key = value");
        set_config_value(config, body.substr(0, eq), body.substr(eq + 1));
    }
    return config;
}

RunConfig parse_config_file(const std::filesystem::path& path, RunConfig base) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), std::move(base));
}

PlantModel config_model(const RunConfig& config) { return builtin_model(config.model, config.scaling); }

void precheck(const RunConfig& config) {
    config.grid.validate();
    if (config.mode != "verify") parse_mode(config.mode);
    if (!(config.kernel_tol > 0.0)) throw ConfigError("kernel_tol must be positive");
    if (config.kernel_max_iter < 1) throw ConfigError("kernel_max_iter must be at least 1");
    for (double t : config.snapshot_times)
        if (!(t >= 0.0 && t <= config.grid.t_final)) throw ConfigError("snapshot time outside [0, t_final]");
    initial_state(GridSpec{2, 2, 1.0, 1.0}, config.initial);
    const SampledCoefficients c = sample(config_model(config), config.grid);
    check_cfl(c, config.grid.dt);
}

}  // namespace ebs
