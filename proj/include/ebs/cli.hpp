#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "ebs/simulator.hpp"

namespace ebs {

/// Process exit codes.
enum ExitCode : int { exit_ok = 0, exit_bad_config = 2, exit_nonconvergence = 3, exit_divergence = 4, exit_verify = 5 };

struct RunConfig {
    std::string model = "toy";
    ModelScaling scaling;
    GridSpec grid;
    std::string mode = "closed";  // open, closed, target or verify
    double kernel_tol = 1e-10;
    int kernel_max_iter = 60;
    std::vector<double> snapshot_times;
    std::filesystem::path output_dir = "out";
    InitialCondition initial;
    std::uint64_t seed = 0;
    std::filesystem::path kernels_file;  // read instead of solving when set
};

/// Sets one key. Throws ConfigError on an unknown key or a malformed value.
void set_config_value(RunConfig& config, std::string_view key, std::string_view value);

/// Flat "key = value" lines; '#' starts a comment.
RunConfig parse_config_text(std::string_view text, RunConfig base = {});
RunConfig parse_config_file(const std::filesystem::path& path, RunConfig base = {});

/// "0.5,1,2.5" → {0.5, 1, 2.5}.
std::vector<double> parse_real_list(std::string_view text);

/// Grid, mode and model checks plus the CFL test; throws ConfigError.
void precheck(const RunConfig& config);

PlantModel config_model(const RunConfig& config);

/// Smooth random data: a few low Fourier modes in x and y.
EnsembleState random_smooth_state(const GridSpec& grid, std::mt19937_64& rng);

struct VerifyCheck {
    std::string name;
    bool passed = false;
    double value = 0.0;
    double limit = 0.0;
    std::string detail;
};

struct VerifyReport {
    std::vector<VerifyCheck> checks;
    bool passed() const;
};

/// The invariant suite behind the verify command.
VerifyReport run_verification(const RunConfig& config, std::ostream& log);

/// Commands write into config.output_dir and return an ExitCode.
int cmd_kernels(const RunConfig& config, std::ostream& log);
int cmd_simulate(const RunConfig& config, std::ostream& log);
int cmd_verify(const RunConfig& config, std::ostream& log);

/// Dispatches by name and maps exceptions onto exit codes.
int run_command(std::string_view command, const RunConfig& config, std::ostream& log);

}  // namespace ebs
