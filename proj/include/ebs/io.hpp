#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ebs/simulator.hpp"

namespace ebs {

/// Every float is written with 17 significant digits so files read back exactly.
std::string format_real(double value);

/// kernels.csv: header x,xi,y,k,ktilde; one row per triangle node and y-node,
/// ordered by x, then ξ, then y. k̃ is repeated across the y rows.
void write_kernels_csv(const std::filesystem::path& path, const KernelSolution& sol);

/// Reads a kernels.csv written for the given grid. Throws ConfigError on a
/// malformed file and DimensionError when the row count does not match.
KernelSolution read_kernels_csv(const std::filesystem::path& path, const GridSpec& grid);

/// timeseries.csv: header t,norm_joint,norm_u,norm_v,U,V_lyapunov.
/// V_lyapunov is left empty when the record has no Lyapunov values.
void write_timeseries_csv(const std::filesystem::path& path, const SimulationRecord& rec);

/// snap_<t>.csv: header x,y,u,v; v is repeated across the y rows.
void write_snapshot_csv(const std::filesystem::path& path, const EnsembleState& s, const GridSpec& grid);
EnsembleState read_snapshot_csv(const std::filesystem::path& path, const GridSpec& grid);

std::string snapshot_filename(double t);

/// Numeric columns of a CSV file with a header row.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;  // empty cells read as NaN
};
CsvTable read_csv(const std::filesystem::path& path);

}  // namespace ebs
