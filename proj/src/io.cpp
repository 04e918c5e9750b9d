#include "ebs/io.hpp"

#include <fmt/format.h>

#include <fstream>
#include <limits>
#include <sstream>

namespace ebs {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path.string());
    return out;
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

double parse_cell(const std::string& cell, const std::filesystem::path& path) {
    if (cell.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::size_t used = 0;
    double v;
    try {
        v = std::stod(cell, &used);
    } catch (const std::exception&) {
        throw ConfigError("bad number '" + cell + "' in " + path.string());
    }
    if (used != cell.size()) throw ConfigError("bad number '" + cell + "' in " + path.string());
    return v;
}

}  // namespace

std::string format_real(double value) { return fmt::format("{:.17g}", value); }

CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + path.string());
    CsvTable t;
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("empty file " + path.string());
    t.header = split(line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cells = split(line);
        if (cells.size() != t.header.size()) throw ConfigError("ragged row in " + path.string());
        std::vector<double> row;
        row.reserve(cells.size());
        for (const auto& c : cells) row.push_back(parse_cell(c, path));
        t.rows.push_back(std::move(row));
    }
    return t;
}

void write_kernels_csv(const std::filesystem::path& path, const KernelSolution& sol) {
    auto out = open_out(path);
    const GridSpec& g = sol.grid;
    fmt::memory_buffer buf;
    fmt::format_to(std::back_inserter(buf), "x,xi,y,k,ktilde\n");
    sol.k.index().for_each([&](Index i, Index j) {
        const double kt = sol.ktilde(i, j);
        for (Index m = 0; m < g.ny; ++m)
            fmt::format_to(std::back_inserter(buf), "{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", g.x(i), g.x(j),
                           g.y(m), sol.k(i, j, m), kt);
    });
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

KernelSolution read_kernels_csv(const std::filesystem::path& path, const GridSpec& grid) {
    const CsvTable t = read_csv(path);
    if (t.header != std::vector<std::string>{"x", "xi", "y", "k", "ktilde"})
        throw ConfigError("unexpected kernels header in " + path.string());
    KernelSolution sol;
    sol.grid = grid;
    sol.k = TriField(grid.nx, grid.ny);
    sol.ktilde = TriScalarField(grid.nx);
    const Index want = sol.k.index().size() * grid.ny;
    if (static_cast<Index>(t.rows.size()) != want)
        throw DimensionError(fmt::format("{} holds {} rows, the grid needs {}", path.string(), t.rows.size(), want));
    Index r = 0;
    sol.k.index().for_each([&](Index i, Index j) {
        for (Index m = 0; m < grid.ny; ++m, ++r) {
            sol.k(i, j, m) = t.rows[r][3];
            sol.ktilde(i, j) = t.rows[r][4];
        }
    });
    return sol;
}

void write_timeseries_csv(const std::filesystem::path& path, const SimulationRecord& rec) {
    auto out = open_out(path);
    fmt::memory_buffer buf;
    fmt::format_to(std::back_inserter(buf), "t,norm_joint,norm_u,norm_v,U,V_lyapunov\n");
    for (std::size_t n = 0; n < rec.times.size(); ++n) {
        fmt::format_to(std::back_inserter(buf), "{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},", rec.times[n],
                       rec.joint_norms[n], rec.u_norms[n], rec.v_norms[n], rec.control[n]);
        if (n < rec.lyapunov.size()) fmt::format_to(std::back_inserter(buf), "{:.17g}", rec.lyapunov[n]);
        buf.push_back('\n');
    }
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

void write_snapshot_csv(const std::filesystem::path& path, const EnsembleState& s, const GridSpec& grid) {
    auto out = open_out(path);
    fmt::memory_buffer buf;
    fmt::format_to(std::back_inserter(buf), "x,y,u,v\n");
    for (Index i = 0; i <= grid.nx; ++i)
        for (Index j = 0; j < grid.ny; ++j)
            fmt::format_to(std::back_inserter(buf), "{:.17g},{:.17g},{:.17g},{:.17g}\n", grid.x(i), grid.y(j),
                           s.u(i, j), s.v[i]);
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

EnsembleState read_snapshot_csv(const std::filesystem::path& path, const GridSpec& grid) {
    const CsvTable t = read_csv(path);
    if (t.header != std::vector<std::string>{"x", "y", "u", "v"})
        throw ConfigError("unexpected snapshot header in " + path.string());
    if (static_cast<Index>(t.rows.size()) != (grid.nx + 1) * grid.ny)
        throw DimensionError("snapshot does not match the grid");
    EnsembleState s = EnsembleState::zero(grid);
    Index r = 0;
    for (Index i = 0; i <= grid.nx; ++i)
        for (Index j = 0; j < grid.ny; ++j, ++r) {
            s.u(i, j) = t.rows[r][2];
            s.v[i] = t.rows[r][3];
        }
    return s;
}

std::string snapshot_filename(double t) { return fmt::format("snap_{}.csv", t); }

}  // namespace ebs
