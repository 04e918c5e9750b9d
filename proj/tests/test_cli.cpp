#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <json.hpp>
#include <random>
#include <sstream>

#include "ebs/cli.hpp"
#include "ebs/io.hpp"
#include "ebs/parallel.hpp"

using namespace ebs;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("ebs_test_cli_" + name);
    fs::remove_all(p);
    return p;
}

RunConfig small_config(const std::string& name) {
    RunConfig c;
    c.grid.nx = 20;
    c.grid.ny = 7;
    c.grid.dt = 0.04;
    c.grid.t_final = 0.4;
    c.output_dir = scratch_dir(name);
    return c;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

nlohmann::json read_json(const fs::path& p) {
    std::ifstream in(p);
    return nlohmann::json::parse(in);
}

}  // namespace

TEST_CASE("config parsing") {
    const RunConfig d;
    CHECK(d.model == "toy");
    CHECK(d.mode == "closed");
    CHECK(d.grid.nx == 200);
    CHECK(d.kernel_tol == 1e-10);
    CHECK(d.kernel_max_iter == 60);

    const RunConfig c = parse_config_text(R"(
# comment line
model = pure-transport
nx = 40   # trailing comment
ny=9
dt = 0.01
t_final = 2
mode = open
snapshots = 0, 1.5
initial_condition = gaussian
ic_center = 0.4
scale_xi = 2
seed = 17
)");
    CHECK(c.model == "pure-transport");
    CHECK(c.grid.nx == 40);
    CHECK(c.grid.ny == 9);
    CHECK(c.grid.dt == 0.01);
    CHECK(c.grid.t_final == 2.0);
    CHECK(c.mode == "open");
    CHECK(c.snapshot_times == std::vector<double>{0.0, 1.5});
    CHECK(c.initial.kind == "gaussian");
    CHECK(c.initial.center == 0.4);
    CHECK(c.scaling.xi == 2.0);
    CHECK(c.seed == 17);

    CHECK_THROWS_AS(parse_config_text("colour = red"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("nx = ten"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("nx = 10.5"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("dt 0.1"), ConfigError);
    CHECK_THROWS_AS(parse_real_list("1,,2"), ConfigError);
    CHECK(parse_real_list("0.5,1,2.5") == std::vector<double>{0.5, 1.0, 2.5});
}

TEST_CASE("precheck") {
    RunConfig c = small_config("precheck");
    CHECK_NOTHROW(precheck(c));
    c.grid.dt = 0.1;
    CHECK_THROWS_AS(precheck(c), ConfigError);
    c = small_config("precheck");
    c.mode = "sideways";
    CHECK_THROWS_AS(precheck(c), ConfigError);
    c = small_config("precheck");
    c.snapshot_times = {1.0};
    CHECK_THROWS_AS(precheck(c), ConfigError);
    c = small_config("precheck");
    c.initial.kind = "square";
    CHECK_THROWS_AS(precheck(c), ConfigError);
    c = small_config("precheck");
    c.model = "other";
    CHECK_THROWS_AS(precheck(c), ConfigError);
}

TEST_CASE("kernels command output") {
    RunConfig c = small_config("kernels_tiny");
    c.grid.nx = 2;
    c.grid.ny = 2;
    c.grid.dt = 0.5;
    std::ostringstream log;
    REQUIRE(run_command("kernels", c, log) == exit_ok);
    const CsvTable t = read_csv(c.output_dir / "kernels.csv");
    CHECK(t.header == std::vector<std::string>{"x", "xi", "y", "k", "ktilde"});
    CHECK(t.rows.size() == 12);
    CHECK(t.rows[0][0] == 0.0);
    CHECK(t.rows[11][0] == 1.0);
    CHECK(t.rows[11][1] == 1.0);
    CHECK(t.rows[11][2] == 1.0);
    const auto j = read_json(c.output_dir / "kernels.json");
    CHECK(j["converged"] == true);

    RunConfig z = small_config("kernels_zero");
    z.model = "pure-transport";
    REQUIRE(run_command("kernels", z, log) == exit_ok);
    for (const auto& row : read_csv(z.output_dir / "kernels.csv").rows) {
        CHECK(row[3] == 0.0);
        CHECK(row[4] == 0.0);
    }
    CHECK(read_json(z.output_dir / "kernels.json")["analytic_max_rel_error"].is_null());
}

TEST_CASE("kernel and snapshot files round-trip bitwise") {
    GridSpec g;
    g.nx = 12;
    g.ny = 5;
    const KernelSolution k = solve_backstepping_kernels(toy_model(), g);
    const fs::path dir = scratch_dir("roundtrip");
    fs::create_directories(dir);
    write_kernels_csv(dir / "k.csv", k);
    const KernelSolution back = read_kernels_csv(dir / "k.csv", g);
    CHECK(back.k.values() == k.k.values());
    CHECK(back.ktilde.values() == k.ktilde.values());

    GridSpec other = g;
    other.nx = 13;
    CHECK_THROWS_AS(read_kernels_csv(dir / "k.csv", other), DimensionError);

    std::mt19937_64 rng(3);
    const EnsembleState s = random_smooth_state(g, rng);
    write_snapshot_csv(dir / snapshot_filename(2.5), s, g);
    CHECK(snapshot_filename(2.5) == "snap_2.5.csv");
    const EnsembleState r = read_snapshot_csv(dir / "snap_2.5.csv", g);
    CHECK(r.u == s.u);
    CHECK(r.v == s.v);
}

TEST_CASE("simulate writes series, snapshots and summary") {
    RunConfig c = small_config("simulate");
    c.snapshot_times = {0.0, 0.2};
    std::ostringstream log;
    REQUIRE(run_command("simulate", c, log) == exit_ok);
    const CsvTable t = read_csv(c.output_dir / "timeseries.csv");
    CHECK(t.header == std::vector<std::string>{"t", "norm_joint", "norm_u", "norm_v", "U", "V_lyapunov"});
    CHECK(t.rows.size() == 11);
    CHECK(fs::exists(c.output_dir / "snap_0.csv"));
    CHECK(fs::exists(c.output_dir / "snap_0.2.csv"));
    const auto j = read_json(c.output_dir / "summary.json");
    CHECK(j["mode"] == "closed");
    for (const char* key : {"decay_rate", "max_norm", "final_norm", "max_abs_U"}) CHECK(j.contains(key));

    RunConfig z = small_config("simulate_zero");
    z.initial.kind = "zero";
    z.mode = "open";
    REQUIRE(run_command("simulate", z, log) == exit_ok);
    const CsvTable zt = read_csv(z.output_dir / "timeseries.csv");
    for (const auto& row : zt.rows) {
        CHECK(row[1] == 0.0);
        CHECK(row[2] == 0.0);
        CHECK(row[3] == 0.0);
        CHECK(row[4] == 0.0);
        CHECK(std::isnan(row[5]));
    }
}

TEST_CASE("exit codes") {
    std::ostringstream log;
    RunConfig c = small_config("exit_cfl");
    c.grid.dt = 0.1;
    CHECK(run_command("simulate", c, log) == exit_bad_config);
    CHECK(run_command("verify", c, log) == exit_verify);
    const auto v = read_json(c.output_dir / "verify.json");
    CHECK(v["passed"] == false);

    CHECK(run_command("launch", small_config("exit_unknown"), log) == exit_bad_config);

    RunConfig n = small_config("exit_nonconv");
    n.kernel_max_iter = 2;
    CHECK(run_command("kernels", n, log) == exit_nonconvergence);
    CHECK(read_json(n.output_dir / "kernels.json")["converged"] == false);

    RunConfig d = small_config("exit_div");
    d.mode = "open";
    d.scaling.xi = 1e300;
    CHECK(run_command("simulate", d, log) == exit_divergence);

    RunConfig f = small_config("exit_file");
    f.kernels_file = "/nonexistent/kernels.csv";
    CHECK(run_command("simulate", f, log) == exit_bad_config);
}

TEST_CASE("verify passes on a modest grid") {
    RunConfig c = small_config("verify");
    c.grid.nx = 40;
    c.grid.ny = 21;
    c.grid.dt = 0.02;
    c.grid.t_final = 1.0;
    std::ostringstream log;
    CHECK(run_command("verify", c, log) == exit_ok);
    const auto v = read_json(c.output_dir / "verify.json");
    CHECK(v["passed"] == true);
    for (const auto& check : v["checks"]) CHECK_MESSAGE(check["passed"] == true, check["name"]);
}

TEST_CASE("outputs do not depend on the thread count") {
    std::ostringstream log;
    RunConfig a = small_config("threads_1");
    RunConfig b = small_config("threads_3");
    a.snapshot_times = b.snapshot_times = {0.4};
    set_thread_count(1);
    REQUIRE(run_command("simulate", a, log) == exit_ok);
    set_thread_count(3);
    REQUIRE(run_command("simulate", b, log) == exit_ok);
    set_thread_count(0);
    for (const char* f : {"timeseries.csv", "summary.json", "snap_0.4.csv"})
        CHECK_MESSAGE(slurp(a.output_dir / f) == slurp(b.output_dir / f), f);
}
