#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "nemaq/snapshot.hpp"
#include "nemaq/spectral.hpp"

using namespace nemaq;
namespace fs = std::filesystem;

namespace {

struct CmdResult {
    int exit_code = -1;
    std::string output;  // stdout and stderr combined
};

CmdResult run_cli(const std::string& args) {
    const char* bin = std::getenv("NEMAQ_BIN");
    REQUIRE(bin != nullptr);
    const std::string out_path = "cli_scratch/last_output.txt";
    const std::string cmd = std::string(bin) + " " + args + " > " + out_path + " 2>&1";
    const int status = std::system(cmd.c_str());
    CmdResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(out_path);
    std::stringstream ss;
    ss << in.rdbuf();
    r.output = ss.str();
    return r;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::trunc);
    out << content;
    REQUIRE(out.good());
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string line;
    while (std::getline(ss, line)) out.push_back(line);
    return out;
}

struct Scratch {
    Scratch() { fs::create_directories("cli_scratch"); }
};
const Scratch scratch_once;

std::string base_config(const std::string& outdir, const std::string& extra = "") {
    return "[grid]\nn = 8\n[solver]\ndt = 2e-3\nt_end = 0.04\nsnapshot_every = 5\n"
           "[initial]\nkind = random\nseed = 9\n[output]\ndirectory = " +
           outdir + "\n" + extra;
}

}  // namespace

TEST_CASE("usage errors exit with status 1 and help with 0") {
    CHECK(run_cli("").exit_code == 1);
    CHECK(run_cli("--help").exit_code == 0);
    CHECK(run_cli("simulate").exit_code == 1);           // missing --config
    CHECK(run_cli("simulate --bogus x").exit_code == 1);
    CHECK(run_cli("simulate --config cli_scratch/absent.ini").exit_code == 1);
    write_file("cli_scratch/bad.ini", "[params]\nc = -1\n");
    const CmdResult r = run_cli("verify --config cli_scratch/bad.ini");
    CHECK(r.exit_code == 1);
    CHECK(r.output.find("c must be positive") != std::string::npos);
}

TEST_CASE("simulate writes the documented energy table deterministically") {
    write_file("cli_scratch/sim.ini", base_config("cli_scratch/sim_out"));
    const CmdResult r1 = run_cli("simulate --config cli_scratch/sim.ini");
    CHECK(r1.exit_code == 0);
    CHECK(r1.output.find("# nemaq version=0.1.0 config_hash=") != std::string::npos);
    CHECK(r1.output.find("seed=9") != std::string::npos);

    const std::string csv = slurp("cli_scratch/sim_out/energy.csv");
    const std::vector<std::string> ls = lines_of(csv);
    REQUIRE(ls.size() >= 3);
    CHECK(ls[0].rfind("# nemaq version=0.1.0 config_hash=", 0) == 0);
    CHECK(ls[1] ==
          "t,kinetic,elastic_L1,elastic_L23,elastic_L4_cross,bulk,total,"
          "diss_viscous,diss_rotational,balance_residual");
    // 0.04 / (5 * 2e-3) = 4 interior reports plus the initial row.
    CHECK(ls.size() == 2 + 5);
    CHECK(ls[2].rfind("0,", 0) == 0);
    CHECK(ls[2].substr(ls[2].rfind(',') + 1) == "0");  // first residual is zero

    const CmdResult r2 = run_cli("simulate --config cli_scratch/sim.ini");
    CHECK(r2.exit_code == 0);
    CHECK(slurp("cli_scratch/sim_out/energy.csv") == csv);
}

TEST_CASE("simulate with t_end zero emits exactly one row") {
    write_file("cli_scratch/t0.ini",
               "[grid]\nn = 8\n[solver]\ndt = 1e-3\nt_end = 0\n"
               "[initial]\nkind = zero\n[output]\ndirectory = cli_scratch/t0_out\n");
    const CmdResult r = run_cli("simulate --config cli_scratch/t0.ini");
    CHECK(r.exit_code == 0);
    const std::vector<std::string> ls = lines_of(slurp("cli_scratch/t0_out/energy.csv"));
    CHECK(ls.size() == 3);  // reproducibility line, header, one row
}

TEST_CASE("simulate can emit loadable state snapshots") {
    write_file("cli_scratch/snap.ini", base_config("cli_scratch/snap_out", "snapshots = true\n"));
    CHECK(run_cli("simulate --config cli_scratch/snap.ini").exit_code == 0);
    SpectralGrid g(8, kTwoPi);
    const SimState s0 = load_state("cli_scratch/snap_out/state_000000.qtf", g);
    CHECK(s0.time == 0.0);
    const SnapshotHeader h = peek_snapshot("cli_scratch/snap_out/state_000004.qtf");
    CHECK(h.ncomp == 8);
    CHECK(h.time > 0.0);
}

TEST_CASE("simulate reports blow-up with exit status 3 and flushes partial rows") {
    // With a vanishing quartic coefficient the cubic bulk term drives the
    // uniaxial order parameter to infinity in finite time.
    write_file("cli_scratch/blow.ini",
               "[grid]\nn = 8\n[params]\na = 0\nb = 30\nc = 1e-12\n"
               "[solver]\ndt = 2e-3\nt_end = 0.3\nsnapshot_every = 1\n"
               "[initial]\nkind = uniaxial\ns = 1\n"
               "[output]\ndirectory = cli_scratch/blow_out\n");
    const CmdResult r = run_cli("simulate --config cli_scratch/blow.ini");
    CHECK(r.exit_code == 3);
    CHECK(r.output.find("blow-up halt at t=") != std::string::npos);
    const std::vector<std::string> ls = lines_of(slurp("cli_scratch/blow_out/energy.csv"));
    CHECK(ls.size() >= 3);
}

TEST_CASE("verify passes on band-limited generated data") {
    write_file("cli_scratch/ver.ini", base_config("cli_scratch/ver_out"));
    const CmdResult r = run_cli("verify --config cli_scratch/ver.ini");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find(" 0 failures") != std::string::npos);
    CHECK(r.output.find("[FAIL]") == std::string::npos);
    const std::vector<std::string> ls = lines_of(slurp("cli_scratch/ver_out/verify.csv"));
    REQUIRE(ls.size() >= 3);
    CHECK(ls[1] == "name,value,scale,relative_residual,threshold,status");
    for (std::size_t i = 2; i < ls.size(); ++i)
        if (ls[i].rfind('#', 0) != 0) CHECK(ls[i].substr(ls[i].rfind(',') + 1) == "pass");
}

TEST_CASE("verify flags an aliased file state with exit status 2") {
    SpectralGrid g(8, kTwoPi);
    SimState rough;
    rough.u = random_vector_field(g, 2.0, 7700, true, false);
    rough.q = random_qtensor_field(g, 2.0, 7701, false);
    for (double& v : rough.u.data) v *= 1.5;
    save_state("cli_scratch/rough.qtf", g, rough);
    write_file("cli_scratch/rough.ini",
               "[grid]\nn = 8\n[initial]\nkind = file\npath = cli_scratch/rough.qtf\n"
               "[output]\ndirectory = cli_scratch/rough_out\n");
    const CmdResult r = run_cli("verify --config cli_scratch/rough.ini");
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("[FAIL]") != std::string::npos);
}

TEST_CASE("verify rejects a file state with nonzero divergence") {
    SpectralGrid g(8, kTwoPi);
    SimState bad;
    bad.u = VectorField3(g.npoints());
    bad.q = QTensorField(g.npoints());
    for (int i3 = 0; i3 < g.n3(); ++i3)
        for (int i2 = 0; i2 < g.n2(); ++i2)
            for (int i1 = 0; i1 < g.n1(); ++i1)
                bad.u.comp(0)[g.pidx(i1, i2, i3)] = std::sin(kTwoPi * i1 / g.n1());
    save_state("cli_scratch/div.qtf", g, bad);
    write_file("cli_scratch/div.ini",
               "[grid]\nn = 8\n[initial]\nkind = file\npath = cli_scratch/div.qtf\n"
               "[output]\ndirectory = cli_scratch/div_out\n");
    CHECK(run_cli("verify --config cli_scratch/div.ini").exit_code == 1);
}

TEST_CASE("twin with zero perturbation reports an all-zero separation column") {
    write_file("cli_scratch/twin0.ini", base_config("cli_scratch/twin0_out"));
    const CmdResult r = run_cli("twin --config cli_scratch/twin0.ini --perturb-scale 0");
    CHECK(r.exit_code == 0);
    const std::vector<std::string> ls = lines_of(slurp("cli_scratch/twin0_out/twin.csv"));
    REQUIRE(ls.size() >= 4);
    CHECK(ls[1] == "t,separation,diss_velocity,diss_qtensor");
    int data_rows = 0;
    for (std::size_t i = 2; i < ls.size(); ++i) {
        if (ls[i].rfind('#', 0) == 0) continue;
        ++data_rows;
        const std::size_t c1 = ls[i].find(',');
        const std::size_t c2 = ls[i].find(',', c1 + 1);
        CHECK(ls[i].substr(c1 + 1, c2 - c1 - 1) == "0");
    }
    CHECK(data_rows >= 2);
    CHECK(ls.back().rfind("# c_fit=0 ", 0) == 0);
}

TEST_CASE("twin with a real perturbation fits a stable separation rate") {
    write_file("cli_scratch/twin.ini", base_config("cli_scratch/twin_out"));
    const CmdResult r =
        run_cli("twin --config cli_scratch/twin.ini --perturb-scale 1e-3 --perturb-seed 5");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("perturb_seed=5") != std::string::npos);
    CHECK(r.output.find("stable=1") != std::string::npos);
    CHECK(r.output.find("bound_satisfied=1") != std::string::npos);
    CHECK(r.output.find("degenerate=0") != std::string::npos);
    CHECK(run_cli("twin --config cli_scratch/twin.ini --perturb-scale -1").exit_code == 1);
}

TEST_CASE("sweep validates its viscosity list and tabulates the gauge") {
    write_file("cli_scratch/sweep.ini",
               "[grid]\nn = 8\n[solver]\nscheme = imex\ndt = 5e-3\nt_end = 0.2\n"
               "snapshot_every = 4\n[initial]\nkind = random\nseed = 9\n"
               "[output]\ndirectory = cli_scratch/sweep_out\n");
    CHECK(run_cli("sweep --config cli_scratch/sweep.ini --mu 1,2").exit_code == 1);
    CHECK(run_cli("sweep --config cli_scratch/sweep.ini --mu 2,1,3").exit_code == 1);
    const CmdResult r = run_cli("sweep --config cli_scratch/sweep.ini --mu 0.5,1,2,4");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("monotone non-increasing") != std::string::npos);
    const std::vector<std::string> ls = lines_of(slurp("cli_scratch/sweep_out/sweep.csv"));
    REQUIRE(ls.size() == 6);
    CHECK(ls[1] == "mu,sup_shifted,blew_up,blowup_time");
    CHECK(ls[2].rfind("0.5,", 0) == 0);
    CHECK(ls[5].rfind("4,", 0) == 0);
}

TEST_CASE("sweep reports blow-ups with exit status 3") {
    write_file("cli_scratch/sweepblow.ini",
               "[grid]\nn = 8\n[params]\na = 0\nb = 30\nc = 1e-12\n"
               "[solver]\ndt = 2e-3\nt_end = 0.3\nsnapshot_every = 10\n"
               "[initial]\nkind = uniaxial\ns = 1\n"
               "[output]\ndirectory = cli_scratch/sweepblow_out\n");
    const CmdResult r = run_cli("sweep --config cli_scratch/sweepblow.ini --mu 1,2,4");
    CHECK(r.exit_code == 3);
    const std::vector<std::string> ls = lines_of(slurp("cli_scratch/sweepblow_out/sweep.csv"));
    REQUIRE(ls.size() == 5);
    for (std::size_t i = 2; i < ls.size(); ++i) {
        std::stringstream ss(ls[i]);
        std::string mu, sup, blew;
        std::getline(ss, mu, ',');
        std::getline(ss, sup, ',');
        std::getline(ss, blew, ',');
        CHECK(blew == "1");
    }
}
