#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "starksense/csv_io.hpp"
#include "starksense/qudit_model.hpp"
#include "starksense/sensing.hpp"

using namespace starksense;
using nlohmann::json;

namespace {

std::string binary() {
    const char* path = std::getenv("STARK_SENSE_BIN");
    REQUIRE_MESSAGE(path != nullptr, "STARK_SENSE_BIN must point at the stark-sense binary");
    return path;
}

std::filesystem::path work_dir() {
    auto dir = std::filesystem::temp_directory_path() / "stark_sense_cli_tests";
    std::filesystem::create_directories(dir);
    return dir;
}

// Run the binary with `args`, capture stdout into `stdout_file`, return the
// exit status (-1 if the process did not exit normally).
int run_cli(const std::string& args, const std::string& stdout_file = "") {
    std::string redirect = stdout_file.empty() ? std::string(" > /dev/null")
                                               : " > " + stdout_file;
    const std::string command = binary() + " " + args + redirect + " 2> /dev/null";
    const int raw = std::system(command.c_str());
    if (raw == -1 || !WIFEXITED(raw)) return -1;
    return WEXITSTATUS(raw);
}

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

json slurp_json(const std::filesystem::path& path) { return json::parse(slurp(path)); }

const std::string kCircuit = " --omega-q 4.9553 --gamma 0.4153 ";

}  // namespace

TEST_CASE("levels emits the bare ladder at zero drive and bends with amplitude") {
    const auto out = work_dir() / "levels.csv";
    const int rc = run_cli("levels" + kCircuit +
                               "--set drive.frequency=4.95 "
                               "--set drive.amplitudes=0,0.2,0.5 --out " +
                           out.string());
    CHECK(rc == 0);
    auto table = csv::read_table_file(out.string());
    REQUIRE(table.header.size() == 4);  // a_d_ghz + three lines
    CHECK(table.header[0] == "a_d_ghz");
    CHECK(table.header[1] == "line_k1");
    REQUIRE(table.rows.size() == 3);
    const double bare1 = csv::parse_double(table.rows[0][1], "t");
    const double bare2 = csv::parse_double(table.rows[0][2], "t");
    CHECK(bare1 == doctest::Approx(4.9553 - 0.5 * 0.4153).epsilon(1e-12));
    CHECK(bare2 == doctest::Approx(4.9553 - 0.75 * 0.4153).epsilon(1e-12));
    // lines shift down monotonically with drive amplitude
    const double a1 = csv::parse_double(table.rows[1][1], "t");
    const double a2 = csv::parse_double(table.rows[2][1], "t");
    CHECK(bare1 > a1);
    CHECK(a1 > a2);
}

TEST_CASE("levels order 0 and order 4 differ at strong drive") {
    const auto out0 = work_dir() / "levels_o0.csv";
    const auto out4 = work_dir() / "levels_o4.csv";
    const std::string common = "levels" + kCircuit +
                               "--set drive.frequency=4.95 --set drive.amplitudes=0.5 --out ";
    CHECK(run_cli(common + out0.string() + " --order 0") == 0);
    CHECK(run_cli(common + out4.string() + " --order 4") == 0);
    auto t0 = csv::read_table_file(out0.string());
    auto t4 = csv::read_table_file(out4.string());
    const double line0 = csv::parse_double(t0.rows[0][1], "t");
    const double line4 = csv::parse_double(t4.rows[0][1], "t");
    CHECK(std::abs(line0 - line4) > 1e-6);
}

TEST_CASE("levels runs are byte-identical") {
    const auto out1 = work_dir() / "levels_rep1.csv";
    const auto out2 = work_dir() / "levels_rep2.csv";
    const std::string common = "levels" + kCircuit +
                               "--set drive.frequency=5.05 "
                               "--set drive.amplitude_start=0.1 "
                               "--set drive.amplitude_stop=0.5 "
                               "--set drive.amplitude_step=0.1 --out ";
    CHECK(run_cli(common + out1.string()) == 0);
    CHECK(run_cli(common + out2.string()) == 0);
    const std::string body = slurp(out1);
    CHECK(body == slurp(out2));
    CHECK(csv::read_table_file(out1.string()).rows.size() == 5);  // inclusive range
}

TEST_CASE("sense free mode recovers a forward-computed drive") {
    const qudit::CircuitParams circuit{4.9553, 0.4153};
    const qudit::DriveTone drive{5.05, 0.3};
    const auto [line1, line2] = sensing::forward_observables(circuit, drive, 4);
    const auto out = work_dir() / "sense_free.json";
    const int rc = run_cli("sense" + kCircuit + "--omega01 " + csv::format_double(line1) +
                               " --omega02half " + csv::format_double(line2),
                           out.string());
    CHECK(rc == 0);
    const json estimate = slurp_json(out);
    CHECK(estimate["mode"] == "free");
    CHECK(std::abs(estimate["amplitude_ghz"].get<double>() - 0.3) < 1e-6);
    CHECK(std::abs(estimate["frequency_ghz"].get<double>() - 5.05) < 1e-6);
    CHECK(!estimate["ill_conditioned"].get<bool>());
    CHECK(estimate["frequency_interval_ghz"].is_array());
    const auto interval = estimate["amplitude_interval_ghz"];
    CHECK(interval[0].get<double>() < 0.3);
    CHECK(interval[1].get<double>() > 0.3);
}

TEST_CASE("sense fixed mode uses the known drive frequency") {
    const qudit::CircuitParams circuit{4.9553, 0.4153};
    const qudit::DriveTone drive{5.05, 0.3};
    const auto [line1, line2] = sensing::forward_observables(circuit, drive, 4);
    const auto out = work_dir() / "sense_fixed.json";
    const int rc = run_cli("sense" + kCircuit + "--omega01 " + csv::format_double(line1) +
                               " --omega02half " + csv::format_double(line2) + " --omega-d 5.05",
                           out.string());
    CHECK(rc == 0);
    const json estimate = slurp_json(out);
    CHECK(estimate["mode"] == "fixed");
    CHECK(std::abs(estimate["amplitude_ghz"].get<double>() - 0.3) < 1e-6);
    CHECK(estimate["frequency_interval_ghz"].is_null());
}

TEST_CASE("sense exit codes distinguish failure modes") {
    // Lines shifted upward cannot be produced by any positive-detuning drive.
    CHECK(run_cli("sense" + kCircuit + "--omega01 4.80 --omega02half 4.70") == 3);
    // Unshifted lines give a zero-amplitude, ill-conditioned estimate.
    const auto out = work_dir() / "sense_flat.json";
    CHECK(run_cli("sense" + kCircuit +
                      "--omega01 " + csv::format_double(4.9553 - 0.5 * 0.4153) +
                      " --omega02half " + csv::format_double(4.9553 - 0.75 * 0.4153),
                  out.string()) == 4);
    const json estimate = slurp_json(out);
    CHECK(estimate["ill_conditioned"].get<bool>());
    CHECK(std::abs(estimate["amplitude_ghz"].get<double>()) < 1e-6);
    // Inverted line ordering violates the input contract.
    CHECK(run_cli("sense" + kCircuit + "--omega01 4.60 --omega02half 4.70") == 1);
    // Missing required flag is a usage error.
    CHECK(run_cli("sense" + kCircuit + "--omega01 4.70") != 0);
}

TEST_CASE("calibrate recovers amplitudes and flags malformed rows") {
    const qudit::CircuitParams circuit{4.9553, 0.4153};
    const auto [l1_a, l2_a] = sensing::forward_observables(circuit, {4.95, 0.2}, 4);
    const auto [l1_b, l2_b] = sensing::forward_observables(circuit, {4.95, 0.4}, 4);
    const auto input = work_dir() / "cal_in.csv";
    {
        std::ofstream out(input);
        out << "drive_ghz, source_dbm, omega01_ghz, omega02half_ghz\n";
        out << "4.95, -22, " << csv::format_double(l1_a) << ", " << csv::format_double(l2_a)
            << "\n";
        out << "4.95, -22, not_a_number, 4.62\n";
        out << "4.95, -22, " << csv::format_double(l1_b) << ", " << csv::format_double(l2_b)
            << "\n";
    }
    const auto output = work_dir() / "cal_out.csv";
    const std::string resonator =
        "--set resonator.g=0.0715 --set resonator.q_c=977.0112 "
        "--set resonator.q_i=1e5 --set resonator.omega_r=8.573 ";
    const int rc = run_cli("calibrate" + kCircuit + resonator + "--input " + input.string() +
                           " --out " + output.string());
    CHECK(rc == 5);  // one malformed row
    auto table = csv::read_table_file(output.string());
    REQUIRE(table.header.size() == 6);
    CHECK(table.header[5] == "status");
    REQUIRE(table.rows.size() == 3);
    CHECK(table.rows[0][5] == "ok");
    CHECK(table.rows[2][5] == "ok");
    CHECK(table.rows[1][5] != "ok");
    CHECK(std::isnan(csv::parse_double(table.rows[1][1], "t")));
    CHECK(csv::parse_double(table.rows[0][1], "t") == doctest::Approx(0.2).epsilon(1e-6));
    CHECK(csv::parse_double(table.rows[2][1], "t") == doctest::Approx(0.4).epsilon(1e-6));
    // fixed source power but doubled amplitude: the implied attenuation
    // weakens by exactly 20*log10(2) dB
    const double att_a = csv::parse_double(table.rows[0][4], "t");
    const double att_b = csv::parse_double(table.rows[2][4], "t");
    CHECK(att_b - att_a == doctest::Approx(20.0 * std::log10(2.0)).epsilon(1e-9));

    // empty input: header-only output, success
    const auto empty_in = work_dir() / "cal_empty.csv";
    std::ofstream(empty_in).close();
    const auto empty_out = work_dir() / "cal_empty_out.csv";
    CHECK(run_cli("calibrate" + kCircuit + resonator + "--input " + empty_in.string() +
                  " --out " + empty_out.string()) == 0);
    auto empty_table = csv::read_table_file(empty_out.string());
    CHECK(empty_table.header.size() == 6);
    CHECK(empty_table.rows.empty());

    // wrong header is a config error
    const auto bad_in = work_dir() / "cal_bad.csv";
    {
        std::ofstream out(bad_in);
        out << "freq, power, l1, l2\n1, 2, 3, 4\n";
    }
    CHECK(run_cli("calibrate" + kCircuit + resonator + "--input " + bad_in.string() + " --out " +
                  (work_dir() / "cal_bad_out.csv").string()) == 1);
}

TEST_CASE("spectrum writes a reproducible grid with sidecar and peaks") {
    const auto out1 = work_dir() / "spec1.csv";
    const auto out2 = work_dir() / "spec2.csv";
    const auto peaks = work_dir() / "spec_peaks.csv";
    const std::string common =
        "spectrum" + kCircuit +
        "--set simulation.levels=3 --set simulation.t1=100 --set simulation.t2=100 "
        "--set simulation.t_sim=200 --set drive.frequency=4.95 "
        "--set drive.amplitudes=0,0.2 --set probe.start=4.70 --set probe.stop=4.72 "
        "--set probe.step=0.005 --set probe.amplitude=0.01 ";
    CHECK(run_cli(common + "--set output.peaks=" + peaks.string() + " --out " + out1.string()) ==
          0);
    CHECK(run_cli(common + "--out " + out2.string()) == 0);

    auto table = csv::read_table_file(out1.string());
    REQUIRE(table.header.size() == 3);
    CHECK(table.header[0] == "probe_ghz");
    CHECK(table.header[1] == "a_d_0");
    CHECK(table.header[2] == "a_d_0.2");
    CHECK(table.rows.size() == 5);
    // normalized columns live in [0, 1]
    for (const auto& row : table.rows) {
        for (size_t j = 1; j < row.size(); ++j) {
            const double v = csv::parse_double(row[j], "t");
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
    }
    // repeat run produces identical bytes
    CHECK(slurp(out1) == slurp(out2));

    // sidecar embeds the config and the resolved grid
    const json sidecar = slurp_json(work_dir() / "spec1.json");
    CHECK(sidecar["command"] == "spectrum");
    CHECK(sidecar["config"]["probe.amplitude"] == "0.01");
    CHECK(sidecar["resolved"]["levels"] == 3);
    CHECK(sidecar["resolved"]["normalized"] == true);
    CHECK(sidecar["resolved"]["probe"]["count"] == 5);

    // peaks CSV exists with the documented header (tiny grid: no peaks required)
    auto peak_table = csv::read_table_file(peaks.string());
    REQUIRE(peak_table.header.size() == 4);
    CHECK(peak_table.header[1] == "frequency_ghz");
}

TEST_CASE("convert chains amplitude, photons, and feedline power") {
    const auto out = work_dir() / "convert.json";
    CHECK(run_cli("convert --amplitude 0.9 --g 0.0715", out.string()) == 0);
    json c = slurp_json(out);
    CHECK(c["photons"].get<double>() == doctest::Approx(39.6).epsilon(0.01));

    CHECK(run_cli("convert --photons 39.610738911438226 --g 0.0715", out.string()) == 0);
    c = slurp_json(out);
    CHECK(c["amplitude_ghz"].get<double>() == doctest::Approx(0.9).epsilon(1e-9));

    CHECK(run_cli("convert --amplitude 0.9 --g 0.0715 --q-c 977.0112 --q-i 1e5 --omega-r 8.573",
                  out.string()) == 0);
    c = slurp_json(out);
    const double dbm = c["power_dbm"].get<double>();
    CHECK(run_cli("convert --power-dbm " + csv::format_double(dbm) +
                      " --g 0.0715 --q-c 977.0112 --q-i 1e5 --omega-r 8.573",
                  out.string()) == 0);
    c = slurp_json(out);
    CHECK(c["amplitude_ghz"].get<double>() == doctest::Approx(0.9).epsilon(1e-9));

    // dimensional errors are rejected
    CHECK(run_cli("convert --amplitude 0.9") == 1);
    CHECK(run_cli("convert --power-dbm -90") == 1);
    CHECK(run_cli("convert --photons 10") == 1);
    CHECK(run_cli("convert --amplitude 0.9 --photons 10 --g 0.07") == 1);
    CHECK(run_cli("convert --amplitude 0.9 --g 0.0715 --q-c 977") == 1);
}

TEST_CASE("config file plus flag overrides resolve as documented") {
    const auto cfg_path = work_dir() / "run.cfg";
    {
        std::ofstream out(cfg_path);
        out << "circuit.omega_q = 4.90\n";
        out << "circuit.gamma = 0.40\n";
        out << "drive.frequency = 4.95\n";
        out << "drive.amplitudes = 0\n";
    }
    const auto out = work_dir() / "override.csv";
    // flag overrides the file's omega_q; bare line moves accordingly
    CHECK(run_cli("levels --config " + cfg_path.string() + " --omega-q 4.9553 --out " +
                  out.string()) == 0);
    auto table = csv::read_table_file(out.string());
    const double bare1 = csv::parse_double(table.rows[0][1], "t");
    CHECK(bare1 == doctest::Approx(4.9553 - 0.5 * 0.40).epsilon(1e-12));

    // mixed circuit blocks are rejected
    CHECK(run_cli("levels --config " + cfg_path.string() + " --e-c 0.1977 --out " +
                  out.string()) == 1);
    // no subcommand is a usage error
    CHECK(run_cli("") != 0);
}
