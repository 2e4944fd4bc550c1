#include "doctest.h"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <sys/wait.h>

#include "degschro/io.hpp"

using namespace degschro;
namespace fs = std::filesystem;

namespace {

const fs::path kRoot = fs::temp_directory_path() / "degschro_cli_test";

int run(const std::string& args) {
    const std::string cmd = std::string(DEGSCHRO_CLI) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string dir(const std::string& name) { return (kRoot / name).string(); }

struct Fresh {
    Fresh() {
        fs::remove_all(kRoot);
        fs::create_directories(kRoot);
    }
};

} // namespace

TEST_CASE_FIXTURE(Fresh, "usage errors exit with 2") {
    CHECK(run("simulate --problem P --alpha 1.5 --beta 0.5 --out " + dir("a")) == 2);
    CHECK(run("simulate --problem P --beta 0.5 --out " + dir("a")) == 2);
    CHECK(run("simulate --problem Q --alpha 0.5 --beta 0.5 --out " + dir("a")) == 2);
    CHECK(run("simulate --problem P --alpha 0.5 --beta 1.5 --out " + dir("a")) == 2);
    CHECK(run("simulate --problem P --alpha 0.5 --beta 0.5 --fit-window 3 --out " + dir("a")) == 2);
    CHECK(run("oracle-compare --alpha 0.5 --beta 0.5 --lambda 1e-3 --nx-list 100,x --out " + dir("a")) == 2);
    CHECK(run("nonsense") == 2);
    CHECK(run("--version") == 0);
}

TEST_CASE_FIXTURE(Fresh, "simulate writes trace, fit and manifest, and rerun reproduces the csv") {
    const std::string flags = "--problem P --alpha 0.5 --beta 0.5 --nx 60 --nxi 40 --t-final 10 --dt 0.02 --samples 100";
    REQUIRE(run("simulate " + flags + " --out " + dir("s")) == 0);
    for (auto f : {"trace.csv", "fit.json", "manifest.json"}) CHECK(fs::exists(kRoot / "s" / f));
    const auto t = parse_csv(read_text_file(kRoot / "s" / "trace.csv"));
    CHECK(t.header == std::vector<std::string>{"t", "E", "D", "flux_re", "flux_im"});
    CHECK(t.rows.size() == 101);
    const auto m = read_json_file(kRoot / "s" / "manifest.json");
    CHECK(m.at("command") == "simulate");
    CHECK(m.at("status") == "ok");
    CHECK(m.at("spec").at("alpha") == 0.5);
    CHECK(m.at("params").at("scheme").at("dt") == 0.02);
    CHECK(m.at("outputs").at("trace.csv") == git_blob_hash(read_text_file(kRoot / "s" / "trace.csv")));
    CHECK(read_json_file(kRoot / "s" / "fit.json").at("fit").at("samples").get<int>() > 20);

    REQUIRE(run("rerun " + dir("s") + " --out " + dir("r")) == 0);
    CHECK(read_text_file(kRoot / "s" / "trace.csv") == read_text_file(kRoot / "r" / "trace.csv"));
    CHECK(read_text_file(kRoot / "s" / "fit.json") == read_text_file(kRoot / "r" / "fit.json"));
}

TEST_CASE_FIXTURE(Fresh, "zero initial data gives a zero energy column") {
    REQUIRE(run("simulate --problem Pprime --alpha 0.5 --beta 0.3 --nx 40 --nxi 30 --t-final 1 --dt 0.05 --y0 zero --out " +
                dir("z")) == 0);
    const auto t = parse_csv(read_text_file(kRoot / "z" / "trace.csv"));
    for (const auto& row : t.rows) CHECK(std::stod(row[1]) == 0.0);
    CHECK(read_json_file(kRoot / "z" / "fit.json").at("fit").is_null());
}

TEST_CASE_FIXTURE(Fresh, "config file merges with flags") {
    write_text_file(kRoot / "spec.json", R"({"variant": "P", "alpha": 0.5, "beta": 0.3, "rho": 2.0})");
    REQUIRE(run("scan --config " + dir("spec.json") + " --beta 0.6 --nx 40 --nxi 30 --points 9 --out " + dir("c")) == 0);
    const auto m = read_json_file(kRoot / "c" / "manifest.json");
    CHECK(m.at("spec").at("beta") == 0.6);
    CHECK(m.at("spec").at("rho") == 2.0);
    CHECK(m.at("inputs").at("config") == git_blob_hash(read_text_file(kRoot / "spec.json")));
    const auto fit = read_json_file(kRoot / "c" / "fit.json");
    CHECK(fit.contains("exponent"));
    CHECK(fit.at("theta_theoretical") == 1.0);

    std::string kappa = "x,kappa\n";
    for (int i = 0; i <= 40; ++i) {
        const double x = std::pow(10.0, -8.0 + 8.0 * i / 40.0);
        kappa += fmt_g17(x) + "," + fmt_g17(std::pow(x, 1.5)) + "\n";
    }
    write_text_file(kRoot / "kappa.csv", kappa);
    REQUIRE(run("scan --problem Pprime --kappa " + dir("kappa.csv") + " --beta 0.5 --nx 40 --nxi 30 --points 9 --out " +
                dir("k")) == 0);
    const auto mk = read_json_file(kRoot / "k" / "manifest.json");
    CHECK(mk.at("spec").contains("kappa_samples"));
    CHECK(mk.at("params").at("grid").at("grade") == 2.0);
    CHECK(read_json_file(kRoot / "k" / "fit.json").at("theta_theoretical") == 1.5);
    REQUIRE(run("rerun " + dir("k") + " --out " + dir("k2")) == 0);
    CHECK(read_text_file(kRoot / "k" / "scan.csv") == read_text_file(kRoot / "k2" / "scan.csv"));
}

TEST_CASE_FIXTURE(Fresh, "stub scan reproduces closed-form norms") {
    REQUIRE(run("scan --problem stub --lambda-min 0.01 --lambda-max 10 --points 7 --out " + dir("stub")) == 0);
    const auto t = parse_csv(read_text_file(kRoot / "stub" / "scan.csv"));
    CHECK(t.header == std::vector<std::string>{"lambda", "norm"});
    for (const auto& row : t.rows) {
        const double l = std::stod(row[0]);
        CHECK(std::stod(row[1]) == doctest::Approx(1.0 / std::sqrt(1.0 + l * l)).epsilon(1e-12));
    }
}

TEST_CASE_FIXTURE(Fresh, "verify-kernel exit status follows the threshold") {
    CHECK(run("verify-kernel --beta 0.5 --out " + dir("k")) == 0);
    const auto t = parse_csv(read_text_file(kRoot / "k" / "kernel.csv"));
    CHECK(t.header == std::vector<std::string>{"tau", "quadrature", "exact", "rel_error"});
    CHECK(run("verify-kernel --beta 0.9 --out " + dir("k9")) == 0);
    CHECK(run("verify-kernel --beta 0.5 --nxi 16 --out " + dir("k16")) == 4);
    CHECK(read_json_file(kRoot / "k16" / "manifest.json").at("status") == "threshold_failure");
}

TEST_CASE_FIXTURE(Fresh, "oracle-compare") {
    REQUIRE(run("oracle-compare --alpha 0.5 --beta 0.5 --lambda 1e-3 --nx-list 50,100,200 --out " + dir("o")) == 0);
    const auto t = parse_csv(read_text_file(kRoot / "o" / "oracle.csv"));
    CHECK(t.header == std::vector<std::string>{"lambda", "l2_error", "linf_error", "nx"});
    REQUIRE(t.rows.size() == 3);
    CHECK(std::stod(t.rows[2][1]) < std::stod(t.rows[1][1]));
    CHECK(std::stod(t.rows[1][1]) < std::stod(t.rows[0][1]));
    REQUIRE(run("oracle-compare --alpha 0.5 --beta 0.5 --lambda 1e-3 --nx-list 50,100 --rhs zero --out " + dir("o0")) == 0);
    for (const auto& row : parse_csv(read_text_file(kRoot / "o0" / "oracle.csv")).rows) CHECK(std::stod(row[1]) == 0.0);
}
