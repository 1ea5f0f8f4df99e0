#include "curvelab/cli.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

namespace fs = std::filesystem;
using curvelab::cli::run_cli;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args)
{
    args.insert(args.begin(), "curvelab");
    std::vector<const char*> argv;
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    std::ostringstream out;
    std::ostringstream err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

class TempDir {
public:
    TempDir()
    {
        static int counter = 0;
        path_ = fs::temp_directory_path() / ("curvelab_cli_" + std::to_string(::getpid()) + "_" +
                                             std::to_string(counter++));
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::string write(const std::string& name, const std::string& body) const
    {
        std::ofstream(path_ / name) << body;
        return (path_ / name).string();
    }
    fs::path path() const { return path_; }

private:
    fs::path path_;
};

std::vector<std::vector<double>> csv_rows(const std::string& text)
{
    std::vector<std::vector<double>> rows;
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        std::vector<double> row;
        std::istringstream cells(line);
        std::string cell;
        while (std::getline(cells, cell, ',')) {
            row.push_back(std::stod(cell));
        }
        rows.push_back(row);
    }
    return rows;
}

const char* kFlat = "name = flat\nexponent = 0 0 0\nparams = 0.05\n";
const char* kExponential =
    "# three decay rates\nname = exponential\nexponent = 0 0 0  # flat\nexponent = 0 -1 0\nexponent = 0 -2 0\n"
    "params = 0.03, 0.02, -0.01\n";
const char* kOdd = "name = odd\nexponent = 0 -1 0\nexponent = 0 -3 0\nexponent = 0 -5 0\n";

} // namespace

TEST_SUITE("cli")
{
    TEST_CASE("eval on the flat model")
    {
        TempDir dir;
        const auto r = run({"eval", "--model", dir.write("flat.cfg", kFlat)});
        REQUIRE(r.code == 0);
        CHECK(r.out.rfind("t,yield,logprice,price\n", 0) == 0);
        const auto rows = csv_rows(r.out);
        REQUIRE(rows.size() == 11);
        CHECK(rows[0] == std::vector<double>{0.0, 0.05, 0.0, 1.0});
        for (const auto& row : rows) {
            CHECK(row[1] == 0.05);
            CHECK(std::abs(row[3] - std::exp(-0.05 * row[0])) <= 1e-12);
        }
    }

    TEST_CASE("eval --exact round-trips and --params overrides the file")
    {
        TempDir dir;
        const auto cfg = dir.write("exp.cfg", kExponential);
        const auto r = run({"eval", "--model", cfg, "--grid", "0:3:0.5", "--exact"});
        REQUIRE(r.code == 0);
        const auto rows = csv_rows(r.out);
        REQUIRE(rows.size() == 7);
        const double t = 2.5;
        const double expected = 0.03 + 0.02 * std::exp(-t) - 0.01 * std::exp(-2 * t);
        CHECK(std::abs(rows[5][1] - expected) <= 1e-15);
        // Shortest round-trip output: parsing recovers the printed double bit for bit.
        CHECK(std::stod(curvelab::cli::format_number(rows[5][1], true)) == rows[5][1]);

        const auto o = run({"eval", "--model", cfg, "--params", "0.04,0,0", "--grid", "1:1:1"});
        REQUIRE(o.code == 0);
        CHECK(csv_rows(o.out).at(0).at(1) == 0.04);
    }

    TEST_CASE("classify prints the simple label")
    {
        TempDir dir;
        const auto r = run({"classify", "--model", dir.write("exp.cfg", kExponential)});
        REQUIRE(r.code == 0);
        CHECK(r.out.rfind("Exponential (simple); short=r1+r2+r3; long=r1\n", 0) == 0);
        CHECK(r.out.find("theorem_case: Case1(rho=-1)") != std::string::npos);
    }

    TEST_CASE("flow keeps the flat rate fixed")
    {
        TempDir dir;
        const auto r = run({"flow", "--model", dir.write("flat.cfg", kFlat), "--grid", "-2:5:1"});
        REQUIRE(r.code == 0);
        const auto rows = csv_rows(r.out);
        REQUIRE(rows.size() == 8);
        for (const auto& row : rows) {
            CHECK(row[1] == 0.05);
        }
    }

    TEST_CASE("duration and immunize on a two-payment bundle")
    {
        TempDir dir;
        const auto bundle = dir.write("b.txt", "# two unit payments\n1 1\n2 1\n");
        const auto d = run({"duration", bundle});
        REQUIRE(d.code == 0);
        CHECK(csv_rows(d.out).at(0).at(0) == 1.5);

        const auto imm = run({"immunize", bundle});
        REQUIRE(imm.code == 0);
        const auto rows = csv_rows(imm.out);
        REQUIRE(rows.size() == 3);
        CHECK(rows[1] == std::vector<double>{1.5, -2.0});
    }

    TEST_CASE("price reports the total present value")
    {
        TempDir dir;
        const auto r = run({"price", "--model", dir.write("flat.cfg", kFlat), dir.write("b.txt", "2 1\n")});
        REQUIRE(r.code == 0);
        CHECK(std::abs(csv_rows(r.out).at(0).at(3) - std::exp(-0.1)) <= 1e-12);
        CHECK(r.err.find("total present value") != std::string::npos);
    }

    TEST_CASE("demo-flat-arbitrage table")
    {
        const auto r = run({"demo-flat-arbitrage"});
        REQUIRE(r.code == 0);
        const auto rows = csv_rows(r.out);
        REQUIRE(rows.size() == 10);
        std::size_t argmin = 0;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            CHECK(rows[i][1] >= 0.0);
            if (rows[i][1] < rows[argmin][1]) {
                argmin = i;
            }
        }
        CHECK(rows[argmin][0] == doctest::Approx(0.05));
        CHECK(std::abs(rows[argmin][1]) <= 1e-14);

        const auto later = run({"demo-flat-arbitrage", "--elapsed", "0.5"});
        REQUIRE(later.code == 0);
        for (const auto& row : csv_rows(later.out)) {
            CHECK(row[1] >= -1e-14);
        }
    }

    TEST_CASE("arbitrage on the flat model")
    {
        TempDir dir;
        const auto r = run({"arbitrage", "--model", dir.write("flat.cfg", kFlat)});
        REQUIRE(r.code == 0);
        const auto j = nlohmann::json::parse(r.out);
        CHECK(j["status"] == "arbitrage");
        CHECK(j["support_times"].size() == 3);
        CHECK(j["eigenvalues"][0].get<double>() > 0.0);
        CHECK(j["sphere_min"].get<double>() > 0.0);
    }

    TEST_CASE("arbitrage on the exponential model reports NLA")
    {
        TempDir dir;
        const auto r = run({"arbitrage", "--model", dir.write("exp.cfg", kExponential)});
        REQUIRE(r.code == 0);
        const auto j = nlohmann::json::parse(r.out);
        CHECK(j["status"] == "hypothesis-violated");
        CHECK(j["witness"] == "(0, -1)");
        CHECK(j["nla"]["summary"] == "NLA: Case1(rho=-1)");
        CHECK(j["nla"]["successes"] == 100);
        CHECK(j["nla"]["trials"] == 100);

        const auto v = run({"nla-verify", "--model", dir.write("e.cfg", kExponential), "--trials", "20"});
        REQUIRE(v.code == 0);
        CHECK(nlohmann::json::parse(v.out)["successes"] == 20);
    }

    TEST_CASE("arbitrage --out writes the banded log Hessian")
    {
        TempDir dir;
        const auto out = dir.path() / "arb";
        const auto r = run({"arbitrage", "--model", dir.write("odd.cfg", kOdd), "--out", out.string()});
        REQUIRE(r.code == 0);
        for (const char* f : {"support.csv", "hessian.csv", "log_hessian.csv", "eigenvalues.csv"}) {
            CHECK(fs::exists(out / f));
        }
        std::ifstream in(out / "log_hessian.csv");
        std::stringstream text;
        text << in.rdbuf();
        CHECK(text.str() == "l1,l2,l3\n1,0,1\n0,1,0\n1,0,8\n");
    }

    TEST_CASE("runs are deterministic and honour the seed sources")
    {
        TempDir dir;
        const auto cfg = dir.write("odd.cfg", kOdd);
        const auto a = run({"arbitrage", "--model", cfg, "--exact"});
        const auto b = run({"arbitrage", "--model", cfg, "--exact"});
        REQUIRE(a.code == 0);
        CHECK(a.out == b.out);

        const auto e = dir.write("exp.cfg", kExponential);
        const auto seeded = run({"nla-verify", "--model", e, "--trials", "10", "--seed", "7"});
        ::setenv("CURVELAB_SEED", "7", 1);
        const auto from_env = run({"nla-verify", "--model", e, "--trials", "10"});
        ::setenv("CURVELAB_SEED", "not-a-number", 1);
        const auto bad_env = run({"nla-verify", "--model", e});
        ::unsetenv("CURVELAB_SEED");
        CHECK(seeded.code == 0);
        CHECK(seeded.out == from_env.out);
        CHECK(bad_env.code == 1);
        CHECK(bad_env.err.find("CURVELAB_SEED") != std::string::npos);
    }

    TEST_CASE("exit code 1 names the missing exponent")
    {
        TempDir dir;
        const auto r = run({"eval", "--model", dir.write("bad.cfg", "name = bad\nexponent = 1 -1 0\nparams = 1, 1\n")});
        CHECK(r.code == 1);
        CHECK(r.err.find("missing exponent (0, -1)") != std::string::npos);
        CHECK(r.out.empty());

        CHECK(run({"eval", "--model", dir.write("f.cfg", kFlat), "--params", "0.1,0.2"}).code == 1);
        CHECK(run({"eval"}).code == 1);
        CHECK(run({"no-such-command"}).code == 1);
        CHECK(run({"eval", "--model", (dir.path() / "missing.cfg").string()}).code == 1);
    }

    TEST_CASE("parse errors carry line and column")
    {
        TempDir dir;
        const auto r = run({"eval", "--model", dir.write("p.cfg", "name = x\nexponent = 0 abc 0\n")});
        CHECK(r.code == 1);
        CHECK(r.err.find("p.cfg:2:14:") != std::string::npos);

        const auto b = run({"duration", dir.write("b.txt", "1 1\n\n  0.5 2\n")});
        CHECK(b.code == 1);
        CHECK(b.err.find("b.txt:3:3:") != std::string::npos);
    }

    TEST_CASE("exit code 2 on an ill-conditioned moment system")
    {
        TempDir dir;
        const auto cfg = dir.write("big.cfg",
                                   "name = big\nexponent = 0 -1 0\nexponent = 0 -2.5 0\nexponent = 0 -4.5 0\n"
                                   "exponent = 0 -7 0\nexponent = 0 -11 0\nexponent = 0 -13 0\n");
        const auto r = run({"arbitrage", "--model", cfg});
        CHECK(r.code == 2);
        CHECK(r.err.find("numerical error") != std::string::npos);
    }
}
