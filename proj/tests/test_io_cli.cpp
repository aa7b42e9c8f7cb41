#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gabdiv/cli.hpp"
#include "gabdiv/io.hpp"

using namespace gabdiv;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "gabdiv");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string demo(const char* name) { return std::string(GABDIV_DEMO_DIR) + "/" + name; }

std::string write_temp(const std::string& name, const std::string& text) {
    const auto path = std::filesystem::temp_directory_path() / ("gabdiv_test_" + name);
    std::ofstream(path) << text;
    return path.string();
}

std::vector<std::string> lines(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream is(s);
    for (std::string l; std::getline(is, l);) out.push_back(l);
    return out;
}

} // namespace

TEST(Io, NumbersRoundTrip) {
    for (double v : {0.1, 1.0 / 3.0, 6.02214076e23, -2.5e-300, 0.0}) {
        const std::string s = io::format_number(v);
        EXPECT_EQ(std::stod(s), v) << s;
    }
    EXPECT_EQ(io::format_number(-0.0), "0");
    EXPECT_EQ(io::format_number(INFINITY), "inf");
    EXPECT_EQ(io::format_number(-INFINITY), "-inf");
    EXPECT_EQ(io::format_number(NAN), "nan");
}

TEST(Io, MeasureRoundTrip) {
    const Measure m = Measure::create({"x", "y", "z"}, {0.1, 0.2, 0.3}, {1.0, 2.0, 0.5});
    const Measure back = io::measure_from_json(io::parse(io::dump(io::to_json(m))));
    EXPECT_EQ(back.labels(), m.labels());
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(back.density(i), m.density(i));
        EXPECT_EQ(back.weight(i), m.weight(i));
    }
}

TEST(Io, MeasureErrors) {
    EXPECT_THROW(io::measure_from_json(io::parse(R"({"labels": ["a"]})")), Error);
    EXPECT_THROW(io::measure_from_json(io::parse(R"({"density": [0.9, 0.9]})")), Error);
    EXPECT_THROW(io::measure_from_json(io::parse(R"({"density": ["x"]})")), Error);
    EXPECT_THROW(io::parse("{"), Error);
    EXPECT_THROW(io::read_json("/nonexistent/file.json"), Error);
}

TEST(Io, ProblemParsing) {
    const MaxEntProblem pr = io::read_problem(demo("problem.json"));
    EXPECT_EQ(pr.n, 2u);
    EXPECT_EQ(pr.g.rows(), 1);
    EXPECT_EQ(pr.G(0), 0.7);
    EXPECT_THROW(io::problem_from_json(io::parse(R"({"n": 3, "g": [[0, 1]], "G": [0.5], "alpha": 1, "beta": 1})")),
                 Error);
    EXPECT_THROW(io::problem_from_json(io::parse(R"({"n": 0, "g": [], "G": [], "alpha": 1, "beta": 1})")), Error);
}

TEST(Io, CurveCsvHeader) {
    const std::string csv = io::curve_csv({{0.0, 0.0}, {0.5, 0.25}});
    EXPECT_EQ(lines(csv)[0], "p,entropy_scaled");
    EXPECT_EQ(lines(csv)[2], "0.5,0.25");
}

TEST(Cli, DivOfMeasureWithItselfIsZero) {
    const auto r = run_cli({"div", demo("p.json"), demo("p.json"), "--alpha", "1", "--beta", "1", "--psi", "identity"});
    EXPECT_EQ(r.code, 0) << r.err;
    const auto j = io::parse(r.out);
    EXPECT_EQ(j.at("value").get<double>(), 0.0);
    EXPECT_EQ(j.at("regime").get<std::string>(), "General");
}

TEST(Cli, DivMatchesLibraryBitForBit) {
    const auto r = run_cli({"div", demo("p.json"), demo("q.json"), "--alpha", "0.7", "--beta", "-0.2", "--psi", "power:2"});
    ASSERT_EQ(r.code, 0) << r.err;
    const double lib =
        gab(io::read_measure(demo("p.json")), io::read_measure(demo("q.json")), Hyper(0.7, -0.2), builtin("power", {2.0}))
            .value;
    EXPECT_EQ(io::parse(r.out).at("value").get<double>(), lib);
}

TEST(Cli, Entropy) {
    const auto r = run_cli({"entropy", demo("p.json"), "--psi", "log"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NEAR(io::parse(r.out).at("scaled_value").get<double>(), std::log(2.0), 1e-15);
}

TEST(Cli, ValidatePsiExitCodes) {
    const auto ok = run_cli({"validate-psi", "--psi", "log", "--alpha", "0.5", "--beta", "0.5"});
    EXPECT_EQ(ok.code, 0);
    EXPECT_EQ(io::parse(ok.out).at("verdict").get<std::string>(), "Valid");
    const auto mix = run_cli({"validate-psi", "--psi", "lin:1*identity+1*log", "--alpha", "1", "--beta", "1"});
    EXPECT_EQ(mix.code, 0);
    const auto inc = run_cli({"validate-psi", "--psi", "cdf-exp", "--alpha", "0.5", "--beta", "0.5", "--budget", "300"});
    EXPECT_EQ(inc.code, 2);
    EXPECT_TRUE(io::parse(inc.out).at("witness").is_null());
}

TEST(Cli, ValidatePsiInvalid) {
    // psi(x) = -1/x, so Psi(t) = -e^{-t} is concave.
    const auto r = run_cli({"validate-psi", "--psi", "power:-1", "--alpha", "1", "--beta", "1"});
    EXPECT_EQ(r.code, 1);
    const auto j = io::parse(r.out);
    EXPECT_EQ(j.at("verdict").get<std::string>(), "Invalid");
    EXPECT_LT(j.at("witness").at("value").get<double>(), -1e-8);
}

TEST(Cli, Maxent) {
    const auto r = run_cli({"maxent", demo("problem.json"), "--no-trace"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = io::parse(r.out);
    EXPECT_NEAR(j.at("q").at(0).get<double>(), 0.3, 1e-10);
    EXPECT_NEAR(j.at("q").at(1).get<double>(), 0.7, 1e-10);
    EXPECT_TRUE(j.at("trace").empty());
}

TEST(Cli, MaxentInfeasibleIsDataError) {
    const std::string path = write_temp("infeasible.json", R"({"n": 2, "g": [[0, 1]], "G": [1.5], "alpha": 1, "beta": 1})");
    EXPECT_EQ(run_cli({"maxent", path}).code, 65);
}

TEST(Cli, CurveRowsAndSymmetry) {
    const auto r = run_cli({"curve", "--psi", "log", "--alpha", "1", "--beta", "1", "--grid", "101"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto ls = lines(r.out);
    ASSERT_EQ(ls.size(), 102u);
    EXPECT_EQ(ls[0], "p,entropy_scaled");
    std::vector<double> v;
    for (std::size_t i = 1; i < ls.size(); ++i) v.push_back(std::stod(ls[i].substr(ls[i].find(',') + 1)));
    for (std::size_t i = 0; i < v.size(); ++i) EXPECT_NEAR(v[i], v[v.size() - 1 - i], 1e-12);
    const auto j = run_cli({"curve", "--grid", "5", "--format", "json"});
    EXPECT_EQ(io::parse(j.out).size(), 5u);
}

TEST(Cli, UsageErrors) {
    EXPECT_EQ(run_cli({}).code, 64);
    EXPECT_EQ(run_cli({"frobnicate"}).code, 64);
    EXPECT_EQ(run_cli({"div", demo("p.json")}).code, 64);
    EXPECT_EQ(run_cli({"curve", "--format", "xml"}).code, 64);
    EXPECT_EQ(run_cli({"--help"}).code, 0);
}

TEST(Cli, DataErrors) {
    EXPECT_EQ(run_cli({"div", "/nonexistent.json", demo("q.json")}).code, 65);
    EXPECT_EQ(run_cli({"div", demo("p.json"), demo("q.json"), "--psi", "nope"}).code, 65);
    const std::string three = write_temp("three.json", R"({"density": [0.2, 0.3, 0.5]})");
    EXPECT_EQ(run_cli({"div", demo("p.json"), three}).code, 65);
    const std::string zero = write_temp("zero.json", R"({"density": [0.0, 1.0]})");
    EXPECT_EQ(run_cli({"div", zero, demo("q.json"), "--alpha", "-1", "--beta", "2"}).code, 65);
}

TEST(Cli, CheckPropertiesIsDeterministic) {
    const auto a = run_cli({"check-properties", "--seed", "7", "--trials", "20"});
    const auto b = run_cli({"check-properties", "--seed", "7", "--trials", "20"});
    EXPECT_EQ(a.code, 0) << a.out;
    EXPECT_EQ(a.out, b.out);
    const auto c = run_cli({"check-properties", "--seed", "8", "--trials", "20"});
    EXPECT_NE(a.out, c.out);
    const auto j = run_cli({"check-properties", "--trials", "5", "--suite", "identity", "--format", "json"});
    EXPECT_TRUE(io::parse(j.out).at("passed").get<bool>());
}

TEST(Cli, SeedFromEnvironment) {
    ::setenv("GABDIV_SEED", "7", 1);
    const auto env = run_cli({"check-properties", "--trials", "20", "--suite", "structural"});
    ::unsetenv("GABDIV_SEED");
    const auto flag = run_cli({"check-properties", "--seed", "7", "--trials", "20", "--suite", "structural"});
    EXPECT_EQ(env.out, flag.out);
}
