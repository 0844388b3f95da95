#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cli_app.hpp"
#include "thermocurv/catalog.hpp"

namespace thermocurv {
namespace {

using nlohmann::json;

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string fixture(const std::string& name) { return std::string(THERMOCURV_FIXTURES) + "/" + name; }

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    for (std::size_t pos; (pos = text.find("\r\n", start)) != std::string::npos; start = pos + 2)
        lines.push_back(text.substr(start, pos - start));
    EXPECT_EQ(start, text.size()) << "trailing text without CRLF";
    return lines;
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::stringstream in(line);
    std::string f;
    while (std::getline(in, f, ',')) fields.push_back(f);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

/// CSV rows keyed by column name.
std::vector<std::map<std::string, std::string>> parse_csv(const std::string& text) {
    const auto lines = split_lines(text);
    std::vector<std::map<std::string, std::string>> rows;
    if (lines.empty()) return rows;
    const auto header = split_fields(lines[0]);
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto f = split_fields(lines[i]);
        EXPECT_EQ(f.size(), header.size()) << lines[i];
        std::map<std::string, std::string> row;
        for (std::size_t k = 0; k < std::min(f.size(), header.size()); ++k) row[header[k]] = f[k];
        rows.push_back(row);
    }
    return rows;
}

double num(const std::map<std::string, std::string>& row, const std::string& col) { return std::stod(row.at(col)); }

std::filesystem::path temp_path(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "thermocurv_cli_test";
    std::filesystem::create_directories(dir);
    return dir / name;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

TEST(CliEval, ReissnerNordstromPoint) {
    const auto r = run({"eval", "--catalog", "reissner-nordstrom", "--at", "S=1,Q=0.5"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto rows = parse_csv(r.out);
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_NEAR(num(rows[0], "RM"), 32.0 / 9.0, 1e-12);
    EXPECT_NEAR(num(rows[0], "RF"), 64.0, 1e-10);
    EXPECT_NEAR(num(rows[0], "T"), 0.1875, 1e-15);
    EXPECT_NEAR(num(rows[0], "CX"), -6.0, 1e-12);
    EXPECT_EQ(rows[0].at("flags"), "");
}

TEST(CliEval, GenericCoordinateNamesAndJson) {
    const auto r = run({"eval", "--catalog", "kerr", "--at", "X=1,S=25", "--format", "json"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = json::parse(r.out);
    EXPECT_LT(std::abs(j["RM"].get<double>()), 1e-12);
    EXPECT_NEAR(j["RF"].get<double>(), kerr().reference_rf({25.0, 1.0}), 1e-9);
    EXPECT_EQ(j["coords"]["X"], "J");
    EXPECT_TRUE(j["flags"].empty());
}

TEST(CliEval, NonFiniteValuesBecomeNullInJson) {
    const auto r = run({"eval", "--catalog", "reissner-nordstrom", "--at", "S=4,Q=2", "--format", "json"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = json::parse(r.out);
    EXPECT_TRUE(j["RM"].is_null());
    EXPECT_NE(std::find(j["flags"].begin(), j["flags"].end(), "div:RM"), j["flags"].end());
}

TEST(CliErrors, UsageAndDomainProblemsExitWithTwo) {
    const std::vector<std::vector<std::string>> cases = {
        {},
        {"bogus"},
        {"eval", "--catalog", "kerr"},
        {"eval", "--catalog", "kerr", "--at", "S=1,Z=1"},
        {"eval", "--catalog", "kerr", "--at", "S=1"},
        {"eval", "--catalog", "kerr", "--at", "S=abc,J=1"},
        {"eval", "--catalog", "kerr", "--at", "S=-1,J=1"},
        {"eval", "--catalog", "no-such-potential", "--at", "S=1,X=1"},
        {"eval", "--catalog", "kerr", "--potential-file", fixture("rn.json"), "--at", "S=1,J=1"},
        {"eval", "--catalog", "kerr", "--at", "S=25,J=1", "--format", "xml"},
        {"scan", "--catalog", "kerr", "--s-range", "2:1:3"},
        {"scan", "--catalog", "kerr", "--s-range", "0:1:3:log"},
        {"scan", "--catalog", "kerr", "--s-range", "1:2:0"},
        {"scan", "--potential-file", fixture("quadratic.json")},
        {"scan", "--potential-file", fixture("missing.json"), "--s-range", "1:2:2", "--x-range", "1:2:2"},
        {"davies", "--catalog", "reissner-nordstrom"},
        {"davies", "--catalog", "reissner-nordstrom", "--fixed", "Q=1", "--which", "CZ"},
    };
    for (const auto& args : cases) {
        const auto r = run(args);
        std::string joined;
        for (const auto& a : args) joined += a + " ";
        EXPECT_EQ(r.code, 2) << joined;
        EXPECT_FALSE(r.err.empty()) << joined;
    }
    EXPECT_EQ(run({"--help"}).code, 0);
}

TEST(CliErrors, MalformedPotentialFileReportsPosition) {
    const auto r = run({"scan", "--potential-file", fixture("bad.json"), "--s-range", "1:2:3", "--x-range", "1:2:3"});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("position"), std::string::npos) << r.err;
    EXPECT_TRUE(r.out.empty());
}

TEST(CliScan, QuadraticGridIsFlat) {
    const auto r =
        run({"scan", "--potential-file", fixture("quadratic.json"), "--s-range", "1:2:3", "--x-range", "1:2:3"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto rows = parse_csv(r.out);
    ASSERT_EQ(rows.size(), 9u);
    for (const auto& row : rows) {
        EXPECT_EQ(num(row, "RM"), 0.0);
        EXPECT_EQ(num(row, "RF"), 0.0);
        EXPECT_EQ(row.at("flags"), "");
    }
    // The first coordinate is the outer loop.
    EXPECT_EQ(num(rows[1], "S"), 1.0);
    EXPECT_EQ(num(rows[1], "X"), 1.5);
    EXPECT_EQ(num(rows[3], "S"), 1.5);
}

TEST(CliScan, HeaderAndLineEndings) {
    const auto r = run({"scan", "--catalog", "quadratic-toy", "--s-range", "1:2:2", "--x-range", "1:2:2"});
    ASSERT_EQ(r.code, 0);
    EXPECT_EQ(r.out.substr(0, r.out.find("\r\n")),
              "S,X,T,Y,M_SS,M_SX,M_XX,detGM,detGF,RM,RF,CX,CY,alpha,kappaT,kappaS,gamma,flags");
    EXPECT_EQ(split_lines(r.out).size(), 5u);
    for (std::size_t i = 0; i < r.out.size(); ++i) {
        if (r.out[i] == '\n') {
            EXPECT_EQ(r.out[i - 1], '\r');
        }
    }
}

TEST(CliScan, NumbersRoundTrip) {
    const auto r = run({"scan", "--catalog", "reissner-nordstrom", "--s-range", "0.5:10:7:log", "--x-range", "0.05:0.4:3"});
    ASSERT_EQ(r.code, 0);
    const auto rn = reissner_nordstrom();
    for (const auto& row : parse_csv(r.out)) {
        const StatePoint p{num(row, "S"), num(row, "X")};
        EXPECT_EQ(num(row, "T"), eval_jet(rn.spec, p).d1[0]);
    }
}

TEST(CliScan, FlagsAcrossTheDaviesLine) {
    // Q = 1 from S = 2 to 4 crosses S = 3 Q^2.
    const auto r = run({"scan", "--catalog", "reissner-nordstrom", "--s-range", "2:4:5", "--x-range", "1:2:2"});
    ASSERT_EQ(r.code, 0);
    std::vector<double> cx;
    bool saw_div = false;
    for (const auto& row : parse_csv(r.out)) {
        if (num(row, "X") != 1.0) continue;
        cx.push_back(num(row, "CX"));
        if (row.at("flags").find("div:CX") != std::string::npos) {
            saw_div = true;
            EXPECT_EQ(num(row, "S"), 3.0);
            EXPECT_NE(row.at("flags").find("div:RF"), std::string::npos);
        }
    }
    ASSERT_EQ(cx.size(), 5u);
    EXPECT_TRUE(saw_div);
    EXPECT_GT(cx.front(), 0.0);
    EXPECT_LT(cx.back(), 0.0);
}

TEST(CliScan, DeterministicAcrossRunsAndThreadCounts) {
    const std::vector<std::string> base = {"scan", "--catalog", "kerr", "--s-range", "2.5:25:40:log", "--x-range",
                                           "0.1:1:25:log"};
    auto with_threads = [&](const char* n) {
        auto args = base;
        args.insert(args.end(), {"--threads", n});
        return run(args);
    };
    const auto a = with_threads("1"), b = with_threads("4"), c = with_threads("4");
    ASSERT_EQ(a.code, 0);
    EXPECT_EQ(a.out, b.out);
    EXPECT_EQ(b.out, c.out);
    EXPECT_EQ(parse_csv(a.out).size(), 1000u);
}

TEST(CliScan, OutputFileAndSidecar) {
    const auto path = temp_path("scan.csv");
    const auto r = run({"scan", "--catalog", "reissner-nordstrom", "--out", path.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(r.out.empty());
    const auto rows = parse_csv(slurp(path));
    EXPECT_EQ(rows.size(), 400u);  // default grid
    const auto meta = json::parse(slurp(path.string() + ".meta.json"));
    EXPECT_EQ(meta["coords"]["X"], "Q");
    EXPECT_EQ(meta["potential"], "reissner-nordstrom");
    EXPECT_EQ(meta["columns"].size(), 18u);
}

TEST(CliScan, JsonFormat) {
    const auto r = run({"scan", "--catalog", "quadratic-toy", "--s-range", "1:2:2", "--x-range", "1:2:3", "--format", "json"});
    ASSERT_EQ(r.code, 0);
    const auto j = json::parse(r.out);
    ASSERT_EQ(j["rows"].size(), 6u);
    EXPECT_EQ(j["rows"][0]["RF"].get<double>(), 0.0);
}

TEST(CliEnvironment, SingularEpsilonOverride) {
    // Near S = 3 on Q = 1 the C_X denominator is ~1e-7: singular only for a
    // large epsilon.
    const std::vector<std::string> args = {"eval", "--catalog", "reissner-nordstrom", "--at", "S=3.00001,Q=1"};
    ::unsetenv("THERMOCURV_EPS");
    EXPECT_EQ(parse_csv(run(args).out)[0].at("flags"), "");
    ::setenv("THERMOCURV_EPS", "1e-3", 1);
    const auto flagged = run(args);
    EXPECT_NE(parse_csv(flagged.out)[0].at("flags").find("div:CX"), std::string::npos);
    ::setenv("THERMOCURV_EPS", "not-a-number", 1);
    EXPECT_EQ(run(args).code, 2);
    ::setenv("THERMOCURV_EPS", "-1", 1);
    EXPECT_EQ(run(args).code, 2);
    ::unsetenv("THERMOCURV_EPS");
}

TEST(CliDavies, ReissnerNordstromLine) {
    const auto r = run({"davies", "--catalog", "reissner-nordstrom", "--fixed", "Q=1", "--format", "json"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = json::parse(r.out);
    EXPECT_EQ(j["which"], "CX");
    ASSERT_EQ(j["points"].size(), 1u);
    const auto& p = j["points"][0];
    EXPECT_NEAR(p["S"].get<double>(), 3.0, 1e-9);
    EXPECT_EQ(p["fit_RF"]["outcome"], "divergent");
    EXPECT_NEAR(p["fit_RF"]["slope"].get<double>(), -2.0, 0.02);
    EXPECT_EQ(p["fit_RM"]["outcome"], "finite-limit");
    EXPECT_NEAR(p["fit_RM"]["value"].get<double>(), 1.5 * std::sqrt(3.0), 1e-6);
    ASSERT_EQ(j["turning_points"].size(), 1u);
    EXPECT_NEAR(j["turning_points"][0].get<double>(), 3.0, 1e-6);
}

TEST(CliDavies, KerrLineAndQuadraticNone) {
    const auto k = run({"davies", "--catalog", "kerr", "--fixed", "J=1", "--format", "json"});
    ASSERT_EQ(k.code, 0) << k.err;
    const auto kj = json::parse(k.out);
    ASSERT_EQ(kj["points"].size(), 1u);
    EXPECT_NEAR(kj["points"][0]["S"].get<double>(), std::sqrt(12.0 + 8.0 * std::sqrt(3.0)), 1e-8);
    EXPECT_LT(std::abs(kj["points"][0]["fit_RM"]["value"].get<double>()), 1e-12);
    EXPECT_NEAR(kj["points"][0]["fit_RF"]["slope"].get<double>(), -2.0, 0.05);

    const auto q = run({"davies", "--catalog", "quadratic-toy", "--fixed", "X=1", "--format", "json"});
    ASSERT_EQ(q.code, 0);
    const auto qj = json::parse(q.out);
    EXPECT_TRUE(qj["points"].empty());
    EXPECT_TRUE(qj["turning_points"].empty());
}

TEST(CliDavies, CsvFormat) {
    const auto r = run({"davies", "--catalog", "reissner-nordstrom", "--fixed", "Q=1"});
    ASSERT_EQ(r.code, 0);
    const auto rows = parse_csv(r.out);
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_EQ(rows[0].at("RF_outcome"), "divergent");
}

TEST(CliCheck, CatalogDefaultsPass) {
    for (const auto& name : catalog_names()) {
        const auto r = run({"check", "--catalog", name});
        EXPECT_EQ(r.code, 0) << name << "\n" << r.out << r.err;
        EXPECT_NE(r.out.find("PASS"), std::string::npos);
    }
}

TEST(CliCheck, FileReferencesPassAndCorruptedReferenceFails) {
    const std::vector<std::string> grid = {"--s-range", "0.5:10:20:log", "--x-range", "0.05:0.4:20:log"};
    auto args = [&](const std::string& file) {
        std::vector<std::string> a = {"check", "--potential-file", fixture(file), "--format", "json"};
        a.insert(a.end(), grid.begin(), grid.end());
        return a;
    };
    const auto good = run(args("rn.json"));
    EXPECT_EQ(good.code, 0) << good.out;
    EXPECT_TRUE(json::parse(good.out)["pass"].get<bool>());

    const auto bad = run(args("rn_corrupted_reference.json"));
    EXPECT_EQ(bad.code, 1) << bad.out;
    const auto j = json::parse(bad.out);
    EXPECT_FALSE(j["pass"].get<bool>());
    bool rf_failed = false;
    for (const auto& s : j["suites"]) {
        if (s["name"] == "reference R^F") {
            rf_failed = s["failed"].get<int>() > 0;
        } else {
            EXPECT_EQ(s["failed"].get<int>(), 0) << s["name"];
        }
    }
    EXPECT_TRUE(rf_failed);
}

TEST(CliBinary, ExitCodesFromTheExecutable) {
    auto status = [](const std::string& args) {
        const int raw = std::system((std::string(THERMOCURV_CLI_BINARY) + " " + args + " >/dev/null 2>&1").c_str());
        return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    };
    EXPECT_EQ(status("eval --catalog kerr --at S=25,J=1"), 0);
    EXPECT_EQ(status("check --catalog quadratic-toy"), 0);
    EXPECT_EQ(status("check --potential-file " + fixture("rn_corrupted_reference.json") +
                     " --s-range 0.5:10:10:log --x-range 0.05:0.4:10:log"),
              1);
    EXPECT_EQ(status("scan --potential-file " + fixture("bad.json") + " --s-range 1:2:2 --x-range 1:2:2"), 2);
}

}  // namespace
}  // namespace thermocurv
