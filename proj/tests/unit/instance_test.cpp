#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "crmdp/commands.hpp"
#include "crmdp/errors.hpp"
#include "oracles.hpp"

using namespace crmdp;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string example_text() { return read_file(CRMDP_DATA_DIR "/example1.json"); }

std::string replace(std::string s, const std::string& from, const std::string& to) {
    const auto pos = s.find(from);
    if (pos == std::string::npos) throw std::logic_error("pattern not found: " + from);
    return s.replace(pos, from.size(), to);
}

struct CliRun {
    int code;
    std::string out;
};

CliRun run_cli(const std::string& args) {
    const std::string cmd = std::string(CRMDP_CLI_PATH) + " " + args + " 2>/dev/null";
    FILE* pipe = popen(cmd.c_str(), "r");
    std::string out;
    char buf[4096];
    while (std::size_t n = fread(buf, 1, sizeof buf, pipe)) out.append(buf, n);
    const int status = pclose(pipe);
    return {WEXITSTATUS(status), out};
}

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / ("crmdp_test_" + name)).string();
}

} // namespace

TEST(Instance, BundledExampleIsTheLiteralModel) {
    const Instance inst = load_instance(CRMDP_DATA_DIR "/example1.json");
    EXPECT_EQ(inst.model, oracle::example1_rmdp());
    ASSERT_TRUE(inst.regularization.has_value());
    EXPECT_DOUBLE_EQ(inst.regularization->b, 5.0);
    EXPECT_EQ(inst.states, (std::vector<std::string>{"s1", "s2"}));
}

TEST(Instance, AutoTemperatureResolvedFromEpsilon) {
    const Instance inst = load_instance(CRMDP_DATA_DIR "/example1-rescaled.json");
    ASSERT_TRUE(inst.regularization.has_value());
    EXPECT_NEAR(inst.regularization->b, 109.861228866811, 1e-9);
    EXPECT_LE(max_abs_diff(inst.model.base().rewards().data(), oracle::example1_mdp(true).rewards().data()), 1e-15);
}

TEST(Instance, RoundTripIsBitExact) {
    for (const char* name : {"example1.json", "example1-rescaled.json", "tiny-srect.json", "tiny-kl.json"}) {
        const Instance a = load_instance(std::string(CRMDP_DATA_DIR "/") + name);
        const Instance b = parse_instance(serialize_instance(a));
        EXPECT_EQ(a.model, b.model) << name;
        EXPECT_EQ(a.states, b.states);
        EXPECT_EQ(a.actions, b.actions);
        ASSERT_EQ(a.regularization.has_value(), b.regularization.has_value());
        if (a.regularization) {
            EXPECT_EQ(a.regularization->b, b.regularization->b);
            EXPECT_EQ(a.regularization->baseline, b.regularization->baseline);
        }
    }
}

TEST(Instance, RoundTripRandomBoxModels) {
    oracle::Gen g(91);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t S = 2 + g.index(3), A = 1 + g.index(3);
        Matrix r(S, A), p(0, S);
        for (std::size_t s = 0; s < S; ++s)
            for (std::size_t a = 0; a < A; ++a) r(s, a) = g.uniform(0, 1e3);
        for (std::size_t k = 0; k < S * A; ++k) p.append_row(g.interior_simplex(S, 0.01));
        Instance inst{{}, {}, Rmdp::boxes(Mdp(r, p, g.uniform(0.1, 0.99), g.simplex(S)), 0.9, 1.1), std::nullopt,
                      std::nullopt};
        for (std::size_t s = 0; s < S; ++s) inst.states.push_back("s" + std::to_string(s));
        for (std::size_t a = 0; a < A; ++a) inst.actions.push_back("a" + std::to_string(a));
        EXPECT_EQ(parse_instance(serialize_instance(inst)).model, inst.model);
    }
}

TEST(Instance, MalformedJsonReportsPosition) {
    try {
        parse_instance("{\n  \"states\": [\"a\",\n  ]\n}");
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
    }
}

TEST(Instance, NegativeRewardNamesThePair) {
    const std::string text = replace(example_text(), "[2, 11, 10]", "[2, -11, 10]");
    try {
        parse_instance(text);
        FAIL() << "expected ValidationError";
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("(s=0, a=1)"), std::string::npos) << e.what();
    }
}

TEST(Instance, InvariantViolationsRejected) {
    EXPECT_THROW(parse_instance(replace(example_text(), "[0.1, 0.9]", "[0.1, 0.8]")), ValidationError);
    EXPECT_THROW(parse_instance(replace(example_text(), "\"discount\": 0.8", "\"discount\": 1.2")), ValidationError);
    EXPECT_THROW(parse_instance(replace(example_text(), "[\"s1\", \"s2\"]", "[\"s1\", \"s1\"]")), ValidationError);
    EXPECT_THROW(parse_instance(replace(example_text(), "[\"s1\", \"s2\"]", "[]")), ValidationError);
    EXPECT_THROW(parse_instance(replace(example_text(), "\"box\"", "\"ellipsoid\"")), ValidationError);
    EXPECT_THROW(parse_instance(replace(example_text(), "\"lower_factor\": 0.95", "\"lower_factor\": 1.5")),
                 ValidationError);
    EXPECT_THROW(load_instance("/nonexistent/instance.json"), IoError);
}

TEST(Commands, CrossMethodAgreement) {
    const Instance inst = load_instance(CRMDP_DATA_DIR "/example1.json");
    const SolveReport vi = cmd_solve(inst, "vi", 1e-10);
    const SolveReport pi = cmd_solve(inst, "pi", 1e-10);
    const SolveReport lp = cmd_solve(inst, "lp-primal", 1e-10);
    EXPECT_LE(max_abs_diff(vi.value, pi.value), 1e-8);
    EXPECT_NEAR(lp.objective, vi.objective, 1e-8);
    EXPECT_LE(max_abs_diff(cmd_solve(inst, "rvi", 1e-10).value, cmd_solve(inst, "rpi", 1e-10).value), 1e-8);
    EXPECT_LE(vi.residual, 1e-10);
}

TEST(Commands, MethodMismatchIsUsageError) {
    const Instance srect = load_instance(CRMDP_DATA_DIR "/tiny-srect.json");
    EXPECT_THROW(cmd_solve(srect, "cvx-poly", 1e-8), UsageError);
    EXPECT_THROW(cmd_solve(srect, "reg-fp", 1e-8), UsageError);
    EXPECT_THROW(cmd_solve(srect, "simplex", 1e-8), UsageError);
}

TEST(Commands, ValidateSingleActionReportsEquality) {
    const std::string text = R"({"states": ["x", "y"], "actions": ["only"], "discount": 0.7,
        "initial": [0.5, 0.5], "rewards": [[1], [2]], "nominal": [[[0.3, 0.7]], [[0.6, 0.4]]],
        "uncertainty": {"kind": "box", "lower_factor": 0.9, "upper_factor": 1.1}})";
    const ValidationReport r = cmd_validate(parse_instance(text), 1e-8);
    EXPECT_TRUE(r.passed) << r.checks.dump(2);
    bool found = false;
    for (const auto& c : r.checks) found = found || c["name"].get<std::string>().find("single action") == 0;
    EXPECT_TRUE(found);
}

TEST(Commands, BoundsOnSingleActionHasZeroGap) {
    const std::string text = R"({"states": ["x"], "actions": ["only"], "discount": 0.5,
        "initial": [1], "rewards": [[3]], "nominal": [[[1]]]})";
    const nlohmann::json j = cmd_bounds(parse_instance(text), 0.01);
    EXPECT_NEAR(j["measured_gap"].get<double>(), 0.0, 1e-12);
    EXPECT_EQ(j["predicted_bound"].get<double>(), 0.0);
}

TEST(Commands, BoundsTakesEpsilonFromInstance) {
    const nlohmann::json j = cmd_bounds(load_instance(CRMDP_DATA_DIR "/example1-rescaled.json"), std::nullopt);
    EXPECT_DOUBLE_EQ(j["epsilon"].get<double>(), 0.05);
    EXPECT_TRUE(j["within_epsilon"].get<bool>());
}

TEST(Commands, ProbeWritesCsvAndVerdict) {
    const Instance inst = load_instance(CRMDP_DATA_DIR "/example1.json");
    ProbeSpec spec;
    spec.from = oracle::example1_v1();
    spec.to = oracle::example1_v2();
    spec.samples = 21;
    const std::string out = temp_path("probe.csv");
    const nlohmann::json verdict = cmd_probe(inst, spec, out);
    EXPECT_EQ(verdict["verdict"], "neither");
    const std::string csv = read_file(out);
    EXPECT_EQ(csv.substr(0, 12), "theta,value\n");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 22);
    EXPECT_EQ(nlohmann::json::parse(read_file(out + ".json"))["verdict"], "neither");
}

TEST(Cli, ExitCodes) {
    EXPECT_EQ(run_cli("solve --instance " CRMDP_DATA_DIR "/example1.json --method vi").code, 0);
    EXPECT_EQ(run_cli("solve --instance /nonexistent.json --method vi").code, 1);
    EXPECT_EQ(run_cli("solve --instance " CRMDP_DATA_DIR "/tiny-srect.json --method cvx-poly").code, 1);
    EXPECT_EQ(run_cli("solve --bogus").code, 1);
    EXPECT_EQ(run_cli("validate --instance " CRMDP_DATA_DIR "/example1.json").code, 0);
    EXPECT_EQ(run_cli("bounds --instance " CRMDP_DATA_DIR "/example1.json --b 110").code, 0);
}

TEST(Cli, BoundsWarnsInsteadOfOverflowing) {
    const CliRun r = run_cli("bounds --instance " CRMDP_DATA_DIR "/example1.json --b 110");
    ASSERT_EQ(r.code, 0);
    EXPECT_EQ(r.out.find("inf"), std::string::npos);
    EXPECT_EQ(r.out.find("nan"), std::string::npos);
    const nlohmann::json j = nlohmann::json::parse(r.out);
    EXPECT_EQ(j["guard"], "overflow-risk");
    EXPECT_EQ(j["warnings"][0]["type"], "OverflowRisk");
    EXPECT_DOUBLE_EQ(j["warnings"][0]["exponent"].get<double>(), 1210.0);
}

TEST(Cli, ProbeIsDeterministic) {
    const std::string a = temp_path("a.csv"), b = temp_path("b.csv");
    const std::string base = "probe --instance " CRMDP_DATA_DIR "/example1.json --operator t-reg --b 5 --state 0 --out ";
    ASSERT_EQ(run_cli(base + a).code, 0);
    ASSERT_EQ(run_cli(base + b).code, 0);
    EXPECT_EQ(read_file(a), read_file(b));
    EXPECT_EQ(nlohmann::json::parse(read_file(a + ".json"))["verdict"], "concave");
}
