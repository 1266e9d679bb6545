#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "backstep/config.hpp"
#include "backstep/errors.hpp"
#include "backstep/expression.hpp"

using namespace backstep;

TEST_CASE("basic evaluation") {
    CHECK(parse_expression("2*x+1").eval(0.5) == doctest::Approx(2.0));
    CHECK(parse_expression("sin(x)^2+cos(x)^2").eval(0.37) ==
          doctest::Approx(1.0).epsilon(1e-12));
    CHECK(parse_expression("tanh(0)").eval(0.0) == 0.0);
    CHECK(parse_expression("sqrt(4)").eval(0.0) == doctest::Approx(2.0));
    CHECK(parse_expression("z1 - 2*z2").eval(0.0, 3.0, 1.0) == doctest::Approx(1.0));
    CHECK(parse_expression("1e2 + 0.5e-1").eval(0.0) == doctest::Approx(100.05));
}

TEST_CASE("precedence and associativity") {
    // ^ binds tighter than unary minus and is right-associative
    CHECK(parse_expression("-x^2").eval(3.0) == doctest::Approx(-9.0));
    CHECK(parse_expression("2^-3").eval(0.0) == doctest::Approx(0.125));
    CHECK(parse_expression("2^3^2").eval(0.0) == doctest::Approx(512.0));
    CHECK(parse_expression("6/3/2").eval(0.0) == doctest::Approx(1.0));
    CHECK(parse_expression("1-2-3").eval(0.0) == doctest::Approx(-4.0));
    CHECK(parse_expression("2+3*4").eval(0.0) == doctest::Approx(14.0));
    CHECK(parse_expression("(2+3)*4").eval(0.0) == doctest::Approx(20.0));
}

TEST_CASE("syntax errors carry offsets") {
    try {
        parse_expression("1+*2");
        FAIL("expected SyntaxError");
    } catch (const SyntaxError& e) {
        CHECK(e.offset == 2);
    }
    CHECK_THROWS_AS(parse_expression(""), SyntaxError);
    CHECK_THROWS_AS(parse_expression("sin 1"), SyntaxError);
    CHECK_THROWS_AS(parse_expression("(1+2"), SyntaxError);
    CHECK_THROWS_AS(parse_expression("1 2"), SyntaxError);

    try {
        parse_expression("2*y+1");
        FAIL("expected UnknownIdentifier");
    } catch (const UnknownIdentifier& e) {
        CHECK(e.name == "y");
        CHECK(e.offset == 2);
    }
}

TEST_CASE("evaluation errors") {
    CHECK_THROWS_AS(parse_expression("1/x").eval(0.0), EvalError);
    CHECK_THROWS_AS(parse_expression("sqrt(x-2)").eval(0.0), EvalError);
    CHECK_THROWS_AS(parse_expression("(0-2)^0.5").eval(0.0), EvalError);
}

namespace {

Expression::NodePtr random_tree(std::mt19937& rng, int depth) {
    using Node = Expression::Node;
    auto node = std::make_unique<Node>();
    std::uniform_int_distribution<int> pick(0, depth <= 0 ? 1 : 4);
    switch (pick(rng)) {
        case 0: {
            node->kind = Expression::Kind::Number;
            std::uniform_real_distribution<double> num(0.0, 10.0);
            node->number = std::round(num(rng) * 16.0) / 16.0;
            break;
        }
        case 1: {
            node->kind = Expression::Kind::Variable;
            std::uniform_int_distribution<int> v(0, 2);
            node->var = static_cast<Expression::Var>(v(rng));
            break;
        }
        case 2: {
            node->kind = Expression::Kind::Unary;
            node->op = '-';
            node->lhs = random_tree(rng, depth - 1);
            break;
        }
        case 3: {
            node->kind = Expression::Kind::Binary;
            const char ops[] = {'+', '-', '*', '/', '^'};
            std::uniform_int_distribution<int> o(0, 4);
            node->op = ops[o(rng)];
            node->lhs = random_tree(rng, depth - 1);
            node->rhs = random_tree(rng, depth - 1);
            break;
        }
        default: {
            node->kind = Expression::Kind::Call;
            std::uniform_int_distribution<int> f(0, 4);
            node->fn = static_cast<Expression::Fn>(f(rng));
            node->lhs = random_tree(rng, depth - 1);
            break;
        }
    }
    return node;
}

}  // namespace

TEST_CASE("print/parse round trip on 1000 random expressions") {
    std::mt19937 rng(20240817);
    for (int trial = 0; trial < 1000; ++trial) {
        Expression e(random_tree(rng, 5));
        const std::string text = e.print();
        CAPTURE(text);
        const Expression back = parse_expression(text);
        CHECK(back.equals(e));
    }
}

TEST_CASE("config parsing and validation") {
    const std::string good = R"(
# comment
[scenario]
kind = linear
[system]
eps1 = 1
eps2 = 2
c1 = x
c2 = 0
q = 0.5
[scheme]
m = 64
)";
    const ScenarioConfig cfg = parse_config_text(good);
    CHECK(cfg.kind == ScenarioKind::Linear);
    CHECK(cfg.q == doctest::Approx(0.5));
    CHECK(cfg.m == 64);
    CHECK(cfg.eps2.eval(0.3) == doctest::Approx(2.0));
    CHECK(validate_config_text(good).empty());

    SUBCASE("missing field") {
        try {
            parse_config_text("[scenario]\nkind = linear\n[system]\neps1 = 1\n");
            FAIL("expected MissingField");
        } catch (const MissingField& e) {
            CHECK(e.name == "system.eps2");
        }
    }

    SUBCASE("degenerate extension rates are reported") {
        const std::string bad = good + "[control]\nd1 = 2\nd2 = 2\n";
        const auto report = validate_config_text(bad);
        REQUIRE(report.size() == 1);
        CHECK(report[0].find("DegenerateRates") != std::string::npos);
    }

    SUBCASE("negative speed is reported") {
        const std::string bad = R"(
[scenario]
kind = linear
[system]
eps1 = x-0.5
eps2 = 1
q = 1
)";
        const auto report = validate_config_text(bad);
        REQUIRE(report.size() == 1);
        CHECK(report[0].find("NonPositiveSpeed") != std::string::npos);
    }

    SUBCASE("bad expression is a config error") {
        CHECK_THROWS_AS(
            parse_config_text("[scenario]\nkind = linear\n[system]\neps1 = 1+*2\n"),
            ConfigError);
    }
}

TEST_CASE("bundled configs validate") {
    for (const char* name : {"linear_const.cfg", "quasilinear_bench.cfg", "linear_q0.cfg"}) {
        const std::string path = std::string(BACKSTEP_CONFIG_DIR) + "/" + name;
        CAPTURE(path);
        const auto report = validate_config_file(path);
        for (const auto& line : report) MESSAGE(line);
        CHECK(report.empty());
    }
}

TEST_CASE("cli summary reports the transit horizon") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "backstep_summary";
    fs::create_directories(dir);
    const std::string cmd = std::string(BACKSTEP_CLI_PATH) + " solve-kernels " +
                            BACKSTEP_CONFIG_DIR + "/linear_const.cfg --out-dir " + dir.string();
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    char buf[512];
    std::string out;
    while (fgets(buf, sizeof(buf), pipe)) out += buf;
    const int rc = pclose(pipe);
    CHECK(rc == 0);
    CHECK(out.find("t_F=2") != std::string::npos);
    CHECK(out.find("picard_iterations=") != std::string::npos);
}

TEST_CASE("cli validate verb and error exit codes") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "backstep_cli_test";
    fs::create_directories(dir);

    const std::string cli = BACKSTEP_CLI_PATH;
    const std::string cfgdir = BACKSTEP_CONFIG_DIR;

    // validate succeeds on a bundled config
    {
        const int rc = std::system((cli + " validate " + cfgdir + "/linear_const.cfg").c_str());
        CHECK(rc == 0);
    }
    // config with a negative speed fails at kernel assembly with exit 3
    {
        const fs::path bad = dir / "bad_speed.cfg";
        std::ofstream out(bad);
        out << "[scenario]\nkind = linear\n[system]\neps1 = x-0.5\neps2 = 1\nq = 1\n";
        out.close();
        const int rc =
            std::system((cli + " solve-kernels " + bad.string() + " --out-dir " +
                         (dir / "out").string() + " 2> " + (dir / "err.txt").string())
                            .c_str());
        CHECK(WEXITSTATUS(rc) == 3);
        std::ifstream err(dir / "err.txt");
        std::stringstream buf;
        buf << err.rdbuf();
        CHECK(buf.str().find("NonPositiveSpeed") != std::string::npos);
        CHECK(buf.str().find("stage=kernel-assembly") != std::string::npos);
    }
    // validate rejects a config with missing fields with exit 2
    {
        const fs::path bad = dir / "missing.cfg";
        std::ofstream out(bad);
        out << "[scenario]\nkind = linear\n";
        out.close();
        const int rc = std::system((cli + " validate " + bad.string() + " > /dev/null").c_str());
        CHECK(WEXITSTATUS(rc) == 2);
    }
}

TEST_CASE("identical runs produce byte-identical outputs") {
    namespace fs = std::filesystem;
    const std::string cli = BACKSTEP_CLI_PATH;
    const fs::path dir = fs::temp_directory_path() / "backstep_determinism";
    fs::create_directories(dir);
    const fs::path cfg = dir / "tiny.cfg";
    {
        std::ofstream out(cfg);
        out << "[scenario]\nkind = linear\n[system]\neps1 = 1\neps2 = 1\nc1 = 1\nc2 = 1\nq = 1\n"
            << "[kernel]\nn = 21\n[scheme]\nm = 32\nt_end = 0.5\nsnapshot_stride = 4\n"
            << "[initial]\nfirst = sin(3.14159*x)\n";
    }
    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::stringstream buf;
        buf << in.rdbuf();
        return buf.str();
    };
    const fs::path out1 = dir / "run1";
    const fs::path out2 = dir / "run2";
    REQUIRE(std::system((cli + " simulate " + cfg.string() + " --quiet --out-dir " +
                         out1.string()).c_str()) == 0);
    REQUIRE(std::system((cli + " simulate " + cfg.string() + " --quiet --out-dir " +
                         out2.string()).c_str()) == 0);
    for (const char* name : {"kernel.csv", "gains.csv", "trace.csv", "diagnostics.csv"}) {
        CHECK(slurp(out1 / name) == slurp(out2 / name));
        CHECK(!slurp(out1 / name).empty());
    }

    // the report verb reads the trace back and prints the norm table
    FILE* pipe = popen((cli + " report " + (out1 / "trace.csv").string()).c_str(), "r");
    REQUIRE(pipe != nullptr);
    char buf[512];
    std::string report_out;
    while (fgets(buf, sizeof(buf), pipe)) report_out += buf;
    CHECK(pclose(pipe) == 0);
    CHECK(report_out.rfind("t,L2,H1,H2,sup,a,b,U", 0) == 0);
}
