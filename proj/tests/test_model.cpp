#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include <gtest/gtest.h>

#include "repnum/benchmarks.hpp"
#include "repnum/config.hpp"
#include "repnum/expression.hpp"
#include "repnum/model.hpp"

using namespace repnum;

TEST(Expression, Evaluates) {
    EXPECT_DOUBLE_EQ(parse_coefficient("exp(-2*a)")(0.0), 1.0);
    EXPECT_DOUBLE_EQ(parse_coefficient("exp(-2*a)")(0.5), std::exp(-1.0));
    EXPECT_EQ(parse_coefficient("(0.5-a)^2*abs(0.5-a)")(0.5), 0.0);
    EXPECT_NEAR(parse_coefficient("(0.5-a)^2*abs(0.5-a)")(0.1), 0.064, 1e-16);
    EXPECT_DOUBLE_EQ(parse_coefficient("2^(1+2)")(0.0), 8.0);
    EXPECT_DOUBLE_EQ(parse_coefficient("-2^2")(0.0), -4.0);
    EXPECT_DOUBLE_EQ(parse_coefficient("1 - 2 - 3")(0.0), -4.0);
    EXPECT_DOUBLE_EQ(parse_coefficient("8 / 4 / 2")(0.0), 1.0);
    EXPECT_DOUBLE_EQ(parse_coefficient("a*alpha + 1e-1")(2.0, 3.0), 6.1);
}

TEST(Expression, IndicatorIsRightOpenExceptAtMaximumAge) {
    const auto f = parse_coefficient("0.018*chi(18,75)");
    EXPECT_EQ(f(17.0, 0.0, 75.0), 0.0);
    EXPECT_DOUBLE_EQ(f(18.0, 0.0, 75.0), 0.018);
    EXPECT_DOUBLE_EQ(f(20.0, 0.0, 75.0), 0.018);
    EXPECT_DOUBLE_EQ(f(75.0, 0.0, 75.0), 0.018);
    EXPECT_EQ(f(75.0, 0.0, 80.0), 0.0);
    const auto g = parse_coefficient("chi(alpha, 0, 3)");
    EXPECT_EQ(g(5.0, 1.0, 75.0), 1.0);
    EXPECT_EQ(g(1.0, 3.0, 75.0), 0.0);
}

TEST(Expression, DivisionIsGuarded) {
    EXPECT_EQ(parse_coefficient("1/a")(0.0), 0.0);
    EXPECT_EQ(parse_coefficient("a^(-1)")(0.0), 0.0);
    EXPECT_DOUBLE_EQ(parse_coefficient("1/a")(4.0), 0.25);
}

TEST(Expression, RenderRoundTrip) {
    for (const char* src : {"exp(-2*a)", "(0.5-a)^2*abs(0.5-a)", "0.018*chi(18,75)", "a-(alpha-1)",
                            "-a^2", "(-a)^2", "1/(2*a)", "2^(a+1)", "chi(alpha,0,3)*(75-alpha)/0.125",
                            "a - -1", "3.0000000000000004e-10*a"}) {
        const auto e = parse_coefficient(src);
        const std::string r1 = e.render();
        const auto e2 = parse_coefficient(r1);
        EXPECT_EQ(e2.render(), r1) << src;
        for (double a : {0.0, 0.3, 1.7}) {
            EXPECT_EQ(e.evaluate({a, 0.9, 75.0}), e2.evaluate({a, 0.9, 75.0})) << src;
        }
    }
}

TEST(Expression, Errors) {
    auto code_of = [](const char* src) {
        try {
            (void)parse_coefficient(src);
        } catch (const ParseError& e) {
            return std::pair{e.code(), e.offset()};
        }
        return std::pair{ErrorCode::Usage, std::size_t{999}};
    };
    EXPECT_EQ(code_of("").first, ErrorCode::SyntaxError);
    EXPECT_EQ(code_of("2*(a+1").first, ErrorCode::SyntaxError);
    EXPECT_EQ(code_of("2*b"), std::pair(ErrorCode::UnknownIdentifier, std::size_t{2}));
    EXPECT_EQ(code_of("sin(a)").first, ErrorCode::UnknownIdentifier);
    EXPECT_EQ(code_of("a +* 2"), std::pair(ErrorCode::SyntaxError, std::size_t{3}));
    EXPECT_EQ(code_of("chi(1)").first, ErrorCode::SyntaxError);
    EXPECT_EQ(code_of("a 2").first, ErrorCode::SyntaxError);
    EXPECT_EQ(code_of("2^3^1"), std::pair(ErrorCode::SyntaxError, std::size_t{3}));
}

TEST(Validate, ExampleOneConforms) {
    EXPECT_TRUE(validate(example1(QChoice::Analytic)).empty());
}

TEST(Validate, PositiveDeltaDiagonalIsReported) {
    auto c = example1(QChoice::Analytic);
    c.delta = scalar_function([](double) { return 0.1; });
    const auto diags = validate(c);
    ASSERT_EQ(diags.size(), 1u);
    EXPECT_EQ(diags[0].coefficient, "delta");
    EXPECT_NE(diags[0].message.find("delta diagonal"), std::string::npos);
    EXPECT_DOUBLE_EQ(diags[0].value, 0.1);
}

TEST(Validate, HbvConforms) {
    for (auto s : {HBVSplitting::R0, HBVSplitting::Horizontal, HBVSplitting::Vertical}) {
        EXPECT_TRUE(validate(hbv_model(0.1, 0.59, s)).empty());
    }
}

TEST(Validate, NegativeKernelAndBadBreakpoints) {
    auto c = example1(QChoice::Analytic);
    c.beta_minus = scalar_kernel([](double a, double alpha) { return a > 0.5 ? -alpha : 0.0; });
    c.breakpoints = {0.0, 0.7, 0.3, 1.0};
    const auto diags = validate(c);
    ASSERT_EQ(diags.size(), 2u);
    EXPECT_EQ(diags[0].coefficient, "breakpoints");
    EXPECT_EQ(diags[1].coefficient, "beta_minus");
    EXPECT_DOUBLE_EQ(diags[1].value, -1.0);
}

TEST(Split, HbvSplittings) {
    const auto r0 = hbv_model(0.1, 0.59, HBVSplitting::R0);
    EXPECT_FALSE(r0.beta_minus);
    EXPECT_FALSE(r0.b_minus);
    EXPECT_TRUE(r0.beta_plus && r0.b_plus);
    const auto th = hbv_model(0.1, 0.59, HBVSplitting::Horizontal);
    EXPECT_FALSE(th.b_plus);
    EXPECT_TRUE(th.beta_plus && th.b_minus);
    const auto tv = hbv_model(0.1, 0.59, HBVSplitting::Vertical);
    EXPECT_FALSE(tv.beta_plus);
    EXPECT_TRUE(tv.b_plus && tv.beta_minus);
}

TEST(Split, ReconstructsFullKernels) {
    HBVConfig cfg;
    const auto m = hbv_model_coefficients(cfg);
    const std::vector<SplittingSpec> specs{
        SplittingSpec::r0(), SplittingSpec::type_reproduction(KernelKind::Beta),
        SplittingSpec::type_reproduction(KernelKind::B),
        SplittingSpec::custom({{KernelKind::Beta, 0, 1}, {KernelKind::B, 0, 2}},
                              {{KernelKind::Beta, 0, 2}, {KernelKind::B, 0, 1}})};
    auto val = [](const auto& f, auto... args) -> Eigen::MatrixXd {
        return f ? f(args...) : Eigen::MatrixXd::Zero(3, 3);
    };
    for (const auto& spec : specs) {
        const auto c = split(m, spec);
        for (double a : probe_grid(75.0)) {
            EXPECT_LT((val(c.b_plus, a) + val(c.b_minus, a) - m.b(a)).cwiseAbs().maxCoeff(), 1e-12);
            for (double alpha : probe_grid(75.0, 13)) {
                EXPECT_LT((val(c.beta_plus, a, alpha) + val(c.beta_minus, a, alpha) - m.beta(a, alpha))
                              .cwiseAbs()
                              .maxCoeff(),
                          1e-12);
            }
        }
    }
}

TEST(Split, RejectsOverlappingOrMissingEntries) {
    HBVConfig cfg;
    const auto m = hbv_model_coefficients(cfg);
    auto code_of = [&](SplittingSpec s) {
        try {
            (void)split(m, s);
        } catch (const Error& e) {
            return e.code();
        }
        return ErrorCode::Usage;
    };
    EXPECT_EQ(code_of(SplittingSpec::custom({{KernelKind::Beta, 0, 1}, {KernelKind::B, 0, 1}, {KernelKind::B, 0, 2}},
                                            {{KernelKind::Beta, 0, 1}, {KernelKind::Beta, 0, 2}})),
              ErrorCode::InvalidSplitting);
    EXPECT_EQ(code_of(SplittingSpec::custom({{KernelKind::Beta, 0, 1}}, {{KernelKind::B, 0, 1}})),
              ErrorCode::InvalidSplitting);
    EXPECT_EQ(code_of(SplittingSpec::custom({{KernelKind::Beta, 5, 1}}, {})), ErrorCode::InvalidSplitting);
}

TEST(Breakpoints, Refinement) {
    EXPECT_EQ(refine_breakpoints({0.0, 30.0}, 30.0, 6), (std::vector<double>{0, 5, 10, 15, 20, 25, 30}));
    EXPECT_EQ(refine_breakpoints({0.0, 10.0, 30.0}, 30.0, 3), (std::vector<double>{0, 10, 20, 30}));
    EXPECT_EQ(refine_breakpoints({0.0, 1.0}, 1.0, 1), (std::vector<double>{0, 1}));
}

namespace {

const char* kExample1Yaml = R"(
# q = exp(-2a), gamma = 1
a_dagger: 1
beta: "exp(-2*a)*(1-alpha)/0.11"
delta: -1
)";

const char* kHbvLike = R"yaml(
d: 2
a_dagger: 10
breakpoints: [0, 4, 10]
beta:
  - ["0", "chi(0,4)*exp(-alpha)"]
  - ["0", "0"]
b: [["0", "0.5*chi(4,10)"], ["0", "0"]]
delta:
  - [-2, 0]
  - [2, -1]
splitting: {kind: type_reproduction, birth: b}
)yaml";

}  // namespace

TEST(Config, ParsesScalarModel) {
    const auto cfg = parse_config(kExample1Yaml);
    const auto c = cfg.coefficients();
    EXPECT_EQ(c.dim, 1);
    EXPECT_EQ(c.breakpoints, (std::vector<double>{0.0, 1.0}));
    EXPECT_NEAR(c.beta_plus(0.2, 0.5)(0, 0), std::exp(-0.4) * 0.5 / 0.11, 1e-15);
    EXPECT_FALSE(c.beta_minus);
    EXPECT_DOUBLE_EQ(c.delta(0.3)(0, 0), -1.0);
    EXPECT_FALSE(c.b_plus);
}

TEST(Config, ParsesMatrixModelAndSplitting) {
    const auto c = parse_config(kHbvLike).coefficients();
    EXPECT_EQ(c.dim, 2);
    EXPECT_EQ(c.breakpoints, (std::vector<double>{0, 4, 10}));
    EXPECT_FALSE(c.beta_plus);
    EXPECT_NEAR(c.beta_minus(1.0, 2.0)(0, 1), std::exp(-2.0), 1e-15);
    EXPECT_EQ(c.beta_minus(5.0, 2.0)(0, 1), 0.0);
    EXPECT_DOUBLE_EQ(c.b_plus(10.0)(0, 1), 0.5);
    EXPECT_DOUBLE_EQ(c.delta(1.0)(1, 0), 2.0);
}

TEST(Config, ErrorsCiteLineAndField) {
    auto message_of = [](const std::string& text) {
        try {
            (void)parse_config(text, "m.yaml");
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::ConfigParse);
            return std::string(e.what());
        }
        return std::string();
    };
    EXPECT_NE(message_of("a_dagger: 1\nbeta: \"exp(-2*b)\"\n").find("m.yaml:2: field 'beta'"), std::string::npos);
    EXPECT_NE(message_of("d: 1\n").find("'a_dagger'"), std::string::npos);
    EXPECT_NE(message_of("a_dagger: 1\nbreakpoints: [0, 0.5]\n").find("m.yaml:2: field 'breakpoints'"),
              std::string::npos);
    EXPECT_NE(message_of("a_dagger: 1\ndelta: \"alpha\"\n").find("only allowed in beta"), std::string::npos);
    EXPECT_NE(message_of("a_dagger: 1\ngamma: 3\n").find("unknown field"), std::string::npos);
    EXPECT_NE(message_of("d: 2\na_dagger: 1\nb: [[\"1\", \"0\"]]\n").find("field 'b'"), std::string::npos);
    EXPECT_NE(message_of("a_dagger: [1\n").find("m.yaml:"), std::string::npos);
    EXPECT_NE(message_of("a_dagger: 1\nsplitting: {kind: custom, birth: [\"gamma[0][0]\"]}\n").find("splitting.birth[0]"),
              std::string::npos);
}

TEST(Config, MissingFile) {
    try {
        (void)load_config("/nonexistent/model.yaml");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ConfigNotFound);
    }
}

TEST(Config, ShippedConfigsLoad) {
    const std::filesystem::path dir = REPNUM_SOURCE_DIR "/configs";
    int count = 0;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.path().extension() != ".yaml") continue;
        const auto c = load_config(entry.path()).coefficients();
        EXPECT_TRUE(validate(c).empty()) << entry.path();
        ++count;
    }
    EXPECT_GE(count, 3);
}

TEST(Config, HbvFilesMatchBuiltin) {
    const std::string dir = REPNUM_SOURCE_DIR "/configs/";
    const std::pair<const char*, HBVSplitting> cases[] = {{"hbv_r0.yaml", HBVSplitting::R0},
                                                         {"hbv_vertical.yaml", HBVSplitting::Vertical}};
    for (const auto& [file, s] : cases) {
        const auto from_file = load_config(dir + file).coefficients();
        const auto builtin = hbv_model(0.1, 0.59, s);
        EXPECT_EQ(from_file.breakpoints, builtin.breakpoints);
        for (double a : {0.0, 2.0, 4.5, 17.0, 18.0, 40.0, 75.0}) {
            EXPECT_LT((from_file.delta(a) - builtin.delta(a)).cwiseAbs().maxCoeff(), 1e-15);
            for (double alpha : {1.0, 7.0, 20.0, 60.0}) {
                const Eigen::MatrixXd f = from_file.beta_plus ? from_file.beta_plus(a, alpha) : from_file.beta_minus(a, alpha);
                const Eigen::MatrixXd b = builtin.beta_plus ? builtin.beta_plus(a, alpha) : builtin.beta_minus(a, alpha);
                EXPECT_LT((f - b).cwiseAbs().maxCoeff(), 1e-14) << a << " " << alpha;
            }
        }
    }
}
