#include <cmath>
#include <numbers>
#include <sstream>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "repnum/benchmarks.hpp"

using namespace repnum;

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace

TEST(ExampleOne, NormalizationMatchesOracle) {
    struct Case {
        QChoice q;
        double a_dagger, gamma;
        std::function<double(double)> f;
        std::vector<double> kinks;
    };
    const std::vector<Case> cases{
        {QChoice::Analytic, 1.0, 1.0, [](double a) { return std::exp(-2 * a); }, {}},
        {QChoice::Analytic, 30.0, 100.0, [](double a) { return std::exp(-2 * a); }, {}},
        {QChoice::W3, 1.0, 1.0, [](double a) { return std::pow(0.5 - a, 2) * std::abs(0.5 - a); }, {0.5}},
        {QChoice::CInfinity, 1.0, 1.0,
         [](double a) { return a > 0.5 ? std::exp(-1.0 / std::pow(a - 0.5, 2)) / std::pow(a - 0.5, 2) : 0.0; }, {0.5}},
    };
    for (const auto& c : cases) {
        const auto cfg = example1_config(c.q, c.a_dagger, c.gamma);
        const double ref = oracle::example1_c(c.f, c.a_dagger, c.gamma, c.kinks);
        EXPECT_LE(rel(cfg.c, ref), 1e-12) << q_expression(c.q, c.a_dagger) << " a+=" << c.a_dagger;
    }
}

TEST(ExampleOne, CustomExpression) {
    const auto cfg = example1_config(parse_coefficient("1 + a"), 2.0, 0.5);
    const double ref = oracle::example1_c([](double a) { return 1 + a; }, 2.0, 0.5);
    EXPECT_LE(rel(cfg.c, ref), 1e-12);
    EXPECT_NEAR(compute_R(example1(cfg), 20, NodeFamily::ZerosPlusLeftEndpoint).R, 1.0, 1e-12);
}

TEST(ExampleOne, PsiIsPrimitiveOfQ) {
    const auto cfg = example1_config(QChoice::Analytic);
    EXPECT_EQ(example1_psi(cfg, 0.0), 0.0);
    EXPECT_NEAR(example1_psi(cfg, 0.7), (1 - std::exp(-1.4)) / 2, 1e-15);
}

TEST(ExampleOne, SpectralDecay) {
    const auto c = example1(QChoice::Analytic);
    bool reached = false;
    for (int n = 4; n < 40; n += 2) {
        if (std::abs(compute_R(c, n, NodeFamily::ZerosPlusLeftEndpoint).R - 1.0) < 1e-10) {
            reached = true;
            break;
        }
    }
    EXPECT_TRUE(reached);
}

TEST(ExampleOne, BruteForceOracleAgrees) {
    const auto c = example1(QChoice::Analytic);
    const double R = compute_R(c, 30, NodeFamily::ZerosPlusLeftEndpoint).R;
    EXPECT_NEAR(oracle::brute_force_R(c, 2000), R, 1e-4);
}

TEST(ExampleTwo, NormalizationMatchesGammaFunction) {
    for (double k : {1.0, 2.0, std::numbers::pi, 4.5}) {
        const auto cfg = example2_config(k, 0.25);
        EXPECT_LE(rel(cfg.c, 1.0 / oracle::example2_mass(k, 0.25, 14.0)), 1e-12) << k;
        const auto coeffs = example2(cfg);
        EXPECT_NEAR(coeffs.b_plus(2.0)(0, 0), cfg.c * std::pow(2.0, k - 1), 1e-15 * cfg.c * std::pow(2.0, k));
        EXPECT_DOUBLE_EQ(coeffs.delta(1.0)(0, 0), -4.0);
        EXPECT_FALSE(coeffs.beta_plus);
        EXPECT_FALSE(coeffs.b_minus);
    }
}

TEST(ExampleTwo, ShapeOneIsConstantBirth) {
    const auto c = example2(1.0);
    EXPECT_EQ(c.b_plus(0.0)(0, 0), c.b_plus(9.0)(0, 0));
    EXPECT_NEAR(compute_R(c, 40, NodeFamily::Extrema).R, 1.0, 1e-8);
}

TEST(ExampleTwo, ReproductionNumberIsOne) {
    EXPECT_NEAR(compute_R(example2(2.0), 40, NodeFamily::ZerosPlusLeftEndpoint).R, 1.0, 1e-8);
    EXPECT_NEAR(compute_R(example2(std::numbers::pi), 120, NodeFamily::ZerosPlusLeftEndpoint).R, 1.0, 1e-8);
}

TEST(ExampleTwo, RejectsBadParameters) {
    EXPECT_THROW((void)example2_config(0.5, 0.25), Error);
    EXPECT_THROW((void)example2_config(2.0, 0.0), Error);
    EXPECT_THROW((void)example2_config(2.0, 0.25, -1.0), Error);
}

TEST(Hbv, NoVaccinationGivesFullSusceptibility) {
    HBVConfig cfg;
    cfg.nu = 0.0;
    cfg.theta = 1.0;
    for (double a : {0.0, 1.0, 17.3, 75.0}) EXPECT_NEAR(cfg.s_star(a), 1.0, 1e-15);
}

TEST(Hbv, SusceptibleFractionSolvesItsOde) {
    HBVConfig cfg;
    // s' = -(omega + nu) s + omega, s(0) = theta
    const double h = 1e-5;
    for (double a : {0.5, 3.0, 40.0}) {
        const double ds = (cfg.s_star(a + h) - cfg.s_star(a - h)) / (2 * h);
        EXPECT_NEAR(ds, -(cfg.omega + cfg.nu) * cfg.s_star(a) + cfg.omega, 1e-8);
    }
    EXPECT_DOUBLE_EQ(cfg.s_star(0.0), cfg.theta);
}

TEST(Hbv, Waifw) {
    HBVConfig cfg;
    EXPECT_DOUBLE_EQ(cfg.waifw(1.0, 4.0), 0.607);
    EXPECT_DOUBLE_EQ(cfg.waifw(4.0, 1.0), 0.607);
    EXPECT_DOUBLE_EQ(cfg.waifw(1.0, 2.0), 1.070);
    EXPECT_DOUBLE_EQ(cfg.waifw(3.0, 74.0), 0.041);
    EXPECT_DOUBLE_EQ(cfg.waifw(75.0, 75.0), 0.041);
    EXPECT_EQ(cfg.age_class(2.999), 0);
    EXPECT_EQ(cfg.age_class(3.0), 1);
}

TEST(Hbv, ForceOfInfectionClassMeans) {
    HBVConfig cfg;
    const double mean0 = oracle::integrate(hbv_force_of_infection, 0.0, 3.0) / 3.0;
    EXPECT_NEAR(mean0, cfg.lambda[0], 5e-4);
    // continuous at the plateau
    EXPECT_NEAR(hbv_force_of_infection(47.5 - 1e-9), hbv_force_of_infection(47.5 + 1e-9), 1e-10);
    EXPECT_EQ(hbv_force_of_infection(60.0), hbv_force_of_infection(75.0));
}

TEST(Hbv, Breakpoints) {
    HBVConfig cfg;
    EXPECT_EQ(cfg.breakpoints(), (std::vector<double>{0, 3, 6, 10, 15, 18, 30, 50, 75}));
    EXPECT_EQ(cfg.f(17.99), 0.0);
    EXPECT_EQ(cfg.f(18.0), 0.018);
    EXPECT_EQ(cfg.f(75.0), 0.018);
}

TEST(Hbv, RejectsParametersOutsideUnitInterval) {
    try {
        (void)hbv_model(1.5, 0.5);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::OutOfRange);
    }
    EXPECT_THROW((void)hbv_model(0.1, -0.1), Error);
}

TEST(Hbv, ThresholdConsistency) {
    const int n = 20;
    const double r0 = compute_R(hbv_model(0.1, 0.59), n, NodeFamily::ZerosPlusLeftEndpoint).R;
    const double th = compute_R(hbv_model(0.1, 0.59, HBVSplitting::Horizontal), n, NodeFamily::ZerosPlusLeftEndpoint).R;
    const double tv = compute_R(hbv_model(0.1, 0.59, HBVSplitting::Vertical), n, NodeFamily::ZerosPlusLeftEndpoint).R;
    EXPECT_EQ(r0 > 1.0, th > 1.0);
    EXPECT_EQ(r0 > 1.0, tv > 1.0);
    // above threshold the type numbers dominate R0
    if (r0 > 1.0) {
        EXPECT_GE(th, r0);
        EXPECT_GE(tv, r0);
    }
}

TEST(Hbv, CoarseAndFineMeshesAgree) {
    const double coarse = compute_R(hbv_model(0.3, 0.2), 12, NodeFamily::Extrema).R;
    const double fine = compute_R(hbv_model(0.3, 0.2), 40, NodeFamily::Extrema).R;
    EXPECT_NEAR(coarse, fine, 1e-5 * fine);
}

TEST(Scan, MonotoneInBothParameters) {
    const std::vector<double> nu{0.0, 0.1, 0.4, 1.0}, theta{0.0, 0.3, 0.59, 1.0};
    const auto grid = parameter_scan_R0(nu, theta, 8);
    for (Eigen::Index i = 0; i < grid.rows(); ++i) {
        for (Eigen::Index j = 0; j < grid.cols(); ++j) {
            EXPECT_TRUE(std::isfinite(grid(i, j)));
            EXPECT_GT(grid(i, j), 0.0);
            if (i > 0) {
                EXPECT_LE(grid(i, j), grid(i - 1, j) + 1e-8);
            }
            if (j > 0) {
                EXPECT_GE(grid(i, j), grid(i, j - 1) - 1e-8);
            }
        }
    }
}

TEST(Scan, ThresholdCrossesTheRegion) {
    std::vector<double> g;
    for (int i = 0; i <= 10; ++i) g.push_back(0.1 * i);
    const auto grid = parameter_scan_R0(g, g, 10);
    EXPECT_LT(grid.minCoeff(), 1.0);
    EXPECT_GT(grid.maxCoeff(), 1.0);
}

TEST(FitOrder, ExactPowerLaw) {
    std::vector<int> N{10, 20, 40, 80};
    std::vector<double> e;
    for (int n : N) e.push_back(3.0 * std::pow(n, -4.0));
    const auto f = fit_order(N, e);
    EXPECT_NEAR(f.order, 4.0, 1e-12);
    EXPECT_LT(f.residual, 1e-12);
    EXPECT_EQ(f.points, 4);
}

TEST(FitOrder, SkipsZeroErrors) {
    const auto f = fit_order({10, 20, 40}, {1e-3, 0.0, 1e-3 / 64.0});
    EXPECT_NEAR(f.order, 3.0, 1e-12);
    EXPECT_EQ(f.points, 2);
}

TEST(Sweep, ExactReferenceAndCsv) {
    SweepOptions opt;
    opt.exact = 1.0;
    const auto rep = convergence_sweep(example1(QChoice::W3), {20, 40, 80, 160}, opt);
    ASSERT_EQ(rep.rows.size(), 4u);
    EXPECT_EQ(rep.reference_source, "exact");
    EXPECT_NEAR(rep.fit.order, 4.0, 0.1);
    for (const auto& r : rep.rows) {
        EXPECT_GE(r.abs_err, 0.0);
        EXPECT_NEAR(r.R_BMinv, r.R_MinvB, 1e-9);
    }
    std::ostringstream a, b;
    write_report_csv(a, rep);
    write_report_csv(b, convergence_sweep(example1(QChoice::W3), {20, 40, 80, 160}, opt));
    EXPECT_EQ(a.str(), b.str());
    EXPECT_EQ(a.str().substr(0, a.str().find('\n')), "N,R_N_BMinv,R_N_MinvB,abs_err,fitted_order,cond_M,runtime_ms");
}

TEST(Sweep, ComputedReference) {
    SweepOptions opt;
    opt.reference_N = 200;
    const auto rep = convergence_sweep(example2(std::numbers::pi), {20, 40, 60, 80}, opt);
    EXPECT_EQ(rep.reference_source, "N=200");
    EXPECT_NEAR(rep.reference, 1.0, 1e-10);
}

TEST(Sweep, RecordsFailuresWithoutAborting) {
    auto c = example1(QChoice::Analytic);
    c.delta = [](double) -> Eigen::MatrixXd { return Eigen::MatrixXd::Zero(2, 2); };
    SweepOptions opt;
    opt.exact = 1.0;
    const auto rep = convergence_sweep(c, {4, 8}, opt);
    ASSERT_EQ(rep.rows.size(), 2u);
    for (const auto& r : rep.rows) {
        EXPECT_FALSE(r.error.empty());
        EXPECT_TRUE(std::isnan(r.R_BMinv));
    }
}

TEST(Sweep, ReferenceSelfConsistency) {
    // |R_N - R_2N| decreases over the asymptotic window, allowing one
    // rounding plateau step.
    struct Case {
        CoefficientSet c;
        std::vector<int> N;
    };
    const std::vector<Case> cases{{example1(QChoice::W3), {20, 30, 40, 60, 80}},
                                  {example2(std::numbers::pi), {20, 30, 40, 60, 80}},
                                  {example1(QChoice::Analytic, 30.0, 100.0, 6), {4, 6, 8, 10, 12}}};
    for (const auto& cs : cases) {
        std::vector<double> d;
        for (int n : cs.N) {
            d.push_back(std::abs(compute_R(cs.c, n, NodeFamily::ZerosPlusLeftEndpoint).R -
                                 compute_R(cs.c, 2 * n, NodeFamily::ZerosPlusLeftEndpoint).R));
        }
        int bumps = 0;
        for (std::size_t i = 1; i < d.size(); ++i) bumps += d[i] > d[i - 1];
        EXPECT_LE(bumps, 1);
    }
}

TEST(Execution, ParallelForCoversEveryIndex) {
    std::vector<int> hits(37, 0);
    parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; });
    for (int h : hits) EXPECT_EQ(h, 1);
    EXPECT_GE(worker_count(5), 1u);
}
