#include <doctest.h>

#include <cmath>

#include "rankmctp/distributions.hpp"
#include "rankmctp/rng.hpp"
#include "rankmctp/simulation.hpp"

using namespace rankmctp;

TEST_CASE("covariance structures") {
  // Compound symmetry is the identity at the within-subject level.
  CHECK((cov_matrix(CovStructure::CS, 4, 0.6) -
         Eigen::MatrixXd::Identity(4, 4))
            .cwiseAbs()
            .maxCoeff() == 0.0);

  Eigen::MatrixXd ar = cov_matrix(CovStructure::AR, 3, 0.5);
  for (int l = 0; l < 3; ++l)
    for (int m = 0; m < 3; ++m)
      CHECK(ar(l, m) ==
            doctest::Approx(std::pow(0.5, std::abs(l - m))).epsilon(1e-14));

  Eigen::MatrixXd tpl = cov_matrix(CovStructure::TPL, 3, 0.6);
  Eigen::MatrixXd expected(3, 3);
  expected << 3, 2, 1, 2, 3, 2, 1, 2, 3;
  CHECK((tpl - expected).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("symmetric sqrt reproduces the covariance") {
  for (int d = 2; d <= 8; ++d) {
    for (CovStructure cs : {CovStructure::CS, CovStructure::AR, CovStructure::TPL}) {
      Eigen::MatrixXd v = cov_matrix(cs, d, 0.6);
      Eigen::MatrixXd r = symmetric_sqrt(v);
      CHECK((r * r - v).cwiseAbs().maxCoeff() < 1e-10);
      CHECK((r - r.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("generator shape, determinism, and zero-noise limit") {
  SimConfig cfg;
  apply_setting(cfg, "s2");
  CHECK(cfg.a == 2);
  CHECK(cfg.d == 4);
  cfg.n = 6;
  cfg.seed = 42;

  Rng r1(7), r2(7);
  Dataset d1 = generate(cfg, r1);
  Dataset d2 = generate(cfg, r2);
  REQUIRE(d1.design().a == 2);
  REQUIRE(d1.design().d == 4);
  for (int i = 0; i < 2; ++i) {
    REQUIRE(d1.group(i).rows() == 6);
    CHECK((d1.group(i) - d2.group(i)).cwiseAbs().maxCoeff() == 0.0);
  }

  // sigma = c = 0 and delta fixed gives the deterministic shift.
  SimConfig flat = cfg;
  flat.sigma = {0, 0};
  flat.c_subject = {0, 0};
  flat.delta = Eigen::VectorXd::LinSpaced(8, 0.0, 0.7);
  Rng r3(9);
  Dataset d3 = generate(flat, r3);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 4; ++j)
      for (int k = 0; k < 6; ++k)
        CHECK(d3.value(i, j, k) ==
              doctest::Approx(flat.delta(i * 4 + j)).epsilon(1e-14));
}

TEST_CASE("generated data match the target covariance") {
  SimConfig cfg;
  apply_setting(cfg, "s1");
  cfg.cov = CovStructure::AR;
  cfg.rho = 0.6;
  cfg.n = 4000;
  cfg.sigma = {1.0, 1.5, 1.0};
  cfg.c_subject = {0.5, 0.5, 1.0};
  Rng rng(2026);
  Dataset data = generate(cfg, rng);
  Eigen::MatrixXd v = cov_matrix(CovStructure::AR, cfg.d, cfg.rho);
  for (int i = 0; i < cfg.a; ++i) {
    Eigen::MatrixXd x = data.group(i);
    Eigen::RowVectorXd mean = x.colwise().mean();
    Eigen::MatrixXd centered = x.rowwise() - mean;
    Eigen::MatrixXd emp =
        centered.transpose() * centered / (x.rows() - 1.0);
    // Expected: sigma_i^2 V + c_i^2 J (subject effect adds a constant block).
    Eigen::MatrixXd target =
        cfg.sigma[i] * cfg.sigma[i] * v +
        cfg.c_subject[i] * cfg.c_subject[i] *
            Eigen::MatrixXd::Ones(cfg.d, cfg.d);
    // 4 MC standard errors, roughly var(cov entry) ~ c / n.
    const double tol = 4.0 * 2.5 / std::sqrt(static_cast<double>(cfg.n));
    CHECK((emp - target).cwiseAbs().maxCoeff() < tol);
    CHECK(mean.cwiseAbs().maxCoeff() < tol);
  }
}

TEST_CASE("type1 study output shape and determinism") {
  SimConfig cfg;
  apply_setting(cfg, "s2");
  cfg.n = 8;
  cfg.runs = 30;
  cfg.bootstrap = 200;
  cfg.quantile_mc = 2000;
  cfg.seed = 5150;
  cfg.effect = FactorialEffect::MainA;
  cfg.threads = 1;
  std::vector<SimTest> tests{SimTest::Mctp, SimTest::Ats};
  std::vector<ContrastKind> kinds{ContrastKind::Tukey};
  StudyReport one = type1_study(cfg, tests, kinds);
  REQUIRE(one.rows.size() == 2);  // tests x kinds
  for (const auto& row : one.rows) {
    CHECK(row.runs == 30);
    CHECK(row.rejections >= 0);
    CHECK(row.rejections <= row.runs);
    CHECK(row.rate ==
          doctest::Approx(static_cast<double>(row.rejections) / row.runs)
              .epsilon(1e-12));
    CHECK(row.mc_se >= 0);
  }
  cfg.threads = 4;
  StudyReport four = type1_study(cfg, tests, kinds);
  REQUIRE(four.rows.size() == one.rows.size());
  for (std::size_t i = 0; i < one.rows.size(); ++i) {
    CHECK(one.rows[i].rejections == four.rows[i].rejections);
    CHECK(one.rows[i].test == four.rows[i].test);
  }
}

TEST_CASE("power study is monotone in an obvious strong-signal case") {
  SimConfig cfg;
  apply_setting(cfg, "s1");
  cfg.n = 10;
  cfg.runs = 60;
  cfg.quantile_mc = 2000;
  cfg.seed = 6021;
  cfg.effect = FactorialEffect::MainA;
  cfg.threads = 0;
  Eigen::VectorXd pattern = shift_pattern_main_a(cfg.a, cfg.d);
  StudyReport rep = power_study(cfg, {SimTest::Mctp}, pattern, {0.0, 2.0});
  REQUIRE(rep.rows.size() == 2);
  CHECK(rep.rows[0].delta == 0.0);
  CHECK(rep.rows[1].delta == 2.0);
  // A two-sigma shift on the last group must reject far more often than null.
  CHECK(rep.rows[1].rate > rep.rows[0].rate + 0.3);
}

TEST_CASE("shift patterns load the documented cells") {
  Eigen::VectorXd pa = shift_pattern_main_a(3, 3);
  REQUIRE(pa.size() == 9);
  for (int idx = 0; idx < 9; ++idx)
    CHECK(pa(idx) == (idx >= 6 ? 1.0 : 0.0));
  Eigen::VectorXd pd = shift_pattern_main_d(2, 4);
  REQUIRE(pd.size() == 8);
  for (int idx = 0; idx < 8; ++idx)
    CHECK(pd(idx) == (idx % 4 == 3 ? 1.0 : 0.0));
}

TEST_CASE("parsers round trip") {
  CHECK(parse_cov_structure("ar") == CovStructure::AR);
  CHECK(parse_sim_test("boot-mctp") == SimTest::BootMctp);
  CHECK(to_string(CovStructure::TPL) == "tpl");
  CHECK(to_string(SimTest::BootAts) == "boot-ats");
  CHECK_THROWS_AS(parse_cov_structure("nope"), validation_error);
  CHECK_THROWS_AS(parse_sim_test("nope"), validation_error);
}
