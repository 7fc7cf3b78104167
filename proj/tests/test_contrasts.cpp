#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "helpers.hpp"
#include "rankmctp/contrasts.hpp"

using namespace rankmctp;

namespace {

void check_rows_sum_zero(const ContrastFamily& fam) {
  for (int r = 0; r < fam.c.rows(); ++r) {
    CHECK(std::abs(fam.c.row(r).sum()) <= 1e-12);
    CHECK(fam.c.row(r).cwiseAbs().maxCoeff() > 0.0);
  }
  CHECK(fam.labels.size() == static_cast<std::size_t>(fam.c.rows()));
}

}  // namespace

TEST_CASE("one-factor families have the documented shapes and entries") {
  const int m = 4;
  const std::vector<int> sizes{5, 7, 6, 2};

  const auto tukey = build_contrast(ContrastKind::Tukey, m);
  CHECK(tukey.c.rows() == m * (m - 1) / 2);
  CHECK(tukey.c(0, 0) == -1);
  CHECK(tukey.c(0, 1) == 1);
  check_rows_sum_zero(tukey);

  const auto dunnett = build_contrast(ContrastKind::Dunnett, m);
  CHECK(dunnett.c.rows() == m - 1);
  for (int r = 0; r < m - 1; ++r) {
    CHECK(dunnett.c(r, 0) == -1);
    CHECK(dunnett.c(r, r + 1) == 1);
  }
  check_rows_sum_zero(dunnett);

  const auto average = build_contrast(ContrastKind::Average, m);
  CHECK(average.c.rows() == m);
  CHECK(average.c(1, 1) == 1.0);
  CHECK(average.c(1, 0) == doctest::Approx(-1.0 / 3));
  check_rows_sum_zero(average);

  const auto cp = build_contrast(ContrastKind::Changepoint, m, sizes);
  CHECK(cp.c.rows() == m - 1);
  // First cut: -n1/n1 on the left, n_i/(n2+n3+n4) on the right.
  CHECK(cp.c(0, 0) == doctest::Approx(-1.0));
  CHECK(cp.c(0, 1) == doctest::Approx(7.0 / 15));
  CHECK(cp.c(0, 3) == doctest::Approx(2.0 / 15));
  check_rows_sum_zero(cp);

  const auto centering = build_contrast(ContrastKind::Centering, m);
  const Eigen::MatrixXd want = Eigen::MatrixXd::Identity(m, m) -
                               Eigen::MatrixXd::Constant(m, m, 1.0 / m);
  CHECK((centering.c - want).cwiseAbs().maxCoeff() == 0.0);
  check_rows_sum_zero(centering);

  CHECK_THROWS_AS(build_contrast(ContrastKind::Tukey, 1), validation_error);
}

TEST_CASE("factorial lifting via Kronecker structure") {
  Design design{3, 2, {4, 4, 4}};
  const auto base_a = build_contrast(ContrastKind::Tukey, 3);
  const auto main_a = factorial_contrast(FactorialEffect::MainA, base_a, design);
  CHECK(main_a.c.rows() == 3);
  CHECK(main_a.c.cols() == 6);
  // Row "group2 vs group1": -1/2 on group-1 cells, +1/2 on group-2 cells.
  CHECK(main_a.c(0, 0) == doctest::Approx(-0.5));
  CHECK(main_a.c(0, 2) == doctest::Approx(0.5));
  CHECK(main_a.c(0, 4) == 0.0);

  const auto base_d = build_contrast(ContrastKind::Tukey, 2);
  const auto main_d = factorial_contrast(FactorialEffect::MainD, base_d, design);
  CHECK(main_d.c.rows() == 1);
  CHECK(main_d.c(0, 0) == doctest::Approx(-1.0 / 3));
  CHECK(main_d.c(0, 1) == doctest::Approx(1.0 / 3));

  const auto inter =
      factorial_contrast(FactorialEffect::Interaction, ContrastFamily{}, design);
  CHECK(inter.c.rows() == 6);
  // P_a kron P_d annihilates main effects: row sums and within-block sums 0.
  check_rows_sum_zero(inter);
  for (int r = 0; r < 6; ++r)
    for (int i = 0; i < 3; ++i)
      CHECK(std::abs(inter.c.row(r).segment(2 * i, 2).sum()) <= 1e-12);
}

TEST_CASE("projection matches the explicit-inverse oracle") {
  std::mt19937_64 rng(21);
  for (int rep = 0; rep < 20; ++rep) {
    // Random full-row-rank contrast matrix (rows centered).
    const int m = 5, q = 3;
    Eigen::MatrixXd c = Eigen::MatrixXd::Random(q, m);
    c = (c.colwise() - c.rowwise().mean()).eval();
    ContrastFamily fam;
    fam.c = c;
    fam.labels.assign(q, "x");
    const Eigen::MatrixXd cc = c * c.transpose();
    const Eigen::MatrixXd want = c.transpose() * cc.inverse() * c;
    const Eigen::MatrixXd got = projection(fam);
    CHECK((got - want).cwiseAbs().maxCoeff() <= 1e-10);
    // Idempotent, symmetric, scale-invariant.
    CHECK((got * got - got).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((got - got.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
    ContrastFamily scaled;
    scaled.c = 3.7 * c;
    scaled.labels = fam.labels;
    CHECK((projection(scaled) - got).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("projection of a centering matrix is itself") {
  const auto p = build_contrast(ContrastKind::Centering, 4);
  CHECK((projection(p) - p.c).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("user contrast file loading and validation") {
  const char* path = "user_contrast_test.tsv";
  {
    std::ofstream out(path);
    out << "# comment\n";
    out << "1 -1 0 0\n0 0 1 -1\n";
  }
  const auto fam = load_contrast_tsv(path, 4);
  CHECK(fam.c.rows() == 2);
  CHECK(fam.c(1, 2) == 1.0);

  {
    std::ofstream out(path);
    out << "1 1 0 0\n";
  }
  CHECK_THROWS_AS(load_contrast_tsv(path, 4), validation_error);
  CHECK_THROWS_AS(load_contrast_tsv("missing_file.tsv", 4), validation_error);
  std::remove(path);
}
