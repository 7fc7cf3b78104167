#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "rankmctp/effects.hpp"
#include "rankmctp/ratio.hpp"

using namespace rankmctp;

namespace {

// Studentized statistic for one ratio row at theta, evaluated directly.
double stat_at(const Eigen::VectorXd& p, const Eigen::MatrixXd& v,
               const RatioPair& pair, double theta, int n) {
  const Eigen::VectorXd g = theta * pair.d - pair.c;
  const double var = g.transpose() * v * g;
  return std::sqrt(static_cast<double>(n)) * g.dot(p) / std::sqrt(var);
}

RatioPair random_pair(std::mt19937_64& rng, int ad) {
  std::normal_distribution<double> nd;
  RatioPair pair;
  pair.c = Eigen::VectorXd::NullaryExpr(ad, [&](int) { return nd(rng); });
  pair.d = Eigen::VectorXd::NullaryExpr(ad, [&](int) { return nd(rng); });
  // Contrast rows sum to zero.
  pair.c.array() -= pair.c.mean();
  pair.d.array() -= pair.d.mean();
  pair.label = "r";
  return pair;
}

// Synthetic estimate/covariance with a small covariance scale, so that
// denominators are clearly estimable and most intervals come out finite.
struct Problem {
  Eigen::VectorXd p;
  Eigen::MatrixXd v;
  int n = 50;
};

Problem random_problem(std::mt19937_64& rng, int dim) {
  std::normal_distribution<double> nd;
  Problem pr;
  pr.p = Eigen::VectorXd(dim);
  for (int i = 0; i < dim; ++i)
    pr.p(i) = 0.2 + 0.6 * (0.5 + 0.5 * std::tanh(nd(rng)));
  Eigen::MatrixXd a(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) a(i, j) = nd(rng);
  pr.v = 0.05 * a * a.transpose() / dim;
  return pr;
}

}  // namespace

TEST_CASE("ratio statistics match direct evaluation") {
  std::mt19937_64 rng(2601);
  for (int rep = 0; rep < 20; ++rep) {
    Dataset data = testutil::random_dataset(rng, 2, 3, 7, true, 4);
    const int ad = data.design().cells();
    PairwiseEffects w = pairwise_effects(data);
    EffectVector p = relative_effects(w, data.design());
    CovarianceEstimate cov = estimate_covariance(data, w);
    RatioSpec spec;
    std::vector<double> theta;
    std::uniform_real_distribution<double> ud(0.5, 1.5);
    for (int l = 0; l < 3; ++l) {
      spec.pairs.push_back(random_pair(rng, ad));
      theta.push_back(ud(rng));
    }
    Eigen::VectorXd t =
        ratio_statistics(p.p, cov.v, spec, theta, data.design().total());
    REQUIRE(t.size() == 3);
    for (int l = 0; l < 3; ++l)
      CHECK(t(l) == doctest::Approx(stat_at(p.p, cov.v, spec.pairs[l], theta[l],
                                            data.design().total()))
                        .epsilon(1e-12));
  }
}

TEST_CASE("fieller interval agrees with a bisection oracle") {
  // For each random problem, compare the Fieller endpoints with roots of
  // h(theta) = stat(theta)^2 - z^2 located by scan-and-bisect.
  std::mt19937_64 rng(2602);
  std::uniform_real_distribution<double> zd(1.5, 3.0);
  int finite_seen = 0;
  for (int rep = 0; rep < 100; ++rep) {
    Problem pr = random_problem(rng, 4);
    RatioPair pair = random_pair(rng, 4);
    if (std::abs(pair.d.dot(pr.p)) < 0.05) continue;
    const double z = zd(rng);
    RatioInterval iv = fieller_interval(pr.p, pr.v, pair, z, pr.n);
    if (iv.fieller_case != FiellerCase::Finite &&
        iv.fieller_case != FiellerCase::Exterior)
      continue;
    if (iv.fieller_case == FiellerCase::Finite) ++finite_seen;
    auto h = [&](double th) {
      const double s = stat_at(pr.p, pr.v, pair, th, pr.n);
      return s * s - z * z;
    };
    const double span =
        10.0 * (std::abs(iv.lower) + std::abs(iv.upper) + 1.0);
    std::vector<double> roots;
    const int steps = 40000;
    double prev_t = -span, prev_h = h(prev_t);
    for (int s = 1; s <= steps && roots.size() < 2; ++s) {
      const double t = -span + 2.0 * span * s / steps;
      const double ht = h(t);
      if (prev_h * ht <= 0 && prev_h != ht) {
        double lo = prev_t, hi = t;
        for (int it = 0; it < 200; ++it) {
          const double mid = 0.5 * (lo + hi);
          (h(lo) * h(mid) <= 0 ? hi : lo) = mid;
        }
        roots.push_back(0.5 * (lo + hi));
      }
      prev_t = t;
      prev_h = ht;
    }
    REQUIRE(roots.size() == 2);
    CHECK(std::abs(std::min(roots[0], roots[1]) - iv.lower) < 1e-8);
    CHECK(std::abs(std::max(roots[0], roots[1]) - iv.upper) < 1e-8);
    if (iv.fieller_case == FiellerCase::Finite) {
      CHECK(iv.lower <= iv.theta_hat + 1e-10);
      CHECK(iv.theta_hat <= iv.upper + 1e-10);
    }
  }
  CHECK(finite_seen > 50);
}

TEST_CASE("identical numerator and denominator degenerates to one") {
  std::mt19937_64 rng(2603);
  Problem pr = random_problem(rng, 4);
  RatioPair pair = random_pair(rng, 4);
  pair.d = pair.c;
  RatioInterval iv = fieller_interval(pr.p, pr.v, pair, 2.0, pr.n);
  CHECK(iv.fieller_case == FiellerCase::DegeneratePoint);
  CHECK(iv.theta_hat == 1.0);
  CHECK(iv.lower == 1.0);
  CHECK(iv.upper == 1.0);
}

TEST_CASE("fieller intervals are scale equivariant") {
  // Scaling the numerator row by 2 (exact in floating point) doubles theta
  // and both endpoints; scaling the denominator by 2 halves them.
  std::mt19937_64 rng(2604);
  int checked = 0;
  for (int rep = 0; rep < 40; ++rep) {
    Problem pr = random_problem(rng, 4);
    RatioPair pair = random_pair(rng, 4);
    if (std::abs(pair.d.dot(pr.p)) < 0.05) continue;
    RatioInterval base = fieller_interval(pr.p, pr.v, pair, 2.0, pr.n);
    if (base.fieller_case != FiellerCase::Finite) continue;
    ++checked;
    RatioPair scaled = pair;
    scaled.c = 2.0 * pair.c;
    RatioInterval up = fieller_interval(pr.p, pr.v, scaled, 2.0, pr.n);
    CHECK(up.theta_hat == 2.0 * base.theta_hat);
    CHECK(up.lower == doctest::Approx(2.0 * base.lower).epsilon(1e-12));
    CHECK(up.upper == doctest::Approx(2.0 * base.upper).epsilon(1e-12));
    scaled = pair;
    scaled.d = 2.0 * pair.d;
    RatioInterval down = fieller_interval(pr.p, pr.v, scaled, 2.0, pr.n);
    CHECK(down.theta_hat == 0.5 * base.theta_hat);
    CHECK(down.lower == doctest::Approx(0.5 * base.lower).epsilon(1e-12));
    CHECK(down.upper == doctest::Approx(0.5 * base.upper).epsilon(1e-12));
  }
  CHECK(checked > 10);
}

TEST_CASE("simultaneous fieller result is deterministic and coherent") {
  std::mt19937_64 rng(2605);
  Dataset data = testutil::random_dataset(rng, 2, 3, 9, true, 6);
  const int ad = data.design().cells();
  RatioSpec spec;
  for (int l = 0; l < 2; ++l) spec.pairs.push_back(random_pair(rng, ad));
  BootstrapConfig cfg;
  cfg.replicates = 400;
  cfg.seed = 55;
  cfg.threads = 1;
  RatioResult one = fieller_scis(data, spec, cfg);
  cfg.threads = 4;
  RatioResult four = fieller_scis(data, spec, cfg);
  REQUIRE(one.intervals.size() == 2);
  CHECK(one.quantile == four.quantile);
  PairwiseEffects w = pairwise_effects(data);
  EffectVector p = relative_effects(w, data.design());
  CovarianceEstimate cov = estimate_covariance(data, w);
  for (std::size_t l = 0; l < one.intervals.size(); ++l) {
    const RatioInterval& a = one.intervals[l];
    const RatioInterval& b = four.intervals[l];
    CHECK(a.fieller_case == b.fieller_case);
    CHECK((a.lower == b.lower || (std::isinf(a.lower) && std::isinf(b.lower))));
    CHECK((a.upper == b.upper || (std::isinf(a.upper) && std::isinf(b.upper))));
    CHECK(a.p_one_sided == b.p_one_sided);
    CHECK(a.p_one_sided >= 0);
    CHECK(a.p_one_sided <= 1);
    // The simultaneous interval must match the single-row construction at
    // the simultaneous quantile.
    RatioInterval direct = fieller_interval(p.p, cov.v, spec.pairs[l],
                                            one.quantile,
                                            data.design().total());
    CHECK(a.fieller_case == direct.fieller_case);
    if (std::isfinite(a.lower))
      CHECK(a.lower == doctest::Approx(direct.lower).epsilon(1e-12));
    else
      CHECK(std::isinf(direct.lower));
    if (std::isfinite(a.upper))
      CHECK(a.upper == doctest::Approx(direct.upper).epsilon(1e-12));
    else
      CHECK(std::isinf(direct.upper));
  }
}
