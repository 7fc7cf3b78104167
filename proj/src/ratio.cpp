#include "rankmctp/ratio.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include "rankmctp/rng.hpp"

namespace rankmctp {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kEpsVar = 1e-12;
constexpr double kMaxDropFraction = 0.01;
constexpr double kNearZeroThreshold = 2.0;

bool is_degenerate_pair(const RatioPair& pr) {
  return (pr.c - pr.d).lpNorm<Eigen::Infinity>() <= 1e-12;
}

long accept_count(std::size_t n, double alpha) {
  const double m = static_cast<double>(n) + 1.0;
  long k = static_cast<long>(std::floor(alpha * m)) - 1;
  while ((static_cast<double>(k) + 2.0) / m <= alpha) ++k;
  while (k >= 0 && (static_cast<double>(k) + 1.0) / m > alpha) --k;
  return k;
}

double critical_from_count(const std::vector<double>& sorted, long k) {
  const auto n = static_cast<long>(sorted.size());
  long j = n - k;
  if (j <= 0) return sorted[0];
  const double above = std::nextafter(sorted[n - 1],
                                      std::numeric_limits<double>::infinity());
  if (j >= n) return above;
  if (sorted[j - 1] < sorted[j]) return sorted[j];
  const double v = sorted[j];
  while (j < n && sorted[j] == v) ++j;
  return j < n ? sorted[j] : above;
}

}  // namespace

std::string to_string(FiellerCase c) {
  switch (c) {
    case FiellerCase::Finite: return "finite";
    case FiellerCase::Exterior: return "exterior";
    case FiellerCase::WholeLine: return "whole-line";
    case FiellerCase::DegeneratePoint: return "degenerate-point";
  }
  return "unknown";
}

Eigen::VectorXd ratio_statistics(const Eigen::VectorXd& p_hat,
                                 const Eigen::MatrixXd& v_hat,
                                 const RatioSpec& spec,
                                 const std::vector<double>& theta, int n_total,
                                 double eps_var) {
  const auto q = spec.pairs.size();
  if (theta.size() != q)
    throw validation_error("DIMENSION_MISMATCH", "theta size != ratio count");
  Eigen::VectorXd t(static_cast<Eigen::Index>(q));
  const double sqrt_n = std::sqrt(static_cast<double>(n_total));
  for (std::size_t l = 0; l < q; ++l) {
    const Eigen::VectorXd g = theta[l] * spec.pairs[l].d - spec.pairs[l].c;
    const double v = g.dot(v_hat * g);
    if (!(v > eps_var))
      throw degenerate_error("DEGENERATE_VARIANCE",
                             "zero variance for ratio '" + spec.pairs[l].label +
                                 "'");
    t(static_cast<Eigen::Index>(l)) = sqrt_n * g.dot(p_hat) / std::sqrt(v);
  }
  return t;
}

RatioInterval fieller_interval(const Eigen::VectorXd& p_hat,
                               const Eigen::MatrixXd& v_hat,
                               const RatioPair& pair, double z, int n_total) {
  RatioInterval iv;
  iv.label = pair.label;
  iv.margin = pair.margin;
  const double sqrt_n = std::sqrt(static_cast<double>(n_total));
  const double den = pair.d.dot(p_hat);
  if (std::abs(den) <= 1e-12)
    throw degenerate_error("ZERO_DENOMINATOR",
                           "denominator estimate vanishes for ratio '" +
                               pair.label + "'");
  const bool degen = is_degenerate_pair(pair);
  iv.theta_hat = degen ? 1.0 : pair.c.dot(p_hat) / den;

  const double cp = sqrt_n * pair.c.dot(p_hat);
  const double dp = sqrt_n * pair.d.dot(p_hat);
  const double vdd = pair.d.dot(v_hat * pair.d);
  const double vcd = pair.c.dot(v_hat * pair.d);
  const double vcc = pair.c.dot(v_hat * pair.c);
  const double z2 = z * z;

  iv.a_coef = dp * dp - z2 * vdd;
  iv.b_coef = -2.0 * (cp * dp - z2 * vcd);
  iv.c_coef = cp * cp - z2 * vcc;
  iv.denominator_near_zero =
      vdd > 0 && std::abs(dp) / std::sqrt(vdd) < kNearZeroThreshold;

  if (degen) {
    iv.fieller_case = FiellerCase::DegeneratePoint;
    iv.lower = iv.upper = 1.0;
    iv.p_one_sided = kNaN;
    return iv;
  }
  const double disc = iv.b_coef * iv.b_coef - 4.0 * iv.a_coef * iv.c_coef;
  if (iv.a_coef > 0) {
    iv.fieller_case = FiellerCase::Finite;
    const double root = std::sqrt(std::max(disc, 0.0));
    iv.lower = (-iv.b_coef - root) / (2.0 * iv.a_coef);
    iv.upper = (-iv.b_coef + root) / (2.0 * iv.a_coef);
  } else if (disc > 0) {
    iv.fieller_case = FiellerCase::Exterior;
    const double root = std::sqrt(disc);
    iv.lower = (-iv.b_coef + root) / (2.0 * iv.a_coef);
    iv.upper = (-iv.b_coef - root) / (2.0 * iv.a_coef);
  } else {
    iv.fieller_case = FiellerCase::WholeLine;
    iv.lower = -std::numeric_limits<double>::infinity();
    iv.upper = std::numeric_limits<double>::infinity();
  }
  return iv;
}

RatioResult fieller_scis(const Dataset& data, const RatioSpec& spec,
                         const BootstrapConfig& cfg) {
  cfg.validate();
  if (spec.pairs.empty())
    throw validation_error("BAD_CONFIG", "no ratio rows supplied");
  const int ad = data.design().cells();
  for (const auto& pr : spec.pairs)
    if (pr.c.size() != ad || pr.d.size() != ad)
      throw validation_error("DIMENSION_MISMATCH",
                             "ratio row does not match design");

  const auto w = pairwise_effects(data);
  const WildEngine engine(data, w);
  const Eigen::VectorXd& p = engine.p_hat();
  const Eigen::MatrixXd& v = engine.v_hat();
  const double n_d = static_cast<double>(engine.n_total());
  const double sqrt_n = std::sqrt(n_d);
  const auto q = spec.pairs.size();

  // Plug-in ratio estimates; linear forms for the replicate statistics.
  std::vector<double> theta_hat(q);
  std::vector<Eigen::VectorXd> g(q);
  std::vector<bool> degen(q);
  int active = 0;
  for (std::size_t l = 0; l < q; ++l) {
    degen[l] = is_degenerate_pair(spec.pairs[l]);
    const double den = spec.pairs[l].d.dot(p);
    if (std::abs(den) <= 1e-12)
      throw degenerate_error("ZERO_DENOMINATOR",
                             "denominator estimate vanishes for ratio '" +
                                 spec.pairs[l].label + "'");
    theta_hat[l] = degen[l] ? 1.0 : spec.pairs[l].c.dot(p) / den;
    g[l] = theta_hat[l] * spec.pairs[l].d - spec.pairs[l].c;
    if (!degen[l]) ++active;
  }

  // Replicate pass: two-sided maxima for the quantile, signed maxima for the
  // one-sided p-values. Same substream scheme as the bootstrap module.
  const int b_total = cfg.replicates;
  std::vector<double> max_abs(b_total), max_signed(b_total);
  auto run_one = [&](int b) {
    const auto rep = engine.replicate(
        substream_seed(cfg.seed, static_cast<std::uint64_t>(b)),
        cfg.fixed_variance);
    double worst = 0, worst_signed = -std::numeric_limits<double>::infinity();
    for (std::size_t l = 0; l < q; ++l) {
      if (degen[l]) continue;
      const double vv = g[l].dot(rep.v_eps * g[l]);
      if (!(vv > kEpsVar)) {
        worst = kNaN;
        break;
      }
      const double t = sqrt_n * g[l].dot(rep.p_eps) / std::sqrt(vv);
      worst = std::max(worst, std::abs(t));
      worst_signed = std::max(worst_signed, t);
    }
    max_abs[b] = worst;
    max_signed[b] = std::isnan(worst) ? kNaN : worst_signed;
  };

  if (active > 0) {
    int nthreads = cfg.threads > 0
                       ? cfg.threads
                       : static_cast<int>(std::thread::hardware_concurrency());
    nthreads = std::max(1, std::min(nthreads, b_total));
    if (nthreads == 1) {
      for (int b = 0; b < b_total; ++b) run_one(b);
    } else {
      std::vector<std::thread> pool;
      std::atomic<int> next{0};
      for (int t = 0; t < nthreads; ++t)
        pool.emplace_back([&] {
          for (int b = next.fetch_add(1); b < b_total; b = next.fetch_add(1))
            run_one(b);
        });
      for (auto& th : pool) th.join();
    }
  }

  std::vector<double> kept_abs, kept_signed;
  kept_abs.reserve(max_abs.size());
  kept_signed.reserve(max_signed.size());
  int dropped = 0;
  for (int b = 0; b < b_total; ++b) {
    if (std::isnan(max_abs[b])) {
      ++dropped;
    } else {
      kept_abs.push_back(max_abs[b]);
      kept_signed.push_back(max_signed[b]);
    }
  }
  if (active > 0 && dropped > kMaxDropFraction * b_total)
    throw degenerate_error("TOO_MANY_DEGENERATE_REPLICATES",
                           std::to_string(dropped) + " of " +
                               std::to_string(b_total) +
                               " replicates were degenerate");
  std::sort(kept_abs.begin(), kept_abs.end());
  std::sort(kept_signed.begin(), kept_signed.end());

  RatioResult out;
  out.alpha = cfg.alpha;
  out.replicates = b_total;
  out.quantile = active > 0
                     ? critical_from_count(kept_abs,
                                           accept_count(kept_abs.size(), cfg.alpha))
                     : 0.0;
  const double bm = static_cast<double>(kept_signed.size()) + 1.0;

  for (std::size_t l = 0; l < q; ++l) {
    const auto& pr = spec.pairs[l];
    RatioInterval iv =
        fieller_interval(p, v, pr, out.quantile, engine.n_total());
    if (degen[l]) {
      out.intervals.push_back(iv);
      continue;
    }

    // One-sided test of H1: theta < margin via the signed replicate maxima.
    const Eigen::VectorXd g0 = pr.margin * pr.d - pr.c;
    const double v0 = g0.dot(v * g0);
    if (v0 > kEpsVar && !kept_signed.empty()) {
      const double t0 = sqrt_n * g0.dot(p) / std::sqrt(v0);
      const auto it =
          std::lower_bound(kept_signed.begin(), kept_signed.end(), t0);
      iv.p_one_sided =
          (1.0 + static_cast<double>(kept_signed.end() - it)) / bm;
    } else {
      iv.p_one_sided = kNaN;
    }
    out.intervals.push_back(iv);
  }
  return out;
}

RatioSpec load_ratio_tsv(const std::string& path, int ad) {
  std::ifstream in(path);
  if (!in) throw validation_error("NO_SUCH_FILE", "cannot open " + path);
  std::vector<std::pair<std::string, Eigen::VectorXd>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, '\t')) fields.push_back(f);
    std::string label;
    std::size_t start = 0;
    if (static_cast<int>(fields.size()) == ad + 1) {
      label = fields[0];
      start = 1;
    } else if (static_cast<int>(fields.size()) != ad) {
      throw validation_error("BAD_ROW", "line " + std::to_string(lineno) +
                                            ": expected " + std::to_string(ad) +
                                            " coefficients");
    }
    Eigen::VectorXd v(ad);
    for (int j = 0; j < ad; ++j) {
      try {
        std::size_t pos = 0;
        v(j) = std::stod(fields[start + j], &pos);
        if (pos != fields[start + j].size()) throw std::invalid_argument("");
      } catch (const std::exception&) {
        throw validation_error("NON_NUMERIC_VALUE",
                               "line " + std::to_string(lineno) +
                                   ": bad coefficient '" + fields[start + j] +
                                   "'");
      }
    }
    rows.emplace_back(label, v);
  }
  if (rows.empty() || rows.size() % 2 != 0)
    throw validation_error("BAD_ROW",
                           "ratio file needs numerator/denominator row pairs");
  RatioSpec spec;
  for (std::size_t i = 0; i < rows.size(); i += 2) {
    RatioPair pr;
    pr.label = rows[i].first.empty()
                   ? "ratio" + std::to_string(i / 2 + 1)
                   : rows[i].first;
    pr.c = rows[i].second;
    pr.d = rows[i + 1].second;
    spec.pairs.push_back(std::move(pr));
  }
  return spec;
}

}  // namespace rankmctp
