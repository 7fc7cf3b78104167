#include "rankmctp/bootstrap.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <thread>

#include "rankmctp/distributions.hpp"
#include "rankmctp/rng.hpp"

namespace rankmctp {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kEpsVar = 1e-12;
constexpr double kMaxDropFraction = 0.01;

// Largest count K with (1 + K) / (n + 1) <= alpha (may be -1).
long accept_count(std::size_t n, double alpha) {
  const double m = static_cast<double>(n) + 1.0;
  long k = static_cast<long>(std::floor(alpha * m)) - 1;
  while ((static_cast<double>(k) + 2.0) / m <= alpha) ++k;
  while (k >= 0 && (static_cast<double>(k) + 1.0) / m > alpha) --k;
  return k;
}

// Smallest sample value z with #{m >= z} <= k; if none qualifies, the next
// representable value above the maximum. Same tie handling as the
// equicoordinate critical value, but with an explicit count budget.
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

// P-value (1 + #{m >= t}) / (n + 1), clamped so that p <= alpha is exactly
// equivalent to t >= z (z from critical_from_count with budget k).
double boot_pvalue(const std::vector<double>& sorted, long k, double z,
                   double t) {
  const double m = static_cast<double>(sorted.size()) + 1.0;
  const auto it = std::lower_bound(sorted.begin(), sorted.end(), t);
  double p = (1.0 + static_cast<double>(sorted.end() - it)) / m;
  if (t >= z)
    p = std::min(p, (static_cast<double>(k) + 1.0) / m);
  else
    p = std::max(p, (static_cast<double>(k) + 2.0) / m);
  return std::min(std::max(p, 0.0), 1.0);
}

std::vector<double> drop_nan_sorted(const std::vector<double>& raw,
                                    int* dropped) {
  std::vector<double> kept;
  kept.reserve(raw.size());
  int bad = 0;
  for (double v : raw) {
    if (std::isnan(v))
      ++bad;
    else
      kept.push_back(v);
  }
  *dropped = bad;
  std::sort(kept.begin(), kept.end());
  return kept;
}

void check_drop_budget(int dropped, int total) {
  if (dropped > kMaxDropFraction * total)
    throw degenerate_error("TOO_MANY_DEGENERATE_REPLICATES",
                           std::to_string(dropped) + " of " +
                               std::to_string(total) +
                               " replicates were degenerate");
}

}  // namespace

WildEngine::WildEngine(const Dataset& data, const PairwiseEffects& w)
    : design_(data.design()), n_total_(data.design().total()) {
  design_.validate();
  const auto D = d_residuals(data, w);
  phi_ = influence_vectors(design_, D);

  const int ad = design_.cells();
  const auto p = relative_effects(w, design_);
  p_hat_ = p.p;

  gram_.resize(design_.a);
  v_hat_.setZero(ad, ad);
  for (int g = 0; g < design_.a; ++g) {
    const int ng = design_.n[g];
    gram_[g] = phi_[g].transpose() * phi_[g];
    v_hat_ += (static_cast<double>(n_total_) / (static_cast<double>(ng) * (ng - 1))) *
              gram_[g];
  }
  v_hat_ = 0.5 * (v_hat_ + v_hat_.transpose()).eval();
}

WildReplicate WildEngine::replicate(std::uint64_t replicate_seed,
                                    bool fixed_variance) const {
  const int ad = design_.cells();
  Rng rng(replicate_seed);
  WildReplicate out;
  out.p_eps.setZero(ad);
  if (!fixed_variance) out.v_eps.setZero(ad, ad);

  for (int g = 0; g < design_.a; ++g) {
    const int ng = design_.n[g];
    // Finite-sample factor n/(n-1) per group: it makes the conditional
    // covariance of the replicate effect vector equal the plug-in
    // estimate exactly (instead of only asymptotically) and keeps the
    // per-replicate covariance re-estimate unbiased for it.
    const double fs = static_cast<double>(ng) / (ng - 1.0);
    Eigen::VectorXd m_g = Eigen::VectorXd::Zero(ad);
    for (int k = 0; k < ng; ++k)
      m_g += rng.rademacher() * phi_[g].row(k).transpose();
    m_g /= static_cast<double>(ng);
    out.p_eps += std::sqrt(fs) * m_g;
    if (!fixed_variance) {
      // Signs square to one, so the uncentered replicate Gram matrix equals
      // the original one; only the mean correction depends on the draw.
      out.v_eps +=
          fs *
          (static_cast<double>(n_total_) / (static_cast<double>(ng) * (ng - 1))) *
          (gram_[g] - static_cast<double>(ng) * (m_g * m_g.transpose()));
    }
  }
  if (fixed_variance)
    out.v_eps = v_hat_;
  else
    out.v_eps = 0.5 * (out.v_eps + out.v_eps.transpose()).eval();
  return out;
}

std::vector<double> WildEngine::map_replicates(
    const BootstrapConfig& cfg,
    const std::function<double(const WildReplicate&)>& f) const {
  cfg.validate();
  const int b_total = cfg.replicates;
  std::vector<double> out(b_total);

  auto run_one = [&](int b) {
    const auto rep = replicate(substream_seed(cfg.seed, static_cast<std::uint64_t>(b)),
                               cfg.fixed_variance);
    out[b] = f(rep);
  };

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
  return out;
}

McTpResult boot_mctp(const Dataset& data, const ContrastFamily& c,
                     const BootstrapConfig& cfg) {
  cfg.validate();
  const auto w = pairwise_effects(data);
  const WildEngine engine(data, w);
  const int n_total = engine.n_total();
  EffectVector p{engine.p_hat()};
  const auto stats = contrast_statistics(p, engine.v_hat(), c, n_total);

  const int q = static_cast<int>(c.c.rows());
  const double sqrt_n = std::sqrt(static_cast<double>(n_total));
  const Eigen::MatrixXd cm = c.c;

  const auto raw = engine.map_replicates(cfg, [&](const WildReplicate& rep) {
    const Eigen::VectorXd est = cm * rep.p_eps;
    double worst = 0;
    for (int l = 0; l < q; ++l) {
      const double v_ll = cm.row(l) * rep.v_eps * cm.row(l).transpose();
      if (!(v_ll > kEpsVar)) return kNaN;
      worst = std::max(worst, std::abs(sqrt_n * est(l) / std::sqrt(v_ll)));
    }
    return worst;
  });

  int dropped = 0;
  const auto maxima = drop_nan_sorted(raw, &dropped);
  check_drop_budget(dropped, cfg.replicates);

  const long k = accept_count(maxima.size(), cfg.alpha);
  const double z = critical_from_count(maxima, k);

  McTpResult res;
  res.method = "bootstrap";
  res.alpha = cfg.alpha;
  res.quantile = z;
  res.r_hat = stats.r_hat;
  for (int l = 0; l < q; ++l) {
    ContrastResult cr;
    cr.label = c.labels[l];
    cr.estimate = stats.estimates(l);
    cr.statistic = stats.t(l);
    const double half = z * std::sqrt(stats.v_diag(l)) / sqrt_n;
    cr.lower = cr.estimate - half;
    cr.upper = cr.estimate + half;
    cr.reject = std::abs(cr.statistic) >= z;
    cr.p_adjusted = boot_pvalue(maxima, k, z, std::abs(cr.statistic));
    res.contrasts.push_back(cr);
    res.max_abs_statistic = std::max(res.max_abs_statistic, std::abs(stats.t(l)));
  }
  res.global_reject = res.max_abs_statistic >= z;
  res.global_p = boot_pvalue(maxima, k, z, res.max_abs_statistic);
  return res;
}

AtsResult boot_ats(const Dataset& data, const ContrastFamily& c,
                   const BootstrapConfig& cfg) {
  cfg.validate();
  const auto w = pairwise_effects(data);
  const WildEngine engine(data, w);
  const int n_total = engine.n_total();
  const auto pieces =
      ats_statistic(engine.p_hat(), engine.v_hat(), c, n_total);
  const Eigen::MatrixXd m = pieces.m;
  const double n_d = static_cast<double>(n_total);

  const auto raw = engine.map_replicates(cfg, [&](const WildReplicate& rep) {
    const double tr = (m * rep.v_eps).trace();
    if (!(tr > kEpsVar)) return kNaN;
    return n_d * rep.p_eps.dot(m * rep.p_eps) / tr;
  });

  int dropped = 0;
  const auto sample = drop_nan_sorted(raw, &dropped);
  check_drop_budget(dropped, cfg.replicates);

  const long k = accept_count(sample.size(), cfg.alpha);

  AtsResult res;
  res.q = pieces.q;
  res.f = pieces.f;
  res.method = "ats-bootstrap";
  res.critical = critical_from_count(sample, k);
  res.reject = res.q >= res.critical;
  res.p = boot_pvalue(sample, k, res.critical, res.q);
  return res;
}

}  // namespace rankmctp
