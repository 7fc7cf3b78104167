#include "rankmctp/distributions.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "rankmctp/rng.hpp"

namespace rankmctp {
namespace {

constexpr int kChunk = 4096;  // draws per RNG substream

double lgamma_safe(double x) { return std::lgamma(x); }

// Lower regularized incomplete gamma by series expansion.
double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int n = 0; n < 1000; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::abs(del) < std::abs(sum) * 1e-16)
      return sum * std::exp(-x + a * std::log(x) - lgamma_safe(a));
  }
  return sum * std::exp(-x + a * std::log(x) - lgamma_safe(a));
}

// Upper regularized incomplete gamma by continued fraction (Lentz).
double gamma_q_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 1000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-16) break;
  }
  return std::exp(-x + a * std::log(x) - lgamma_safe(a)) * h;
}

}  // namespace

double reg_gamma_q(double a, double x) {
  if (x < 0 || a <= 0) throw validation_error("BAD_CONFIG", "invalid gamma arguments");
  if (x == 0) return 1.0;
  if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
  return gamma_q_cf(a, x);
}

double chi_square_scaled_pvalue(double q, double f) {
  if (f <= 0) throw degenerate_error("INVALID_DEGREES", "degrees of freedom must be positive");
  if (q < 0) throw validation_error("BAD_CONFIG", "statistic must be nonnegative");
  // P(chi2_f > q*f)
  return reg_gamma_q(0.5 * f, 0.5 * q * f);
}

Eigen::MatrixXd symmetric_sqrt(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

std::vector<double> max_abs_normal_sample(const Eigen::MatrixXd& r,
                                          const QuantileConfig& cfg) {
  cfg.validate();
  const int q = static_cast<int>(r.rows());
  if (r.cols() != q) throw validation_error("BAD_CONFIG", "R must be square");
  for (int i = 0; i < q; ++i)
    if (std::abs(r(i, i) - 1.0) > 1e-8)
      throw validation_error("NOT_A_CORRELATION_MATRIX",
                             "diagonal of R must be one");
  const Eigen::MatrixXd root = symmetric_sqrt(r);

  const int nchunks = (cfg.mc_size + kChunk - 1) / kChunk;
  std::vector<double> maxima(cfg.mc_size);

  auto run_chunk = [&](int chunk) {
    Rng rng(substream_seed(cfg.seed, static_cast<std::uint64_t>(chunk)));
    const int lo = chunk * kChunk;
    const int hi = std::min(cfg.mc_size, lo + kChunk);
    Eigen::VectorXd z(q);
    for (int m = lo; m < hi; ++m) {
      for (int i = 0; i < q; ++i) z(i) = rng.normal();
      maxima[m] = (root * z).cwiseAbs().maxCoeff();
    }
  };

  int nthreads = cfg.threads > 0 ? cfg.threads
                                 : static_cast<int>(std::thread::hardware_concurrency());
  nthreads = std::max(1, std::min(nthreads, nchunks));
  if (nthreads == 1) {
    for (int c = 0; c < nchunks; ++c) run_chunk(c);
  } else {
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int t = 0; t < nthreads; ++t)
      pool.emplace_back([&] {
        for (int c = next.fetch_add(1); c < nchunks; c = next.fetch_add(1))
          run_chunk(c);
      });
    for (auto& th : pool) th.join();
  }
  std::sort(maxima.begin(), maxima.end());
  return maxima;
}

double critical_from_maxima(const std::vector<double>& sorted, double alpha) {
  // Smallest sample value z with #{m >= z} <= floor(alpha * n); if no
  // sample value qualifies, the next representable above the maximum.
  const auto n = static_cast<long>(sorted.size());
  const long k = static_cast<long>(std::floor(alpha * static_cast<double>(n)));
  long j = n - k;
  if (j <= 0) return sorted[0];
  const double above = std::nextafter(sorted[n - 1],
                                      std::numeric_limits<double>::infinity());
  if (j >= n) return above;
  if (sorted[j - 1] < sorted[j]) return sorted[j];
  const double v = sorted[j];  // inside a tie block: skip past it
  while (j < n && sorted[j] == v) ++j;
  return j < n ? sorted[j] : above;
}

double pvalue_from_maxima(const std::vector<double>& sorted, double z, double alpha,
                          double t) {
  const auto n = static_cast<double>(sorted.size());
  const auto it = std::lower_bound(sorted.begin(), sorted.end(), std::abs(t));
  double p = static_cast<double>(sorted.end() - it) / n;
  const double k = std::floor(alpha * n);
  // Keep p <= alpha exactly equivalent to |t| >= z.
  if (std::abs(t) >= z)
    p = std::min(p, k / n);
  else
    p = std::max(p, (k + 1.0) / n);
  return p;
}

EquicoordinateQuantile equicoordinate_quantile(const Eigen::MatrixXd& r,
                                               const QuantileConfig& cfg) {
  EquicoordinateQuantile out;
  out.maxima = max_abs_normal_sample(r, cfg);
  out.alpha = cfg.alpha;
  out.z = critical_from_maxima(out.maxima, cfg.alpha);
  return out;
}

}  // namespace rankmctp
