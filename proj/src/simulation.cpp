#include "rankmctp/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "rankmctp/ats.hpp"
#include "rankmctp/bootstrap.hpp"
#include "rankmctp/distributions.hpp"
#include "rankmctp/mctp.hpp"

namespace rankmctp {
namespace {

// Per-run substreams: even indices feed the data generator, odd indices the
// analysis (quantile MC / bootstrap), so adding tests never shifts the data.
std::uint64_t gen_seed(std::uint64_t seed, int run) {
  return substream_seed(seed, 2ull * static_cast<std::uint64_t>(run));
}
std::uint64_t analysis_seed(std::uint64_t seed, int run) {
  return substream_seed(seed, 2ull * static_cast<std::uint64_t>(run) + 1ull);
}

struct RunOutcome {
  bool reject = false;
  bool degenerate = false;
};

RunOutcome run_test(const Dataset& data, const ContrastFamily& c, SimTest test,
                    const SimConfig& cfg, std::uint64_t seed) {
  RunOutcome out;
  try {
    switch (test) {
      case SimTest::Mctp: {
        QuantileConfig qc;
        qc.mc_size = cfg.quantile_mc;
        qc.seed = seed;
        qc.alpha = cfg.alpha;
        qc.threads = 1;
        out.reject = mctp_infer(data, c, qc).global_reject;
        break;
      }
      case SimTest::BootMctp: {
        BootstrapConfig bc;
        bc.replicates = cfg.bootstrap;
        bc.seed = seed;
        bc.alpha = cfg.alpha;
        bc.threads = 1;
        out.reject = boot_mctp(data, c, bc).global_reject;
        break;
      }
      case SimTest::Ats:
        out.reject = ats_infer(data, c, cfg.alpha).p <= cfg.alpha;
        break;
      case SimTest::BootAts: {
        BootstrapConfig bc;
        bc.replicates = cfg.bootstrap;
        bc.seed = seed;
        bc.alpha = cfg.alpha;
        bc.threads = 1;
        out.reject = boot_ats(data, c, bc).reject;
        break;
      }
    }
  } catch (const degenerate_error&) {
    out.degenerate = true;
  }
  return out;
}

StudyRow make_row(const SimConfig& cfg, SimTest test, const std::string& kind,
                  double delta, int runs) {
  StudyRow row;
  row.test = to_string(test);
  row.contrast = kind;
  switch (cfg.effect) {
    case FactorialEffect::MainA: row.effect = "main_a"; break;
    case FactorialEffect::MainD: row.effect = "main_d"; break;
    case FactorialEffect::Interaction: row.effect = "interaction"; break;
    case FactorialEffect::WholeCell: row.effect = "cells"; break;
  }
  row.cov = to_string(cfg.cov);
  row.setting = cfg.setting;
  row.n = cfg.n;
  row.delta = delta;
  row.runs = runs;
  return row;
}

void finish_row(StudyRow& row) {
  row.rate = row.runs > 0 ? static_cast<double>(row.rejections) / row.runs : 0;
  row.mc_se = row.runs > 0
                  ? std::sqrt(row.rate * (1.0 - row.rate) /
                              static_cast<double>(row.runs))
                  : 0;
}

// Run the per-(run, job) grid in parallel with a deterministic reduction.
template <typename JobFn>
void parallel_runs(const SimConfig& cfg, int jobs, std::vector<int>& rejections,
                   std::vector<int>& degenerate, const JobFn& one_run) {
  const int runs = cfg.runs;
  std::vector<std::vector<RunOutcome>> grid(
      runs, std::vector<RunOutcome>(static_cast<std::size_t>(jobs)));

  int nthreads = cfg.threads > 0
                     ? cfg.threads
                     : static_cast<int>(std::thread::hardware_concurrency());
  nthreads = std::max(1, std::min(nthreads, runs));
  auto worker_loop = [&](std::atomic<int>& next) {
    for (int r = next.fetch_add(1); r < runs; r = next.fetch_add(1))
      one_run(r, grid[r]);
  };
  std::atomic<int> next{0};
  if (nthreads == 1) {
    worker_loop(next);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < nthreads; ++t)
      pool.emplace_back([&] { worker_loop(next); });
    for (auto& th : pool) th.join();
  }

  rejections.assign(jobs, 0);
  degenerate.assign(jobs, 0);
  for (int r = 0; r < runs; ++r)
    for (int j = 0; j < jobs; ++j) {
      rejections[j] += grid[r][j].reject ? 1 : 0;
      degenerate[j] += grid[r][j].degenerate ? 1 : 0;
    }
}

}  // namespace

CovStructure parse_cov_structure(const std::string& name) {
  if (name == "cs") return CovStructure::CS;
  if (name == "ar") return CovStructure::AR;
  if (name == "tpl") return CovStructure::TPL;
  throw validation_error("BAD_CONFIG", "unknown covariance structure '" + name + "'");
}

SimTest parse_sim_test(const std::string& name) {
  if (name == "mctp") return SimTest::Mctp;
  if (name == "boot-mctp") return SimTest::BootMctp;
  if (name == "ats") return SimTest::Ats;
  if (name == "boot-ats") return SimTest::BootAts;
  throw validation_error("BAD_CONFIG", "unknown test '" + name + "'");
}

std::string to_string(CovStructure c) {
  switch (c) {
    case CovStructure::CS: return "cs";
    case CovStructure::AR: return "ar";
    case CovStructure::TPL: return "tpl";
  }
  return "?";
}

std::string to_string(SimTest t) {
  switch (t) {
    case SimTest::Mctp: return "mctp";
    case SimTest::BootMctp: return "boot-mctp";
    case SimTest::Ats: return "ats";
    case SimTest::BootAts: return "boot-ats";
  }
  return "?";
}

void SimConfig::validate() const {
  if (a < 2 || d < 1) throw validation_error("BAD_CONFIG", "need a >= 2, d >= 1");
  if (n < 2) throw validation_error("BAD_CONFIG", "need n >= 2 per group");
  if (runs < 1) throw validation_error("BAD_CONFIG", "need runs >= 1");
  if (!(rho > 0 && rho < 1))
    throw validation_error("BAD_CONFIG", "rho must lie in (0,1)");
  if (!(alpha > 0 && alpha < 1))
    throw validation_error("BAD_ALPHA", "alpha not in (0,1)");
  if (!sigma.empty() && static_cast<int>(sigma.size()) != a)
    throw validation_error("BAD_CONFIG", "sigma needs one entry per group");
  if (!c_subject.empty() && static_cast<int>(c_subject.size()) != a)
    throw validation_error("BAD_CONFIG", "c needs one entry per group");
  if (delta.size() != 0 && delta.size() != a * d)
    throw validation_error("BAD_CONFIG", "delta needs one entry per cell");
}

void apply_setting(SimConfig& cfg, const std::string& setting) {
  if (setting == "s1") {
    cfg.a = 3;
    cfg.d = 3;
  } else if (setting == "s2") {
    cfg.a = 2;
    cfg.d = 4;
  } else {
    throw validation_error("BAD_CONFIG", "unknown setting '" + setting + "'");
  }
  cfg.setting = setting;
}

Eigen::MatrixXd cov_matrix(CovStructure cov, int d, double rho) {
  Eigen::MatrixXd v(d, d);
  for (int l = 0; l < d; ++l)
    for (int m = 0; m < d; ++m) {
      switch (cov) {
        case CovStructure::CS: v(l, m) = l == m ? 1.0 : 0.0; break;
        case CovStructure::AR: v(l, m) = std::pow(rho, std::abs(l - m)); break;
        case CovStructure::TPL: v(l, m) = static_cast<double>(d - std::abs(l - m)); break;
      }
    }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(v);
  if (es.eigenvalues().minCoeff() < -1e-10)
    throw validation_error("NON_PSD_V", "covariance matrix is not PSD");
  return v;
}

Dataset generate(const SimConfig& cfg, Rng& rng) {
  cfg.validate();
  const Eigen::MatrixXd root = symmetric_sqrt(cov_matrix(cfg.cov, cfg.d, cfg.rho));
  Design design{cfg.a, cfg.d, std::vector<int>(cfg.a, cfg.n)};
  std::vector<Eigen::MatrixXd> values(cfg.a);
  Eigen::VectorXd z(cfg.d);
  for (int i = 0; i < cfg.a; ++i) {
    const double si = cfg.sigma.empty() ? 1.0 : cfg.sigma[i];
    const double ci = cfg.c_subject.empty() ? 1.0 : cfg.c_subject[i];
    values[i].resize(cfg.n, cfg.d);
    for (int k = 0; k < cfg.n; ++k) {
      for (int j = 0; j < cfg.d; ++j) z(j) = rng.normal();
      const double b = rng.normal();
      const Eigen::VectorXd x = si * (root * z) + Eigen::VectorXd::Constant(cfg.d, ci * b);
      for (int j = 0; j < cfg.d; ++j) {
        double shift = cfg.delta.size() ? cfg.delta(i * cfg.d + j) : 0.0;
        values[i](k, j) = x(j) + shift;
      }
    }
  }
  return Dataset(std::move(design), std::move(values));
}

StudyReport type1_study(const SimConfig& cfg, const std::vector<SimTest>& tests,
                        const std::vector<ContrastKind>& kinds) {
  cfg.validate();
  if (tests.empty() || kinds.empty())
    throw validation_error("BAD_CONFIG", "need at least one test and contrast kind");

  // Build one cell-level family per contrast kind for the configured effect.
  std::vector<ContrastFamily> families;
  std::vector<std::string> kind_names;
  for (ContrastKind k : kinds) {
    Design design{cfg.a, cfg.d, std::vector<int>(cfg.a, cfg.n)};
    if (cfg.effect == FactorialEffect::Interaction) {
      families.push_back(factorial_contrast(cfg.effect, ContrastFamily{}, design));
    } else {
      const int m = cfg.effect == FactorialEffect::MainA   ? cfg.a
                    : cfg.effect == FactorialEffect::MainD ? cfg.d
                                                           : cfg.a * cfg.d;
      ContrastFamily base = build_contrast(k, m, std::vector<int>(m, cfg.n));
      families.push_back(factorial_contrast(cfg.effect, base, design));
    }
    switch (k) {
      case ContrastKind::Tukey: kind_names.push_back("tukey"); break;
      case ContrastKind::Dunnett: kind_names.push_back("dunnett"); break;
      case ContrastKind::Average: kind_names.push_back("average"); break;
      case ContrastKind::Changepoint: kind_names.push_back("changepoint"); break;
      case ContrastKind::Centering: kind_names.push_back("centering"); break;
      case ContrastKind::User: kind_names.push_back("user"); break;
    }
  }

  const int jobs = static_cast<int>(tests.size() * families.size());
  std::vector<int> rejections, degenerate;
  parallel_runs(cfg, jobs, rejections, degenerate,
                [&](int r, std::vector<RunOutcome>& out) {
                  Rng rng(gen_seed(cfg.seed, r));
                  const Dataset data = generate(cfg, rng);
                  const std::uint64_t aseed = analysis_seed(cfg.seed, r);
                  int j = 0;
                  for (SimTest test : tests)
                    for (const auto& fam : families)
                      out[j++] = run_test(data, fam, test, cfg, aseed);
                });

  StudyReport report;
  int j = 0;
  for (SimTest test : tests)
    for (std::size_t f = 0; f < families.size(); ++f) {
      StudyRow row = make_row(cfg, test, kind_names[f],
                              cfg.delta.size() ? cfg.delta.cwiseAbs().maxCoeff() : 0.0,
                              cfg.runs);
      row.rejections = rejections[j];
      row.degenerate = degenerate[j];
      finish_row(row);
      report.rows.push_back(row);
      ++j;
    }
  return report;
}

StudyReport power_study(const SimConfig& cfg, const std::vector<SimTest>& tests,
                        const Eigen::VectorXd& pattern,
                        const std::vector<double>& delta_grid) {
  cfg.validate();
  if (pattern.size() != cfg.a * cfg.d)
    throw validation_error("BAD_CONFIG", "pattern needs one entry per cell");
  if (delta_grid.empty())
    throw validation_error("BAD_CONFIG", "empty delta grid");

  StudyReport report;
  for (double delta : delta_grid) {
    SimConfig point = cfg;
    point.delta = delta * pattern;
    StudyReport sub = type1_study(point, tests, {cfg.kind});
    for (auto& row : sub.rows) {
      row.delta = delta;
      report.rows.push_back(row);
    }
  }
  return report;
}

Eigen::VectorXd shift_pattern_main_a(int a, int d) {
  Eigen::VectorXd p = Eigen::VectorXd::Zero(a * d);
  for (int j = 0; j < d; ++j) p((a - 1) * d + j) = 1.0;
  return p;
}

Eigen::VectorXd shift_pattern_main_d(int a, int d) {
  Eigen::VectorXd p = Eigen::VectorXd::Zero(a * d);
  for (int i = 0; i < a; ++i) p(i * d + (d - 1)) = 1.0;
  return p;
}

}  // namespace rankmctp
