// Command-line front end: analyze long-format CSV datasets, compute Fieller
// ratio intervals, and run simulation studies. Payload goes to stdout,
// diagnostics to stderr; exit codes: 0 ok, 2 validation error, 3 degenerate
// statistics.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "rankmctp/ats.hpp"
#include "rankmctp/bootstrap.hpp"
#include "rankmctp/contrasts.hpp"
#include "rankmctp/csv.hpp"
#include "rankmctp/dataset.hpp"
#include "rankmctp/mctp.hpp"
#include "rankmctp/ratio.hpp"
#include "rankmctp/simulation.hpp"

namespace {

using nlohmann::ordered_json;
using namespace rankmctp;

constexpr const char* kVersion = "1.0.0";

// Non-cryptographic content digest (FNV-1a 64) for the run manifest.
std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw validation_error("NO_SUCH_FILE", "cannot open '" + path + "'");
  std::uint64_t h = 1469598103934665603ull;
  char buf[65536];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ull;
    }
  }
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

int resolve_threads(int flag_value) {
  if (flag_value > 0) return flag_value;
  if (const char* env = std::getenv("RANK_MCTP_THREADS")) {
    const int t = std::atoi(env);
    if (t > 0) return t;
  }
  return 0;  // modules interpret 0 as hardware concurrency
}

std::uint64_t resolve_seed(bool seed_given, std::uint64_t seed) {
  if (seed_given) return seed;
  std::random_device rd;
  const std::uint64_t s =
      (static_cast<std::uint64_t>(rd()) << 32) ^ static_cast<std::uint64_t>(rd());
  std::cerr << "note: no --seed given; using seed " << s << "\n";
  return s;
}

std::string p_display(double p, double resolution) {
  if (std::isnan(p)) return "NA";
  if (p < resolution) {
    std::ostringstream os;
    os << "<" << resolution;
    return os.str();
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", p);
  return buf;
}

std::string fmt(double v) {
  if (std::isnan(v)) return "NA";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

ordered_json mctp_json(const McTpResult& r, double resolution) {
  ordered_json out;
  out["method"] = r.method;
  out["alpha"] = r.alpha;
  out["quantile"] = r.quantile;
  out["max_abs_statistic"] = r.max_abs_statistic;
  out["global_reject"] = r.global_reject;
  out["global_p"] = r.global_p;
  out["contrasts"] = ordered_json::array();
  for (const auto& c : r.contrasts) {
    ordered_json row;
    row["label"] = c.label;
    row["estimate"] = c.estimate;
    row["lower"] = c.lower;
    row["upper"] = c.upper;
    row["statistic"] = c.statistic;
    row["p_adjusted"] = c.p_adjusted;
    row["p_display"] = p_display(c.p_adjusted, resolution);
    row["reject"] = c.reject;
    out["contrasts"].push_back(row);
  }
  return out;
}

ordered_json ats_json(const AtsResult& r) {
  ordered_json out;
  out["method"] = r.method;
  out["statistic"] = r.q;
  out["df"] = r.f;
  out["p"] = r.p;
  out["reject"] = r.reject;
  if (r.method != "ats") out["critical"] = r.critical;
  return out;
}

void mctp_tsv(std::ostream& os, const McTpResult& r, double resolution) {
  os << "# method\t" << r.method << "\tquantile\t" << r.quantile
     << "\tglobal_p\t" << p_display(r.global_p, resolution) << "\n";
  os << "comparison\testimate\tlower\tupper\tt\tp\treject\n";
  for (const auto& c : r.contrasts)
    os << c.label << "\t" << fmt(c.estimate) << "\t" << fmt(c.lower) << "\t"
       << fmt(c.upper) << "\t" << fmt(c.statistic) << "\t"
       << p_display(c.p_adjusted, resolution) << "\t" << (c.reject ? 1 : 0)
       << "\n";
}

struct AnalyzeArgs {
  std::string input;
  std::string subject = "subject", factor_a = "group", factor_d = "time",
              value = "value";
  std::string contrast = "tukey";
  std::string effect = "main_d";
  std::string method = "asymptotic";
  double alpha = 0.05;
  int bootstrap = 1000;
  int quantile_mc = 100000;
  std::uint64_t seed = 0;
  bool seed_given = false;
  int threads = 0;
  std::string format = "json";
  std::string dump_vhat;
};

void add_common_flags(CLI::App* cmd, AnalyzeArgs& a) {
  cmd->add_option("--input", a.input, "long-format CSV file")->required();
  cmd->add_option("--subject", a.subject, "subject id column");
  cmd->add_option("--factor-a", a.factor_a, "whole-plot (group) column");
  cmd->add_option("--factor-d", a.factor_d, "repeated-measure (time) column");
  cmd->add_option("--value", a.value, "observation column");
  cmd->add_option("--contrast", a.contrast,
                  "tukey|dunnett|average|changepoint|centering or a TSV file");
  cmd->add_option("--effect", a.effect, "main_a|main_d|interaction|cells");
  cmd->add_option("--alpha", a.alpha, "familywise level");
  cmd->add_option("--bootstrap", a.bootstrap, "wild-bootstrap replicates");
  cmd->add_option("--quantile-mc", a.quantile_mc, "MC sample size for quantiles");
  cmd->add_option("--seed", a.seed, "RNG seed")->each([&a](const std::string&) {
    a.seed_given = true;
  });
  cmd->add_option("--threads", a.threads, "worker cap (0 = auto)");
  cmd->add_option("--format", a.format, "json|tsv")
      ->check(CLI::IsMember({"json", "tsv"}));
  cmd->set_config("--config");
}

Dataset load_dataset(const AnalyzeArgs& a) {
  IngestOptions opt;
  opt.columns = {a.subject, a.factor_a, a.factor_d, a.value};
  std::ifstream in(a.input, std::ios::binary);
  if (!in) throw validation_error("NO_SUCH_FILE", "cannot open '" + a.input + "'");
  return ingest_long_csv(in, opt);
}

ContrastFamily resolve_contrast(const AnalyzeArgs& a, const Dataset& data) {
  const FactorialEffect effect = parse_effect(a.effect);
  try {
    const ContrastKind kind = parse_contrast_kind(a.contrast);
    return make_effect_contrast(effect, kind, data);
  } catch (const validation_error&) {
    // Not a named kind: treat as a user contrast file over the ad cells.
    ContrastFamily fam = load_contrast_tsv(a.contrast, data.design().cells());
    return factorial_contrast(FactorialEffect::WholeCell, fam, data.design());
  }
}

ordered_json manifest_json(const std::string& command, const ordered_json& cfg,
                           std::uint64_t seed, const std::string& digest) {
  ordered_json m;
  m["command"] = command;
  m["config"] = cfg;
  m["seed"] = seed;
  m["versions"] = {{"rankmctp", kVersion}};
  if (!digest.empty()) m["input_digest"] = digest;
  return m;
}

void emit(const ordered_json& payload) { std::cout << payload.dump(2) << "\n"; }

int cmd_analyze(const AnalyzeArgs& a) {
  if (!(a.alpha > 0 && a.alpha < 1))
    throw validation_error("BAD_ALPHA", "alpha must lie in (0,1)");
  const auto t0 = std::chrono::steady_clock::now();
  const std::uint64_t seed = resolve_seed(a.seed_given, a.seed);
  const int threads = resolve_threads(a.threads);

  const Dataset data = load_dataset(a);
  const ContrastFamily fam = resolve_contrast(a, data);

  if (!a.dump_vhat.empty()) {
    const CovarianceEstimate cov = estimate_covariance(data, pairwise_effects(data));
    std::ofstream out(a.dump_vhat, std::ios::binary);
    if (!out)
      throw validation_error("NO_SUCH_FILE", "cannot write '" + a.dump_vhat + "'");
    if (a.format == "json") {
      ordered_json m = ordered_json::array();
      for (Eigen::Index r = 0; r < cov.v.rows(); ++r) {
        ordered_json row = ordered_json::array();
        for (Eigen::Index c = 0; c < cov.v.cols(); ++c) row.push_back(cov.v(r, c));
        m.push_back(row);
      }
      ordered_json wrap;
      wrap["v_hat"] = m;
      out << wrap.dump(2) << "\n";
    } else {
      for (Eigen::Index r = 0; r < cov.v.rows(); ++r) {
        for (Eigen::Index c = 0; c < cov.v.cols(); ++c)
          out << (c ? "\t" : "") << fmt(cov.v(r, c));
        out << "\n";
      }
    }
  }

  const bool want_mctp = a.method == "asymptotic" || a.method == "all";
  const bool want_boot = a.method == "bootstrap" || a.method == "all";
  const bool want_ats = a.method == "ats" || a.method == "all";
  const bool want_boot_ats = a.method == "boot-ats" || a.method == "all";
  if (!(want_mctp || want_boot || want_ats || want_boot_ats))
    throw validation_error("BAD_CONFIG", "unknown method '" + a.method + "'");

  ordered_json cfg;
  cfg["input"] = a.input;
  cfg["subject"] = a.subject;
  cfg["factor_a"] = a.factor_a;
  cfg["factor_d"] = a.factor_d;
  cfg["value"] = a.value;
  cfg["contrast"] = a.contrast;
  cfg["effect"] = a.effect;
  cfg["method"] = a.method;
  cfg["alpha"] = a.alpha;
  cfg["bootstrap"] = a.bootstrap;
  cfg["quantile_mc"] = a.quantile_mc;

  ordered_json payload;
  payload["manifest"] =
      manifest_json("analyze", cfg, seed, file_digest(a.input));
  ordered_json& results = payload["results"] = ordered_json::object();

  const double res_mc = 1.0 / a.quantile_mc;
  const double res_boot = 1.0 / (a.bootstrap + 1.0);
  std::optional<McTpResult> mctp_r, boot_r;
  std::optional<AtsResult> ats_r, boot_ats_r;

  if (want_mctp) {
    QuantileConfig qc{a.quantile_mc, seed, a.alpha, threads};
    mctp_r = mctp_infer(data, fam, qc);
    results["mctp"] = mctp_json(*mctp_r, res_mc);
  }
  if (want_boot) {
    BootstrapConfig bc;
    bc.replicates = a.bootstrap;
    bc.seed = seed;
    bc.alpha = a.alpha;
    bc.threads = threads;
    boot_r = boot_mctp(data, fam, bc);
    results["boot_mctp"] = mctp_json(*boot_r, res_boot);
  }
  if (want_ats) {
    ats_r = ats_infer(data, fam, a.alpha);
    results["ats"] = ats_json(*ats_r);
  }
  if (want_boot_ats) {
    BootstrapConfig bc;
    bc.replicates = a.bootstrap;
    bc.seed = seed;
    bc.alpha = a.alpha;
    bc.threads = threads;
    boot_ats_r = boot_ats(data, fam, bc);
    results["boot_ats"] = ats_json(*boot_ats_r);
  }

  if (a.format == "json") {
    emit(payload);
  } else {
    std::cout << "# analyze\tseed\t" << seed << "\tinput_digest\t"
              << payload["manifest"]["input_digest"].get<std::string>() << "\n";
    if (mctp_r) mctp_tsv(std::cout, *mctp_r, res_mc);
    if (boot_r) mctp_tsv(std::cout, *boot_r, res_boot);
    if (ats_r)
      std::cout << "# method\tats\tstatistic\t" << fmt(ats_r->q) << "\tdf\t"
                << fmt(ats_r->f) << "\tp\t" << p_display(ats_r->p, 1e-10)
                << "\n";
    if (boot_ats_r)
      std::cout << "# method\tats-bootstrap\tstatistic\t" << fmt(boot_ats_r->q)
                << "\tcritical\t" << fmt(boot_ats_r->critical) << "\tp\t"
                << p_display(boot_ats_r->p, res_boot) << "\n";
  }
  const auto dt = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
  std::cerr << "elapsed: " << dt << " s\n";
  return 0;
}

int cmd_ratio(const AnalyzeArgs& a, const std::string& ratios_file) {
  if (!(a.alpha > 0 && a.alpha < 1))
    throw validation_error("BAD_ALPHA", "alpha must lie in (0,1)");
  const std::uint64_t seed = resolve_seed(a.seed_given, a.seed);
  const Dataset data = load_dataset(a);
  const RatioSpec spec = load_ratio_tsv(ratios_file, data.design().cells());

  BootstrapConfig bc;
  bc.replicates = a.bootstrap;
  bc.seed = seed;
  bc.alpha = a.alpha;
  bc.threads = resolve_threads(a.threads);
  const RatioResult r = fieller_scis(data, spec, bc);

  ordered_json cfg;
  cfg["input"] = a.input;
  cfg["ratios"] = ratios_file;
  cfg["alpha"] = a.alpha;
  cfg["bootstrap"] = a.bootstrap;

  ordered_json payload;
  payload["manifest"] = manifest_json("ratio", cfg, seed, file_digest(a.input));
  ordered_json out;
  out["quantile"] = r.quantile;
  out["alpha"] = r.alpha;
  out["replicates"] = r.replicates;
  out["intervals"] = ordered_json::array();
  const double res = 1.0 / (r.replicates + 1.0);
  for (const auto& iv : r.intervals) {
    ordered_json row;
    row["label"] = iv.label;
    row["theta_hat"] = iv.theta_hat;
    row["case"] = to_string(iv.fieller_case);
    row["lower"] = std::isfinite(iv.lower) ? ordered_json(iv.lower)
                                           : ordered_json(nullptr);
    row["upper"] = std::isfinite(iv.upper) ? ordered_json(iv.upper)
                                           : ordered_json(nullptr);
    row["denominator_near_zero"] = iv.denominator_near_zero;
    row["margin"] = iv.margin;
    row["p_one_sided"] = std::isnan(iv.p_one_sided)
                             ? ordered_json(nullptr)
                             : ordered_json(iv.p_one_sided);
    out["intervals"].push_back(row);
  }
  payload["results"] = out;

  if (a.format == "json") {
    emit(payload);
  } else {
    std::cout << "# ratio\tquantile\t" << r.quantile << "\n";
    std::cout << "label\ttheta\tcase\tlower\tupper\tnear_zero_denominator\tp_one_sided\n";
    for (const auto& iv : r.intervals)
      std::cout << iv.label << "\t" << fmt(iv.theta_hat) << "\t"
                << to_string(iv.fieller_case) << "\t" << fmt(iv.lower) << "\t"
                << fmt(iv.upper) << "\t" << (iv.denominator_near_zero ? 1 : 0)
                << "\t" << p_display(iv.p_one_sided, res) << "\n";
  }
  return 0;
}

struct SimulateArgs {
  std::string setting = "s1";
  std::string cov = "cs";
  double rho = 0.6;
  std::vector<int> n_list{20};
  int runs = 1000;
  int bootstrap = 1000;
  int quantile_mc = 10000;
  double alpha = 0.05;
  std::vector<std::string> tests{"boot-mctp"};
  std::string contrast = "centering";
  std::string effect = "cells";
  std::string pattern = "main_a";
  std::vector<double> delta_grid;
  std::uint64_t seed = 0;
  bool seed_given = false;
  int threads = 0;
  std::string format = "json";
};

int cmd_simulate(const SimulateArgs& s) {
  const std::uint64_t seed = resolve_seed(s.seed_given, s.seed);

  SimConfig cfg;
  apply_setting(cfg, s.setting);
  cfg.cov = parse_cov_structure(s.cov);
  cfg.rho = s.rho;
  cfg.runs = s.runs;
  cfg.bootstrap = s.bootstrap;
  cfg.quantile_mc = s.quantile_mc;
  cfg.alpha = s.alpha;
  cfg.seed = seed;
  cfg.threads = resolve_threads(s.threads);
  cfg.effect = parse_effect(s.effect);
  cfg.kind = parse_contrast_kind(s.contrast);

  std::vector<SimTest> tests;
  for (const auto& t : s.tests) tests.push_back(parse_sim_test(t));

  StudyReport report;
  for (int n : s.n_list) {
    SimConfig point = cfg;
    point.n = n;
    if (s.delta_grid.empty()) {
      auto sub = type1_study(point, tests, {cfg.kind});
      report.rows.insert(report.rows.end(), sub.rows.begin(), sub.rows.end());
    } else {
      const Eigen::VectorXd pattern =
          s.pattern == "main_d" ? shift_pattern_main_d(point.a, point.d)
                                : shift_pattern_main_a(point.a, point.d);
      auto sub = power_study(point, tests, pattern, s.delta_grid);
      report.rows.insert(report.rows.end(), sub.rows.begin(), sub.rows.end());
    }
  }

  ordered_json cfgj;
  cfgj["setting"] = s.setting;
  cfgj["cov"] = s.cov;
  cfgj["rho"] = s.rho;
  cfgj["n"] = s.n_list;
  cfgj["runs"] = s.runs;
  cfgj["bootstrap"] = s.bootstrap;
  cfgj["quantile_mc"] = s.quantile_mc;
  cfgj["alpha"] = s.alpha;
  cfgj["tests"] = s.tests;
  cfgj["contrast"] = s.contrast;
  cfgj["effect"] = s.effect;
  cfgj["delta"] = s.delta_grid;

  ordered_json payload;
  payload["manifest"] = manifest_json("simulate", cfgj, seed, "");
  payload["rows"] = ordered_json::array();
  for (const auto& row : report.rows) {
    ordered_json r;
    r["test"] = row.test;
    r["setting"] = row.setting;
    r["cov"] = row.cov;
    r["n"] = row.n;
    r["delta"] = row.delta;
    r["contrast"] = row.contrast;
    r["effect"] = row.effect;
    r["runs"] = row.runs;
    r["rejections"] = row.rejections;
    r["degenerate"] = row.degenerate;
    r["rate"] = row.rate;
    r["mc_se"] = row.mc_se;
    payload["rows"].push_back(r);
  }

  if (s.format == "json") {
    emit(payload);
  } else {
    std::cout << "test\tsetting\tcov\tn\tdelta\tcontrast\teffect\truns\t"
                 "rejections\tdegenerate\trate\tmc_se\n";
    for (const auto& row : report.rows) {
      char rate[32], se[32];
      std::snprintf(rate, sizeof(rate), "%.4f", row.rate);
      std::snprintf(se, sizeof(se), "%.4f", row.mc_se);
      std::cout << row.test << "\t" << row.setting << "\t" << row.cov << "\t"
                << row.n << "\t" << row.delta << "\t" << row.contrast << "\t"
                << row.effect << "\t" << row.runs << "\t" << row.rejections
                << "\t" << row.degenerate << "\t" << rate << "\t" << se << "\n";
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rank-based multiple contrast tests for split-plot designs"};
  app.require_subcommand(1);

  AnalyzeArgs a;
  CLI::App* analyze = app.add_subcommand("analyze", "MCTP / ATS analysis of a dataset");
  add_common_flags(analyze, a);
  analyze->add_option("--dump-vhat", a.dump_vhat,
                      "write the estimated covariance matrix to this file");
  analyze->add_option("--method", a.method,
                      "asymptotic|bootstrap|ats|boot-ats|all");

  AnalyzeArgs ra;
  std::string ratios_file;
  CLI::App* ratio = app.add_subcommand("ratio", "Fieller intervals for effect ratios");
  add_common_flags(ratio, ra);
  ratio->add_option("--ratios", ratios_file, "TSV with numerator/denominator row pairs")
      ->required();

  SimulateArgs s;
  CLI::App* simulate = app.add_subcommand("simulate", "Monte-Carlo study harness");
  simulate->add_option("--setting", s.setting, "s1 (3x3) | s2 (2x4)");
  simulate->add_option("--cov", s.cov, "cs|ar|tpl");
  simulate->add_option("--rho", s.rho, "AR(1) correlation");
  simulate->add_option("--n", s.n_list, "per-group sizes")->delimiter(',');
  simulate->add_option("--runs", s.runs, "simulation runs");
  simulate->add_option("--bootstrap", s.bootstrap, "bootstrap replicates");
  simulate->add_option("--quantile-mc", s.quantile_mc, "MC quantile sample size");
  simulate->add_option("--alpha", s.alpha, "test level");
  simulate->add_option("--tests", s.tests, "mctp,boot-mctp,ats,boot-ats")
      ->delimiter(',');
  simulate->add_option("--contrast", s.contrast, "contrast kind");
  simulate->add_option("--effect", s.effect, "tested effect");
  simulate->add_option("--pattern", s.pattern, "shift pattern: main_a|main_d");
  simulate->add_option("--delta", s.delta_grid, "shift grid (power study)")
      ->delimiter(',');
  simulate->add_option("--seed", s.seed, "RNG seed")->each([&s](const std::string&) {
    s.seed_given = true;
  });
  simulate->add_option("--threads", s.threads, "worker cap (0 = auto)");
  simulate->add_option("--format", s.format, "json|tsv")
      ->check(CLI::IsMember({"json", "tsv"}));
  simulate->set_config("--config");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*analyze) return cmd_analyze(a);
    if (*ratio) return cmd_ratio(ra, ratios_file);
    if (*simulate) return cmd_simulate(s);
  } catch (const validation_error& e) {
    std::cerr << "error [" << e.code() << "]: " << e.what() << "\n";
    return 2;
  } catch (const degenerate_error& e) {
    std::cerr << "error [" << e.code() << "]: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error [INTERNAL]: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
