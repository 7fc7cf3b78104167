#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "rankmctp/contrasts.hpp"
#include "rankmctp/dataset.hpp"
#include "rankmctp/rng.hpp"

namespace rankmctp {

enum class CovStructure { CS, AR, TPL };
enum class SimTest { Mctp, BootMctp, Ats, BootAts };

CovStructure parse_cov_structure(const std::string& name);
SimTest parse_sim_test(const std::string& name);
std::string to_string(CovStructure c);
std::string to_string(SimTest t);

struct SimConfig {
  int a = 3, d = 3;                 // S1 default; S2 is a=2, d=4
  std::string setting = "s1";
  CovStructure cov = CovStructure::CS;
  double rho = 0.6;                 // AR(1) parameter
  int n = 20;                       // per-group size (balanced)
  int runs = 1000;
  int bootstrap = 1000;
  int quantile_mc = 10000;          // MC size for the asymptotic quantile
  double alpha = 0.05;
  std::vector<double> sigma;        // per-group scale, default all 1
  std::vector<double> c_subject;    // per-group subject-effect scale, default 1
  Eigen::VectorXd delta;            // per-cell location shift, default 0
  std::uint64_t seed = 0;
  int threads = 0;

  FactorialEffect effect = FactorialEffect::WholeCell;
  ContrastKind kind = ContrastKind::Centering;

  void validate() const;
};

// Preset a/d for the two studied settings ("s1": 3x3, "s2": 2x4).
void apply_setting(SimConfig& cfg, const std::string& setting);

// Within-subject covariance matrix for the chosen structure.
Eigen::MatrixXd cov_matrix(CovStructure cov, int d, double rho);

// One dataset draw: X_ik = sigma_i V^{1/2} Z_ik + c_i B_ik 1_d + delta_i.
Dataset generate(const SimConfig& cfg, Rng& rng);

struct StudyRow {
  std::string test;
  std::string contrast;
  std::string effect;
  std::string cov;
  std::string setting;
  int n = 0;
  double delta = 0;
  int runs = 0;
  int rejections = 0;
  int degenerate = 0;  // runs where the test aborted on a degenerate statistic
  double rate = 0;
  double mc_se = 0;
};

struct StudyReport {
  std::vector<StudyRow> rows;
};

// Empirical rejection rates under the configured model (null when delta = 0).
StudyReport type1_study(const SimConfig& cfg, const std::vector<SimTest>& tests,
                        const std::vector<ContrastKind>& kinds);

// Power curve over a grid of shift magnitudes applied to `pattern`
// (per-cell direction vector, scaled by each grid value).
StudyReport power_study(const SimConfig& cfg, const std::vector<SimTest>& tests,
                        const Eigen::VectorXd& pattern,
                        const std::vector<double>& delta_grid);

// Location-shift patterns used in the power study: factor-A loads the last
// group's cells, factor-D the last repeated measure of every group.
Eigen::VectorXd shift_pattern_main_a(int a, int d);
Eigen::VectorXd shift_pattern_main_d(int a, int d);

}  // namespace rankmctp
