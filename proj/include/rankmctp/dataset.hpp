#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>
#include <vector>

#include "rankmctp/errors.hpp"

namespace rankmctp {

// Layout of a split-plot design: `a` whole-plot groups, `d` repeated
// measures per subject, n[i] subjects in group i.
struct Design {
  int a = 0;
  int d = 0;
  std::vector<int> n;

  int total() const {
    int s = 0;
    for (int ni : n) s += ni;
    return s;
  }
  int cells() const { return a * d; }
  // Flat cell index, group-major: (i,j) -> i*d + j.
  int cell_index(int i, int j) const { return i * d + j; }

  void validate() const;
};

// Complete long-format observations. Immutable after construction; values
// are stored per group as an (n_i x d) matrix.
class Dataset {
public:
  Dataset(Design design, std::vector<Eigen::MatrixXd> values,
          std::vector<std::string> group_names = {},
          std::vector<std::string> time_names = {},
          std::vector<std::vector<std::string>> subject_names = {});

  const Design& design() const { return design_; }
  const Eigen::MatrixXd& group(int i) const { return values_[i]; }
  double value(int i, int j, int k) const { return values_[i](k, j); }

  // All n_i observations of cell (i,j).
  Eigen::VectorXd cell(int i, int j) const { return values_[i].col(j); }

  const std::vector<std::string>& group_names() const { return group_names_; }
  const std::vector<std::string>& time_names() const { return time_names_; }
  const std::vector<std::vector<std::string>>& subject_names() const {
    return subject_names_;
  }

private:
  Design design_;
  std::vector<Eigen::MatrixXd> values_;
  std::vector<std::string> group_names_;
  std::vector<std::string> time_names_;
  std::vector<std::vector<std::string>> subject_names_;
};

// Midranks of `values`: rank of x = (#smaller) + (#equal + 1)/2.
// Throws validation_error("EMPTY_INPUT") on an empty span.
std::vector<double> midranks(std::span<const double> values);

}  // namespace rankmctp
