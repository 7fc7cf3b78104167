#include "rankmctp/contrasts.hpp"

#include <unsupported/Eigen/KroneckerProduct>

#include <fstream>
#include <sstream>

namespace rankmctp {
namespace {

std::string level_name(const std::vector<std::string>& names, int idx,
                       const char* prefix) {
  if (idx < static_cast<int>(names.size())) return names[idx];
  return std::string(prefix) + " " + std::to_string(idx + 1);
}

}  // namespace

ContrastKind parse_contrast_kind(const std::string& name) {
  if (name == "tukey") return ContrastKind::Tukey;
  if (name == "dunnett") return ContrastKind::Dunnett;
  if (name == "average") return ContrastKind::Average;
  if (name == "changepoint") return ContrastKind::Changepoint;
  if (name == "centering") return ContrastKind::Centering;
  throw validation_error("BAD_CONTRAST", "unknown contrast kind '" + name + "'");
}

FactorialEffect parse_effect(const std::string& name) {
  if (name == "main_a") return FactorialEffect::MainA;
  if (name == "main_d") return FactorialEffect::MainD;
  if (name == "interaction") return FactorialEffect::Interaction;
  if (name == "cells") return FactorialEffect::WholeCell;
  throw validation_error("BAD_EFFECT", "unknown effect '" + name + "'");
}

ContrastFamily build_contrast(ContrastKind kind, int m, const std::vector<int>& sizes,
                              const std::vector<std::string>& names) {
  if (m < 2)
    throw validation_error("DIMENSION_TOO_SMALL", "contrasts need at least two levels");
  ContrastFamily fam;
  fam.kind = kind;
  switch (kind) {
    case ContrastKind::Tukey: {
      fam.c.setZero(m * (m - 1) / 2, m);
      int row = 0;
      for (int i = 0; i < m; ++i)
        for (int j = i + 1; j < m; ++j) {
          fam.c(row, i) = -1;
          fam.c(row, j) = 1;
          fam.labels.push_back(level_name(names, j, "level") + " vs. " +
                               level_name(names, i, "level"));
          ++row;
        }
      break;
    }
    case ContrastKind::Dunnett: {
      fam.c.setZero(m - 1, m);
      for (int j = 1; j < m; ++j) {
        fam.c(j - 1, 0) = -1;
        fam.c(j - 1, j) = 1;
        fam.labels.push_back(level_name(names, j, "level") + " vs. " +
                             level_name(names, 0, "level"));
      }
      break;
    }
    case ContrastKind::Average: {
      fam.c.setConstant(m, m, -1.0 / (m - 1));
      fam.c.diagonal().setOnes();
      for (int i = 0; i < m; ++i)
        fam.labels.push_back(level_name(names, i, "level") + " vs. average of others");
      break;
    }
    case ContrastKind::Changepoint: {
      if (static_cast<int>(sizes.size()) != m)
        throw validation_error("BAD_CONTRAST",
                               "changepoint contrasts need one size per level");
      fam.c.setZero(m - 1, m);
      for (int cut = 1; cut < m; ++cut) {
        double left = 0, right = 0;
        for (int i = 0; i < cut; ++i) left += sizes[i];
        for (int i = cut; i < m; ++i) right += sizes[i];
        for (int i = 0; i < cut; ++i) fam.c(cut - 1, i) = -sizes[i] / left;
        for (int i = cut; i < m; ++i) fam.c(cut - 1, i) = sizes[i] / right;
        fam.labels.push_back("levels >" + std::to_string(cut) + " vs. <=" +
                             std::to_string(cut));
      }
      break;
    }
    case ContrastKind::Centering: {
      fam.c = Eigen::MatrixXd::Identity(m, m) -
              Eigen::MatrixXd::Constant(m, m, 1.0 / m);
      for (int i = 0; i < m; ++i)
        fam.labels.push_back(level_name(names, i, "level") + " vs. grand mean");
      break;
    }
    case ContrastKind::User:
      throw validation_error("BAD_CONTRAST", "user contrasts come from a file");
  }
  return fam;
}

ContrastFamily factorial_contrast(FactorialEffect effect, const ContrastFamily& base,
                                  const Design& design) {
  const int a = design.a, d = design.d;
  ContrastFamily fam;
  fam.kind = base.kind;
  switch (effect) {
    case FactorialEffect::MainA: {
      if (base.c.cols() != a)
        throw validation_error("DIMENSION_MISMATCH",
                               "whole-plot base must have a columns");
      fam.c = Eigen::kroneckerProduct(base.c,
                                      Eigen::RowVectorXd::Constant(d, 1.0 / d));
      fam.labels = base.labels;
      break;
    }
    case FactorialEffect::MainD: {
      if (base.c.cols() != d)
        throw validation_error("DIMENSION_MISMATCH",
                               "repeated-measures base must have d columns");
      fam.c = Eigen::kroneckerProduct(Eigen::RowVectorXd::Constant(a, 1.0 / a),
                                      base.c);
      fam.labels = base.labels;
      break;
    }
    case FactorialEffect::Interaction: {
      const Eigen::MatrixXd pa = Eigen::MatrixXd::Identity(a, a) -
                                 Eigen::MatrixXd::Constant(a, a, 1.0 / a);
      const Eigen::MatrixXd pd = Eigen::MatrixXd::Identity(d, d) -
                                 Eigen::MatrixXd::Constant(d, d, 1.0 / d);
      fam.c = Eigen::kroneckerProduct(pa, pd);
      for (int i = 0; i < a; ++i)
        for (int j = 0; j < d; ++j)
          fam.labels.push_back("interaction cell (" + std::to_string(i + 1) + "," +
                               std::to_string(j + 1) + ")");
      break;
    }
    case FactorialEffect::WholeCell: {
      if (base.c.cols() != a * d)
        throw validation_error("DIMENSION_MISMATCH",
                               "cell-level base must have a*d columns");
      fam.c = base.c;
      fam.labels = base.labels;
      break;
    }
  }
  if (fam.labels.size() != static_cast<std::size_t>(fam.c.rows())) {
    fam.labels.clear();
    for (int r = 0; r < fam.c.rows(); ++r)
      fam.labels.push_back("contrast " + std::to_string(r + 1));
  }
  return fam;
}

ContrastFamily make_effect_contrast(FactorialEffect effect, ContrastKind kind,
                                    const Dataset& data) {
  const auto& dz = data.design();
  switch (effect) {
    case FactorialEffect::MainA: {
      auto base = build_contrast(kind, dz.a, dz.n, data.group_names());
      return factorial_contrast(effect, base, dz);
    }
    case FactorialEffect::MainD: {
      // Per-cell counts are equal within subject; use per-group totals for
      // changepoint weights over repeated measures.
      std::vector<int> sizes(dz.d, dz.total());
      std::vector<std::string> names;
      for (const auto& t : data.time_names()) names.push_back("timepoint " + t);
      auto base = build_contrast(kind, dz.d, sizes, names);
      return factorial_contrast(effect, base, dz);
    }
    case FactorialEffect::Interaction:
      return factorial_contrast(effect, ContrastFamily{}, dz);
    case FactorialEffect::WholeCell: {
      std::vector<std::string> names;
      std::vector<int> sizes;
      for (int i = 0; i < dz.a; ++i)
        for (int j = 0; j < dz.d; ++j) {
          names.push_back(data.group_names()[i] + ":" + data.time_names()[j]);
          sizes.push_back(dz.n[i]);
        }
      auto base = build_contrast(kind, dz.cells(), sizes, names);
      return factorial_contrast(effect, base, dz);
    }
  }
  throw validation_error("BAD_EFFECT", "unreachable");
}

Eigen::MatrixXd projection(const ContrastFamily& c) {
  if (c.c.rows() == 0)
    throw validation_error("BAD_CONTRAST", "empty contrast family");
  const Eigen::MatrixXd cc = c.c * c.c.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cc);
  const double cut = 1e-10 * es.eigenvalues().cwiseAbs().maxCoeff();
  Eigen::VectorXd inv = es.eigenvalues();
  for (int i = 0; i < inv.size(); ++i) inv(i) = inv(i) > cut ? 1.0 / inv(i) : 0.0;
  const Eigen::MatrixXd pinv =
      es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
  Eigen::MatrixXd m = c.c.transpose() * pinv * c.c;
  return 0.5 * (m + m.transpose());
}

ContrastFamily load_contrast_tsv(const std::string& path, int ad) {
  std::ifstream in(path);
  if (!in) throw validation_error("NO_SUCH_FILE", "cannot open '" + path + "'");
  ContrastFamily fam;
  fam.kind = ContrastKind::User;
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::vector<double> row;
    double v;
    while (ss >> v) row.push_back(v);
    if (static_cast<int>(row.size()) != ad)
      throw validation_error("BAD_CONTRAST",
                             "line " + std::to_string(lineno) + ": expected " +
                                 std::to_string(ad) + " coefficients");
    double sum = 0;
    for (double x : row) sum += x;
    if (std::abs(sum) > 1e-9)
      throw validation_error("BAD_CONTRAST",
                             "line " + std::to_string(lineno) +
                                 ": row does not sum to zero");
    rows.push_back(std::move(row));
    fam.labels.push_back("contrast " + std::to_string(rows.size()));
  }
  if (rows.empty())
    throw validation_error("BAD_CONTRAST", "contrast file has no rows");
  fam.c.resize(static_cast<int>(rows.size()), ad);
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (int j = 0; j < ad; ++j) fam.c(static_cast<int>(r), j) = rows[r][j];
  return fam;
}

}  // namespace rankmctp
