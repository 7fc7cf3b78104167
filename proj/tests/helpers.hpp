#pragma once

#include <Eigen/Dense>
#include <random>
#include <vector>

#include "rankmctp/dataset.hpp"
#include "rankmctp/effects.hpp"

namespace testutil {

using rankmctp::Dataset;
using rankmctp::Design;

// Random small design with optional tie injection (values on a coarse grid).
inline Dataset random_dataset(std::mt19937_64& rng, int max_a = 3, int max_d = 3,
                              int max_n = 6, bool ties = true, int min_n = 2) {
  std::uniform_int_distribution<int> ua(2, max_a), ud(1, max_d), un(min_n, max_n);
  std::uniform_real_distribution<double> uv(0.0, 1.0);
  Design design;
  design.a = ua(rng);
  design.d = ud(rng);
  for (int i = 0; i < design.a; ++i) design.n.push_back(un(rng));
  std::vector<Eigen::MatrixXd> values(design.a);
  for (int i = 0; i < design.a; ++i) {
    values[i].resize(design.n[i], design.d);
    for (int k = 0; k < design.n[i]; ++k)
      for (int j = 0; j < design.d; ++j) {
        double v = uv(rng);
        if (ties) v = std::floor(v * 4.0);  // heavy ties on {0,1,2,3}
        values[i](k, j) = v;
      }
  }
  return Dataset(std::move(design), std::move(values));
}

// Brute-force counting estimate of w_{rs,ij} = P(X_rs < X_ij) + P(=)/2.
inline double counting_w(const Dataset& data, int r, int s, int i, int j) {
  const auto& dz = data.design();
  double acc = 0;
  for (int k = 0; k < dz.n[i]; ++k)
    for (int k2 = 0; k2 < dz.n[r]; ++k2) {
      const double diff = data.value(i, j, k) - data.value(r, s, k2);
      acc += diff > 0 ? 1.0 : (diff == 0 ? 0.5 : 0.0);
    }
  return acc / (static_cast<double>(dz.n[i]) * dz.n[r]);
}

// Empirical distribution value F̂_pq(x) with ties counted half.
inline double ecdf(const Dataset& data, int p, int q, double x) {
  const auto& dz = data.design();
  double acc = 0;
  for (int k = 0; k < dz.n[p]; ++k) {
    const double v = data.value(p, q, k);
    acc += v < x ? 1.0 : (v == x ? 0.5 : 0.0);
  }
  return acc / dz.n[p];
}

}  // namespace testutil
