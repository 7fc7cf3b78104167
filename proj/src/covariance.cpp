#include "rankmctp/covariance.hpp"

#include <algorithm>
#include <cmath>

namespace rankmctp {
namespace {

// Normalized ecdf of `sample` evaluated at x: (#< + #=/2) / n.
// `sorted` must be ascending.
double ecdf_at(const std::vector<double>& sorted, double x) {
  const auto lo = std::lower_bound(sorted.begin(), sorted.end(), x);
  const auto hi = std::upper_bound(sorted.begin(), sorted.end(), x);
  const double below = static_cast<double>(lo - sorted.begin());
  const double equal = static_cast<double>(hi - lo);
  return (below + 0.5 * equal) / static_cast<double>(sorted.size());
}

}  // namespace

TauTable::TauTable(int a, int d) : d_(d), ad_(a * d) {
  tau_.assign(a, std::vector<double>(static_cast<std::size_t>(d) * d * ad_ * ad_, 0.0));
}

ResidualTable d_residuals(const Dataset& data, const PairwiseEffects& w) {
  const auto& dz = data.design();
  const int ad = dz.cells();
  ResidualTable out;
  out.a = dz.a;
  out.d_levels = dz.d;
  out.d.resize(dz.a);

  std::vector<std::vector<double>> sorted_cells(ad);
  for (int p = 0; p < dz.a; ++p)
    for (int q = 0; q < dz.d; ++q) {
      const Eigen::VectorXd c = data.cell(p, q);
      auto& v = sorted_cells[dz.cell_index(p, q)];
      v.assign(c.data(), c.data() + c.size());
      std::sort(v.begin(), v.end());
    }

  for (int r = 0; r < dz.a; ++r) {
    out.d[r].resize(dz.n[r], dz.d * ad);
    for (int s = 0; s < dz.d; ++s) {
      const int rs = dz.cell_index(r, s);
      for (int pq = 0; pq < ad; ++pq) {
        for (int k = 0; k < dz.n[r]; ++k)
          out.d[r](k, s * ad + pq) =
              ecdf_at(sorted_cells[pq], data.value(r, s, k)) - w.w(pq, rs);
      }
    }
  }
  return out;
}

TauTable tau_hat(const ResidualTable& D, const Design& design) {
  design.validate();
  const int ad = design.cells();
  const int d = design.d;
  TauTable tau(design.a, d);
  for (int r = 0; r < design.a; ++r) {
    const int nr = design.n[r];
    if (nr < 2)
      throw validation_error("GROUP_TOO_SMALL",
                             "tau requires at least two subjects per group");
    // Gram matrix over columns of the residual block gives every
    // (s,pq) x (j,p'q') product in one pass.
    const Eigen::MatrixXd gram = D.d[r].transpose() * D.d[r] /
                                 (static_cast<double>(nr) * (nr - 1));
    for (int s = 0; s < d; ++s)
      for (int j = 0; j < d; ++j)
        for (int pq = 0; pq < ad; ++pq)
          for (int pq2 = 0; pq2 < ad; ++pq2)
            tau.at(r, s, j, pq, pq2) = gram(s * ad + pq, j * ad + pq2);
  }
  return tau;
}

double sigma_entry(const TauTable& tau, const Design& design, int r, int s,
                   int i, int j, int p, int q, int p2, int q2) {
  const int d = design.d;
  const int rs = r * d + s, ij = i * d + j, pq = p * d + q, pq2 = p2 * d + q2;
  double v = 0.0;
  // The component for ŵ_{pq,rs} receives +D_{rs.}(pq) through group r and
  // -D_{pq.}(rs) through group p; products of matching groups survive.
  if (r == i) v += tau.at(r, s, j, pq, pq2);
  if (r == p2) v -= tau.at(r, s, q2, pq, ij);
  if (p == i) v -= tau.at(p, q, j, rs, pq2);
  if (p == p2) v += tau.at(p, q, q2, rs, ij);
  return v * design.total();
}

Eigen::MatrixXd sigma_hat(const TauTable& tau, const Design& design) {
  const int ad = design.cells();
  const int d = design.d;
  Eigen::MatrixXd sigma(ad * ad, ad * ad);
  for (int r = 0; r < design.a; ++r)
    for (int s = 0; s < d; ++s)
      for (int p = 0; p < design.a; ++p)
        for (int q = 0; q < d; ++q)
          for (int i = 0; i < design.a; ++i)
            for (int j = 0; j < d; ++j)
              for (int p2 = 0; p2 < design.a; ++p2)
                for (int q2 = 0; q2 < d; ++q2)
                  sigma((r * d + s) * ad + p * d + q,
                        (i * d + j) * ad + p2 * d + q2) =
                      sigma_entry(tau, design, r, s, i, j, p, q, p2, q2);
  return sigma;
}

Eigen::MatrixXd v_hat(const Eigen::MatrixXd& sigma, const Design& design) {
  const int ad = design.cells();
  if (sigma.rows() != ad * ad || sigma.cols() != ad * ad)
    throw validation_error("DIMENSION_MISMATCH", "sigma does not match design");
  Eigen::MatrixXd v(ad, ad);
  for (int b1 = 0; b1 < ad; ++b1)
    for (int b2 = 0; b2 < ad; ++b2)
      v(b1, b2) = sigma.block(b1 * ad, b2 * ad, ad, ad).sum() /
                  (static_cast<double>(ad) * ad);
  return 0.5 * (v + v.transpose());
}

std::vector<Eigen::MatrixXd> influence_vectors(const Design& design,
                                               const ResidualTable& D) {
  const int ad = design.cells();
  const int d = design.d;
  std::vector<Eigen::MatrixXd> phi(design.a);
  for (int g = 0; g < design.a; ++g) {
    const int ng = design.n[g];
    phi[g].setZero(ng, ad);
    for (int k = 0; k < ng; ++k) {
      for (int ij = 0; ij < ad; ++ij) {
        // -(1/ad) Σ_s D_{gs k}(ij)
        double acc = 0;
        for (int s = 0; s < d; ++s) acc -= D.d[g](k, s * ad + ij);
        phi[g](k, ij) = acc / ad;
      }
      for (int jj = 0; jj < d; ++jj) {
        // +(1/ad) Σ_pq D_{gj k}(pq) on the own-group cells
        double acc = 0;
        for (int pq = 0; pq < ad; ++pq) acc += D.d[g](k, jj * ad + pq);
        phi[g](k, g * d + jj) += acc / ad;
      }
    }
  }
  return phi;
}

CovarianceEstimate estimate_covariance(const Dataset& data,
                                       const PairwiseEffects& w) {
  const auto D = d_residuals(data, w);
  const auto tau = tau_hat(D, data.design());
  CovarianceEstimate est;
  est.sigma = sigma_hat(tau, data.design());
  est.v = v_hat(est.sigma, data.design());
  return est;
}

Eigen::MatrixXd clip_psd(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace rankmctp
