#include "klpool/extreme.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>

#include "klpool/errors.hpp"

namespace klpool {
namespace {

constexpr double kMergeTolerance = 1e-12;
constexpr double kWeightEpsilon = 1e-14;

// Minimizer of ||Q a|| over the affine hull of the columns of Q.
Eigen::VectorXd affine_minimizer(const Eigen::MatrixXd& q) {
  const Eigen::Index m = q.cols();
  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(m + 1, m + 1);
  kkt.topLeftCorner(m, m) = q.transpose() * q;
  kkt.block(0, m, m, 1).setOnes();
  kkt.block(m, 0, 1, m).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m + 1);
  rhs(m) = 1.0;
  Eigen::VectorXd sol = kkt.completeOrthogonalDecomposition().solve(rhs);
  return sol.head(m);
}

}  // namespace

PointSet::PointSet(std::vector<std::vector<double>> points) : points_(std::move(points)) {
  if (points_.empty()) throw DomainError("PointSet is empty");
  const std::size_t d = points_.front().size();
  if (d == 0) throw DomainError("PointSet points have dimension 0");
  for (const auto& p : points_) {
    if (p.size() != d) throw DimensionError("PointSet points have different dimensions");
    for (double x : p) {
      if (!(x >= 0.0 && x <= 1.0)) throw DomainError("PointSet coordinate outside [0,1]");
    }
  }
}

HullMembership hull_membership(const PointSet& ps, std::size_t i) {
  const std::size_t n = ps.size();
  const std::size_t d = ps.dimension();
  HullMembership out;
  out.lambda.assign(n, 0.0);
  if (n == 1) {
    out.residual = std::numeric_limits<double>::infinity();
    return out;
  }

  // Columns are x_k - x_i for k != i; the hull contains x_i iff it contains 0.
  std::vector<std::size_t> others;
  for (std::size_t k = 0; k < n; ++k) {
    if (k != i) others.push_back(k);
  }
  Eigen::MatrixXd shifted(d, others.size());
  for (std::size_t c = 0; c < others.size(); ++c) {
    for (std::size_t r = 0; r < d; ++r) shifted(r, c) = ps[others[c]][r] - ps[i][r];
  }
  const double scale = std::max(1.0, shifted.colwise().squaredNorm().maxCoeff());

  Eigen::Index start = 0;
  shifted.colwise().squaredNorm().minCoeff(&start);
  std::vector<Eigen::Index> support{start};
  std::vector<double> weights{1.0};
  Eigen::VectorXd x = shifted.col(start);

  auto support_matrix = [&] {
    Eigen::MatrixXd q(d, support.size());
    for (std::size_t s = 0; s < support.size(); ++s) q.col(s) = shifted.col(support[s]);
    return q;
  };

  for (int major = 0; major < 1000; ++major) {
    if (x.squaredNorm() <= 1e-30 * scale) break;
    Eigen::Index j = 0;
    (shifted.transpose() * x).minCoeff(&j);
    if (x.squaredNorm() - x.dot(shifted.col(j)) <= 1e-15 * scale) break;
    if (std::find(support.begin(), support.end(), j) != support.end()) break;
    support.push_back(j);
    weights.push_back(0.0);

    for (int minor = 0; minor < 1000; ++minor) {
      Eigen::MatrixXd q = support_matrix();
      Eigen::VectorXd alpha = affine_minimizer(q);
      if ((alpha.array() > kWeightEpsilon).all()) {
        for (std::size_t s = 0; s < support.size(); ++s) weights[s] = alpha(s);
        x = q * alpha;
        break;
      }
      double theta = 1.0;
      for (std::size_t s = 0; s < support.size(); ++s) {
        if (alpha(s) <= kWeightEpsilon && weights[s] - alpha(s) > 0.0) {
          theta = std::min(theta, weights[s] / (weights[s] - alpha(s)));
        }
      }
      for (std::size_t s = 0; s < support.size(); ++s) {
        weights[s] = theta * alpha(s) + (1.0 - theta) * weights[s];
      }
      std::vector<Eigen::Index> kept;
      std::vector<double> kept_weights;
      for (std::size_t s = 0; s < support.size(); ++s) {
        if (weights[s] > kWeightEpsilon) {
          kept.push_back(support[s]);
          kept_weights.push_back(weights[s]);
        }
      }
      if (kept.empty()) {
        kept.push_back(support.back());
        kept_weights.push_back(1.0);
      }
      double total = 0.0;
      for (double w : kept_weights) total += w;
      for (double& w : kept_weights) w /= total;
      support = std::move(kept);
      weights = std::move(kept_weights);
      x = support_matrix() * Eigen::Map<const Eigen::VectorXd>(weights.data(), weights.size());
    }
  }

  for (std::size_t s = 0; s < support.size(); ++s) out.lambda[others[support[s]]] = weights[s];
  out.residual = x.lpNorm<Eigen::Infinity>();
  out.inside = out.residual <= kHullResidualTolerance;
  return out;
}

std::vector<std::size_t> extreme_subset(const PointSet& ps) {
  std::vector<std::size_t> distinct;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    bool copy = false;
    for (std::size_t k : distinct) {
      double diff = 0.0;
      for (std::size_t r = 0; r < ps.dimension(); ++r) diff = std::max(diff, std::abs(ps[i][r] - ps[k][r]));
      if (diff <= kMergeTolerance) {
        copy = true;
        break;
      }
    }
    if (!copy) distinct.push_back(i);
  }
  if (distinct.size() <= 2) return distinct;

  std::vector<std::vector<double>> pts;
  for (std::size_t i : distinct) pts.emplace_back(ps[i].begin(), ps[i].end());
  PointSet reduced(std::move(pts));
  std::vector<std::size_t> extreme;
  for (std::size_t k = 0; k < reduced.size(); ++k) {
    if (!hull_membership(reduced, k).inside) extreme.push_back(distinct[k]);
  }
  return extreme;
}

std::pair<std::size_t, std::size_t> binary_extremes(std::span<const double> probs) {
  if (probs.empty()) throw DomainError("binary_extremes of an empty list");
  std::size_t lo = 0;
  std::size_t hi = 0;
  for (std::size_t i = 1; i < probs.size(); ++i) {
    if (probs[i] < probs[lo]) lo = i;
    if (probs[i] > probs[hi]) hi = i;
  }
  return {lo, hi};
}

}  // namespace klpool
