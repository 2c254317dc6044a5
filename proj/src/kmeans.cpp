#include "samid/error.hpp"
#include "samid/rng.hpp"
#include "samid/scs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace samid::scs {
namespace {

MatrixXd seed_plus_plus(const MatrixXd& points, int k, Rng& rng) {
  const Index n = points.rows();
  MatrixXd centroids(k, points.cols());
  centroids.row(0) = points.row(static_cast<Index>(rng.below(static_cast<std::size_t>(n))));
  VectorXd nearest = (points.rowwise() - centroids.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < k; ++c) {
    const double total = nearest.sum();
    Index pick = n - 1;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double cumulative = 0.0;
      for (Index i = 0; i < n; ++i) {
        cumulative += nearest(i);
        if (target < cumulative) {
          pick = i;
          break;
        }
      }
    } else {
      // Every point coincides with a chosen center.
      pick = static_cast<Index>(rng.below(static_cast<std::size_t>(n)));
    }
    centroids.row(c) = points.row(pick);
    nearest = nearest.cwiseMin((points.rowwise() - centroids.row(c)).rowwise().squaredNorm());
  }
  return centroids;
}

// Nearest centroid per row, ties to the lower index. Returns the inertia.
double assign(const MatrixXd& points, const MatrixXd& centroids, Labels& labels) {
  double inertia = 0.0;
  for (Index i = 0; i < points.rows(); ++i) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Index c = 0; c < centroids.rows(); ++c) {
      const double d = (points.row(i) - centroids.row(c)).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(c);
      }
    }
    labels[i] = best;
    inertia += best_d;
  }
  return inertia;
}

struct LloydOutcome {
  Labels labels;
  MatrixXd centroids;
  double inertia;
  bool has_empty;
};

LloydOutcome lloyd(const MatrixXd& points, MatrixXd centroids, const KMeansOptions& options) {
  const int k = static_cast<int>(centroids.rows());
  Labels labels(static_cast<std::size_t>(points.rows()));
  double previous = std::numeric_limits<double>::infinity();
  double inertia = 0.0;
  std::vector<Index> counts(static_cast<std::size_t>(k));
  for (int it = 0; it < options.max_iterations; ++it) {
    inertia = assign(points, centroids, labels);
    if (std::isfinite(previous) && previous - inertia <= options.tolerance * previous) break;
    previous = inertia;
    MatrixXd sums = MatrixXd::Zero(k, points.cols());
    std::fill(counts.begin(), counts.end(), 0);
    for (Index i = 0; i < points.rows(); ++i) {
      sums.row(labels[i]) += points.row(i);
      ++counts[labels[i]];
    }
    // An empty cluster keeps its previous centroid.
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) centroids.row(c) = sums.row(c) / static_cast<double>(counts[c]);
    }
  }
  std::fill(counts.begin(), counts.end(), 0);
  for (int l : labels) ++counts[l];
  const bool has_empty = std::find(counts.begin(), counts.end(), 0) != counts.end();
  return {std::move(labels), std::move(centroids), inertia, has_empty};
}

}  // namespace

KMeansResult kmeans_rows(const MatrixXd& points, int num_clusters, const KMeansOptions& options,
                         std::uint64_t seed) {
  if (options.restarts < 1) throw InvalidInput("k-means needs at least one restart");
  if (options.max_iterations < 1) throw InvalidInput("k-means needs at least one iteration");
  if (num_clusters < 1) throw InvalidInput("k-means needs at least one cluster");
  if (points.rows() < num_clusters) throw InvalidInput("fewer points than clusters");
  if (!points.allFinite()) throw NumericalFailure("k-means input contains non-finite values");

  KMeansResult result;
  result.inertia = std::numeric_limits<double>::infinity();
  result.best_restart = -1;
  for (int r = 0; r < options.restarts; ++r) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
    auto outcome = lloyd(points, seed_plus_plus(points, num_clusters, rng), options);
    const double score = outcome.has_empty ? std::numeric_limits<double>::infinity() : outcome.inertia;
    result.restart_scores.push_back(score);
    if (score < result.inertia) {
      result.inertia = score;
      result.best_restart = r;
      result.labels = std::move(outcome.labels);
      result.centroids = std::move(outcome.centroids);
    }
  }
  if (result.best_restart < 0) {
    throw NumericalFailure("k-means left a cluster empty in every restart");
  }
  return result;
}

}  // namespace samid::scs
