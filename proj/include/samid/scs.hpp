#pragma once

// Spectral clustering on the observation row space.
//
// After removing the intersection point, noiseless data satisfy
// Z - Z0 = A(Theta) (D - D0)^T P, so the retained right singular vectors V
// span the row space of the block-diagonal input matrix and |V V^T| is a
// permuted block-diagonal adjacency matrix. The K leading eigenvectors of its
// normalized form are block indicators, which k-means turns into labels.

#include "samid/intersection.hpp"
#include "samid/model_sim.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <vector>

namespace samid {

struct RowSpace {
  MatrixXd V;                // N x r, orthonormal columns
  VectorXd singular_values;  // the r retained values, descending
  double residual_energy = 0.0;
};

struct AdjacencyMatrix {
  MatrixXd M;     // |V V^T|, symmetric, non-negative
  VectorXd W;     // row sums, floored at 1e-12 * max
  MatrixXd Mbar;  // W^-1/2 M W^-1/2
};

struct SpectralEmbedding {
  MatrixXd E;                  // N x K
  VectorXd eigenvalues;        // K largest, descending
  double next_eigenvalue = 0;  // (K+1)-th largest, NaN when K == N
};

struct KMeansOptions {
  int restarts = 10;
  int max_iterations = 100;
  double tolerance = 1e-9;  // relative change in inertia
};

struct KMeansResult {
  Labels labels;
  MatrixXd centroids;  // K x dim
  double inertia = 0.0;
  /// Final inertia of each restart; +inf for restarts that ended with an empty cluster.
  std::vector<double> restart_scores;
  int best_restart = 0;
};

struct ScsDiagnostics {
  IntersectionPoint intersection;
  VectorXd eigenvalues;  // K+1 largest when available
  double eigengap = 0.0;  // lambda_K - lambda_{K+1}
  std::vector<double> restart_scores;
  VectorXd retained_singular_values;
};

struct ScsResult {
  Labels labels;
  VectorXd adjacency_diagonal;  // diag(M), used for weighted estimation
  ScsDiagnostics diagnostics;
};

namespace scs {

/// Right singular vectors of Z - z0 1^T for the r largest singular values.
RowSpace row_space(const MatrixXd& Z, const VectorXd& z0, int rank);

AdjacencyMatrix adjacency(const RowSpace& space);

/// Eigenvectors of Mbar for its K algebraically largest eigenvalues.
SpectralEmbedding spectral_embed(const AdjacencyMatrix& adj, int num_clusters);

/// Lloyd's algorithm with k-means++ seeding on the rows of `points`.
/// Restart r uses sub-seed derive_seed(seed, r); the lowest inertia wins, ties
/// going to the lower restart index.
KMeansResult kmeans_rows(const MatrixXd& points, int num_clusters, const KMeansOptions& options,
                         std::uint64_t seed);

/// Labels observations: intersection estimate, row space of rank K*Nx,
/// adjacency, spectral embedding, k-means.
ScsResult scs_label(const Dataset& data, int num_clusters, std::uint64_t seed,
                    const KMeansOptions& kmeans = {});

nlohmann::json to_json(const ScsDiagnostics& diagnostics);

}  // namespace scs
}  // namespace samid
