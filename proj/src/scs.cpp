#include "samid/scs.hpp"

#include "samid/error.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace samid::scs {

RowSpace row_space(const MatrixXd& Z, const VectorXd& z0, int rank) {
  if (z0.size() != Z.rows()) throw InvalidInput("intersection point does not match the observation dimension");
  if (rank < 1) throw InvalidInput("retained rank must be at least 1");
  if (rank > std::min<Index>(Z.cols(), Z.rows())) {
    std::ostringstream msg;
    msg << "retained rank " << rank << " exceeds min(N, Nx+Ny) = " << std::min<Index>(Z.cols(), Z.rows());
    throw InvalidInput(msg.str());
  }
  if (Z.cols() <= rank) throw InvalidInput("row space extraction needs more observations than the retained rank");

  const MatrixXd centered = Z.colwise() - z0;
  // The right singular vectors of the centered data are the left singular
  // vectors of its transpose, which is tall and cheap to decompose.
  Eigen::JacobiSVD<MatrixXd> svd(centered.transpose(), Eigen::ComputeThinU);
  const VectorXd& sv = svd.singularValues();
  const double floor = static_cast<double>(std::max(Z.rows(), Z.cols())) *
                       std::numeric_limits<double>::epsilon() * sv(0);
  if (!(sv(0) > 0.0) || !(sv(rank - 1) > floor)) {
    throw NumericalFailure("retained singular values vanish: observations are degenerate about the intersection");
  }
  RowSpace out;
  out.V = svd.matrixU().leftCols(rank);
  out.singular_values = sv.head(rank);
  out.residual_energy = sv.tail(sv.size() - rank).squaredNorm();
  return out;
}

AdjacencyMatrix adjacency(const RowSpace& space) {
  AdjacencyMatrix adj;
  adj.M = (space.V * space.V.transpose()).cwiseAbs();
  adj.M = (0.5 * (adj.M + adj.M.transpose())).eval();
  adj.W = adj.M.rowwise().sum();
  const double largest = adj.W.maxCoeff();
  if (!(largest > 0.0)) throw NumericalFailure("adjacency matrix is zero");
  adj.W = adj.W.cwiseMax(1e-12 * largest);
  const VectorXd inv_sqrt = adj.W.cwiseSqrt().cwiseInverse();
  const Index n = adj.M.rows();
  adj.Mbar.resize(n, n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < n; ++i) adj.Mbar(i, j) = adj.M(i, j) * (inv_sqrt(i) * inv_sqrt(j));
  }
  return adj;
}

SpectralEmbedding spectral_embed(const AdjacencyMatrix& adj, int num_clusters) {
  const Index n = adj.Mbar.rows();
  if (num_clusters < 1 || num_clusters >= n) {
    throw InvalidInput("spectral embedding needs 1 <= K < N");
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(adj.Mbar);
  if (eig.info() != Eigen::Success) throw NumericalFailure("symmetric eigensolver did not converge");
  // Eigenvalues come back ascending.
  SpectralEmbedding out;
  out.E.resize(n, num_clusters);
  out.eigenvalues.resize(num_clusters);
  for (int c = 0; c < num_clusters; ++c) {
    out.E.col(c) = eig.eigenvectors().col(n - 1 - c);
    out.eigenvalues(c) = eig.eigenvalues()(n - 1 - c);
  }
  out.next_eigenvalue = eig.eigenvalues()(n - 1 - num_clusters);
  return out;
}

ScsResult scs_label(const Dataset& data, int num_clusters, std::uint64_t seed, const KMeansOptions& kmeans) {
  data.validate();
  const int nx = data.input_dim();
  const int ny = data.output_dim();
  if (num_clusters < 2) throw InvalidInput("spectral clustering needs K >= 2");
  const int rank = num_clusters * nx;
  if (rank > nx + ny) {
    throw InvalidInput("row-space rank K*Nx exceeds Nx+Ny; identifiability needs Ny >= (K-1)*Nx");
  }
  if (data.size() < static_cast<Index>(rank) + 1) {
    throw InvalidInput("spectral clustering needs at least K*Nx+1 observations");
  }

  ScsResult result;
  const auto poly = intersection::fit_hdc_coefficients(data, num_clusters);
  result.diagnostics.intersection = intersection::estimate_intersection(poly);

  VectorXd z0(nx + ny);
  z0 << result.diagnostics.intersection.x0, result.diagnostics.intersection.y0;
  const RowSpace space = row_space(data.stacked(), z0, rank);
  const AdjacencyMatrix adj = adjacency(space);
  const SpectralEmbedding embedding = spectral_embed(adj, num_clusters);
  auto clusters = kmeans_rows(embedding.E, num_clusters, kmeans, seed);

  result.labels = std::move(clusters.labels);
  result.adjacency_diagonal = adj.M.diagonal();
  auto& diag = result.diagnostics;
  diag.eigenvalues.resize(num_clusters + 1);
  diag.eigenvalues << embedding.eigenvalues, embedding.next_eigenvalue;
  diag.eigengap = embedding.eigenvalues(num_clusters - 1) - embedding.next_eigenvalue;
  diag.restart_scores = std::move(clusters.restart_scores);
  diag.retained_singular_values = space.singular_values;
  return result;
}

nlohmann::json to_json(const ScsDiagnostics& d) {
  auto vec = [](const VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  nlohmann::json scores = nlohmann::json::array();
  for (double s : d.restart_scores) {
    if (std::isfinite(s)) {
      scores.push_back(s);
    } else {
      scores.push_back(nullptr);
    }
  }
  return {{"intersection_residual", d.intersection.residual},
          {"x0", vec(d.intersection.x0)},
          {"y0", vec(d.intersection.y0)},
          {"eigenvalues", vec(d.eigenvalues)},
          {"eigengap", d.eigengap},
          {"restart_scores", scores},
          {"retained_singular_values", vec(d.retained_singular_values)}};
}

}  // namespace samid::scs
