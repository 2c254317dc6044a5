#include "samid/estimation.hpp"

#include "samid/error.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace samid::estimation {
namespace {

struct ClusterData {
  MatrixXd X;
  MatrixXd Y;
  std::optional<VectorXd> weights;
};

ClusterData gather(const Dataset& data, const std::vector<Index>& idx, const std::optional<VectorXd>& weights) {
  ClusterData c{MatrixXd(data.input_dim(), static_cast<Index>(idx.size())),
                MatrixXd(data.output_dim(), static_cast<Index>(idx.size())), std::nullopt};
  if (weights) c.weights = VectorXd(static_cast<Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) {
    c.X.col(static_cast<Index>(k)) = data.X.col(idx[k]);
    c.Y.col(static_cast<Index>(k)) = data.Y.col(idx[k]);
    if (weights) (*c.weights)(static_cast<Index>(k)) = (*weights)(idx[k]);
  }
  return c;
}

VectorXd weighted_mean(const MatrixXd& A, const std::optional<VectorXd>& w) {
  if (!w) return A.rowwise().mean();
  return A * (*w) / w->sum();
}

SubmodelEstimate fit_cluster(const ClusterData& c, int cluster, bool ordinary) {
  const VectorXd x_mean = weighted_mean(c.X, c.weights);
  const VectorXd y_mean = weighted_mean(c.Y, c.weights);
  const MatrixXd xc = c.X.colwise() - x_mean;
  const MatrixXd yc = c.Y.colwise() - y_mean;
  SubmodelEstimate est;
  if (ordinary) {
    // Noise-free inputs: Theta^T solves Xc^T Theta^T = Yc^T in least squares.
    const Eigen::ColPivHouseholderQR<MatrixXd> qr(xc.transpose());
    if (qr.rank() < xc.rows()) throw NumericalFailure("least squares inputs are rank deficient");
    est.theta = qr.solve(yc.transpose()).transpose();
  } else {
    est.theta = tls_linear(xc, yc, c.weights);
  }
  est.gamma = y_mean - est.theta * x_mean;
  est.n_used = c.X.cols();
  est.cluster_index = cluster;
  return est;
}

}  // namespace

MatrixXd tls_linear(const MatrixXd& Xc, const MatrixXd& Yc, const std::optional<VectorXd>& weights) {
  const Index nx = Xc.rows();
  const Index ny = Yc.rows();
  const Index m = Xc.cols();
  if (nx < 1 || ny < 1) throw InvalidInput("TLS needs positive input and output dimensions");
  if (Yc.cols() != m) throw InvalidInput("TLS inputs and outputs disagree on the sample count");
  if (m < nx + ny) {
    std::ostringstream msg;
    msg << "TLS needs at least Nx+Ny = " << nx + ny << " samples, got " << m;
    throw NumericalFailure(msg.str());
  }
  MatrixXd c(nx + ny, m);
  c.topRows(nx) = Xc;
  c.bottomRows(ny) = Yc;
  if (!c.allFinite()) throw NumericalFailure("TLS data contain non-finite values");

  const double magnitude = std::max(c.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  VectorXd mean;
  if (weights) {
    if (weights->size() != m) throw InvalidInput("TLS weight count does not match the sample count");
    if (!((weights->array() > 0.0).all()) || !weights->allFinite()) {
      throw InvalidInput("TLS weights must be positive and finite");
    }
    mean = c * (*weights) / weights->sum();
  } else {
    mean = c.rowwise().mean();
  }
  if (mean.cwiseAbs().maxCoeff() > 1e-8 * magnitude) throw InvalidInput("TLS data must be centered");

  if (weights) c = c * weights->cwiseSqrt().asDiagonal();

  Eigen::JacobiSVD<MatrixXd> svd(c.transpose(), Eigen::ComputeFullV);
  const MatrixXd& v = svd.matrixV();
  const MatrixXd v12 = v.block(0, nx, nx, ny);
  const MatrixXd v22 = v.block(nx, nx, ny, ny);
  Eigen::JacobiSVD<MatrixXd> v22_svd(v22);
  if (!(v22_svd.singularValues()(ny - 1) > 1e-12)) {
    throw NumericalFailure("TLS problem is nongeneric (output block of the null space is singular)");
  }
  return v22.transpose().fullPivLu().solve(-v12.transpose());
}

std::vector<SubmodelEstimate> fit_submodels(const Dataset& data, const Labels& labels, int num_clusters,
                                            const std::optional<VectorXd>& adjacency_diag,
                                            const FitOptions& options) {
  data.validate();
  const Index n = data.size();
  if (static_cast<Index>(labels.size()) != n) throw InvalidInput("label count does not match the data");
  if (num_clusters < 1) throw InvalidInput("need at least one cluster");
  if (!(options.diag_threshold >= 0.0 && options.diag_threshold < 1.0)) {
    throw InvalidInput("diag_threshold must lie in [0, 1)");
  }
  const bool weighted = options.weight_mode == WeightMode::adjacency_diagonal;
  const bool thresholded = options.diag_threshold > 0.0;
  if ((weighted || thresholded) && !adjacency_diag) {
    throw InvalidInput("weighting or thresholding needs the adjacency diagonal");
  }
  if (adjacency_diag && adjacency_diag->size() != n) {
    throw InvalidInput("adjacency diagonal length does not match the data");
  }

  std::vector<std::vector<Index>> members(static_cast<std::size_t>(num_clusters));
  for (Index i = 0; i < n; ++i) {
    if (labels[i] < 0 || labels[i] >= num_clusters) throw InvalidInput("label out of range");
    members[labels[i]].push_back(i);
  }

  const Index minimum = data.input_dim() + data.output_dim();
  std::vector<SubmodelEstimate> out;
  for (int c = 0; c < num_clusters; ++c) {
    std::vector<Index> kept = members[c];
    if (thresholded && !kept.empty()) {
      double largest = 0.0;
      for (Index i : kept) largest = std::max(largest, (*adjacency_diag)(i));
      std::erase_if(kept, [&](Index i) { return (*adjacency_diag)(i) < options.diag_threshold * largest; });
    }
    if (weighted) std::erase_if(kept, [&](Index i) { return !((*adjacency_diag)(i) > 0.0); });
    if (static_cast<Index>(kept.size()) < minimum) {
      std::ostringstream msg;
      msg << "cluster " << c << " has " << kept.size() << " usable observations, needs " << minimum;
      throw NumericalFailure(msg.str());
    }
    const auto cluster = gather(data, kept, weighted ? adjacency_diag : std::nullopt);
    out.push_back(fit_cluster(cluster, c, false));
  }
  return out;
}

std::vector<SubmodelEstimate> clairvoyant_fit(const Dataset& data, int num_submodels,
                                              std::optional<double> sigma_ratio) {
  if (!data.labels) throw InvalidInput("clairvoyant fit needs the true labels");
  if (sigma_ratio && (!(*sigma_ratio >= 0.0) || !std::isfinite(*sigma_ratio))) {
    throw InvalidInput("sigma ratio must be finite and non-negative");
  }
  if (!sigma_ratio || *sigma_ratio == 1.0) {
    return fit_submodels(data, *data.labels, num_submodels, std::nullopt);
  }
  if (*sigma_ratio == 0.0) {
    data.validate();
    std::vector<std::vector<Index>> members(static_cast<std::size_t>(num_submodels));
    for (Index i = 0; i < data.size(); ++i) {
      const int l = (*data.labels)[i];
      if (l < 0 || l >= num_submodels) throw InvalidInput("label out of range");
      members[l].push_back(i);
    }
    std::vector<SubmodelEstimate> out;
    for (int c = 0; c < num_submodels; ++c) {
      if (static_cast<Index>(members[c].size()) < data.input_dim() + 1) {
        throw NumericalFailure("submodel has too few observations for least squares");
      }
      out.push_back(fit_cluster(gather(data, members[c], std::nullopt), c, true));
    }
    return out;
  }
  // Rescale inputs so input and output errors share one variance.
  const double factor = 1.0 / *sigma_ratio;
  Dataset scaled = data;
  scaled.X *= factor;
  auto out = fit_submodels(scaled, *data.labels, num_submodels, std::nullopt);
  for (auto& est : out) est.theta *= factor;
  return out;
}

SwitchedAffineModel to_model(const std::vector<SubmodelEstimate>& estimates) {
  std::vector<Submodel> subs;
  for (const auto& e : estimates) subs.push_back(Submodel{e.theta, e.gamma});
  return SwitchedAffineModel(std::move(subs));
}

}  // namespace samid::estimation
