#include "samid/baselines.hpp"

#include "samid/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace samid::baselines {

MatrixXd local_affine_features(const Dataset& data, int neighborhood) {
  data.validate();
  const int nx = data.input_dim();
  const int ny = data.output_dim();
  const Index n = data.size();
  if (neighborhood < nx + 1) throw InvalidInput("neighbourhood size must be at least Nx+1");
  if (n <= neighborhood) throw InvalidInput("need more observations than the neighbourhood size");

  MatrixXd features(n, ny * nx + ny);
  std::vector<Index> order(static_cast<std::size_t>(n));
  VectorXd dist(n);
  MatrixXd regressors(neighborhood, nx + 1);
  MatrixXd targets(neighborhood, ny);
  for (Index i = 0; i < n; ++i) {
    dist = (data.X.colwise() - data.X.col(i)).colwise().squaredNorm().transpose();
    std::iota(order.begin(), order.end(), Index{0});
    std::partial_sort(order.begin(), order.begin() + neighborhood, order.end(), [&](Index a, Index b) {
      return dist(a) < dist(b) || (dist(a) == dist(b) && a < b);
    });
    for (int k = 0; k < neighborhood; ++k) {
      const Index m = order[k];
      regressors.row(k).head(nx) = data.X.col(m).transpose();
      regressors(k, nx) = 1.0;
      targets.row(k) = data.Y.col(m).transpose();
    }
    const Eigen::ColPivHouseholderQR<MatrixXd> qr(regressors);
    if (qr.rank() < nx + 1) throw NumericalFailure("degenerate local neighbourhood (singular local regression)");
    const MatrixXd coef = qr.solve(targets);  // (Nx+1) x Ny, last row is Gamma
    for (int r = 0; r < ny; ++r) {
      for (int c = 0; c < nx; ++c) features(i, r * nx + c) = coef(c, r);
      features(i, ny * nx + r) = coef(nx, r);
    }
  }
  return features;
}

Labels feature_cluster_labels(const Dataset& data, int num_clusters, int neighborhood, std::uint64_t seed,
                              const KMeansOptions& kmeans) {
  return scs::kmeans_rows(local_affine_features(data, neighborhood), num_clusters, kmeans, seed).labels;
}

int default_neighborhood(int input_dim) { return input_dim == 1 ? 7 : 10; }

namespace {

void check_siso_quadratic(const HybridPolynomial& poly) {
  if (poly.input_dim != 1 || poly.channels.size() != 1 || poly.degree != 2 || poly.basis.num_vars() != 2 ||
      poly.basis.degree() != 2) {
    throw InvalidInput("GPCA-lite handles single-input single-output models with two submodels only");
  }
}

}  // namespace

HdcAggregates hdc_aggregates(const HybridPolynomial& poly) {
  check_siso_quadratic(poly);
  const auto& c = poly.channels.front();
  auto coef = [&](int ey, int ex) { return c(poly.basis.index_of({ey, ex})); };
  HdcAggregates agg;
  agg.theta_tilde << coef(0, 2), -coef(1, 1), coef(0, 1), -coef(1, 0);
  agg.gamma_tilde = coef(0, 0);
  return agg;
}

std::vector<SubmodelEstimate> gpca_lite_from_polynomial(const HybridPolynomial& poly) {
  const auto agg = hdc_aggregates(poly);
  const double product = agg.theta_tilde(0);
  const double sum = agg.theta_tilde(1);
  const double cross = agg.theta_tilde(2);
  const double gamma_sum = agg.theta_tilde(3);

  const double disc = sum * sum - 4.0 * product;
  if (!(disc > 0.0)) {
    throw NumericalFailure(disc < 0.0 ? "decoupling polynomial has complex slope roots"
                                      : "decoupling polynomial has a repeated slope root");
  }
  // Roots of t^2 - sum t + product without cancellation.
  const double root_disc = std::sqrt(disc);
  double t1, t2;
  if (sum != 0.0) {
    const double q = 0.5 * (sum + std::copysign(root_disc, sum));
    t1 = q;
    t2 = product / q;
  } else {
    t1 = 0.5 * root_disc;
    t2 = -0.5 * root_disc;
  }
  if (t1 > t2) std::swap(t1, t2);

  // g1 + g2 = gamma_sum, g1 t2 + g2 t1 = cross.
  const double g1 = (cross - t1 * gamma_sum) / (t2 - t1);
  const double g2 = gamma_sum - g1;

  std::vector<SubmodelEstimate> out(2);
  const double thetas[2] = {t1, t2};
  const double gammas[2] = {g1, g2};
  for (int i = 0; i < 2; ++i) {
    out[i].theta = MatrixXd::Constant(1, 1, thetas[i]);
    out[i].gamma = VectorXd::Constant(1, gammas[i]);
    out[i].cluster_index = i;
  }
  return out;
}

std::vector<SubmodelEstimate> gpca_lite_fit(const Dataset& data) {
  if (data.input_dim() != 1 || data.output_dim() != 1) {
    throw InvalidInput("GPCA-lite handles single-input single-output data only");
  }
  auto out = gpca_lite_from_polynomial(intersection::fit_hdc_coefficients(data, 2));
  for (auto& e : out) e.n_used = data.size();
  return out;
}

Labels assign_by_residual(const Dataset& data, const std::vector<SubmodelEstimate>& estimates) {
  if (estimates.empty()) throw InvalidInput("no estimates to assign against");
  Labels labels(static_cast<std::size_t>(data.size()));
  for (Index n = 0; n < data.size(); ++n) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < estimates.size(); ++i) {
      const double r = (data.Y.col(n) - estimates[i].theta * data.X.col(n) - estimates[i].gamma).squaredNorm();
      if (r < best) {
        best = r;
        labels[n] = static_cast<int>(i);
      }
    }
  }
  return labels;
}

}  // namespace samid::baselines
