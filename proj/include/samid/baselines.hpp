#pragma once

// Comparison methods: clustering of local affine fits in feature space, and
// a SISO two-submodel decoupling-polynomial (GPCA-style) estimator.

#include "samid/estimation.hpp"
#include "samid/intersection.hpp"
#include "samid/scs.hpp"

#include <cstdint>
#include <vector>

namespace samid {

/// theta_tilde = [t1 t2, t1 + t2, g1 t2 + g2 t1, g1 + g2], gamma_tilde = g1 g2,
/// read off a normalised SISO degree-2 decoupling polynomial.
struct HdcAggregates {
  Eigen::Vector4d theta_tilde;
  double gamma_tilde = 0.0;
};

namespace baselines {

/// Row n holds [vec(Theta_loc) (row-major), Gamma_loc] from an ordinary least
/// squares fit on the c observations nearest to x_n in input space (x_n
/// included, ties broken by index).
MatrixXd local_affine_features(const Dataset& data, int neighborhood);

Labels feature_cluster_labels(const Dataset& data, int num_clusters, int neighborhood, std::uint64_t seed,
                              const KMeansOptions& kmeans = {});

/// Default neighbourhood size: 7 for scalar inputs, 10 otherwise.
int default_neighborhood(int input_dim);

HdcAggregates hdc_aggregates(const HybridPolynomial& poly);

/// Recovers both submodels from the polynomial roots, ordered by ascending
/// slope. Throws NumericalFailure on complex or repeated roots.
std::vector<SubmodelEstimate> gpca_lite_from_polynomial(const HybridPolynomial& poly);

/// Requires Nx = Ny = 1; always fits K = 2.
std::vector<SubmodelEstimate> gpca_lite_fit(const Dataset& data);

/// Labels each observation with the estimate of smallest output residual.
Labels assign_by_residual(const Dataset& data, const std::vector<SubmodelEstimate>& estimates);

/// Output-noise term of the expanded decoupling constraint, 2 y w - w^2.
/// Its mean under zero-mean noise is -sigma^2, not zero.
constexpr double hdc_output_noise(double y, double w) { return 2.0 * y * w - w * w; }

}  // namespace baselines
}  // namespace samid
