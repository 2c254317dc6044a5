#pragma once

#include "samid/model_sim.hpp"

#include <optional>
#include <vector>

namespace samid {

enum class WeightMode { none, adjacency_diagonal };

struct FitOptions {
  WeightMode weight_mode = WeightMode::none;
  /// Observations whose adjacency diagonal falls below
  /// diag_threshold * (cluster maximum) are dropped. Must lie in [0, 1).
  double diag_threshold = 0.0;
};

struct SubmodelEstimate {
  MatrixXd theta;
  VectorXd gamma;
  Index n_used = 0;
  int cluster_index = 0;
};

namespace estimation {

/// Total least squares slope for centered data: the Theta minimising
/// ||[dX; dY]||_F subject to Yc + dY = Theta (Xc + dX). With
/// [Xc; Yc]^T = U S V^T and V partitioned as [V11 V12; V21 V22] (V22 is
/// Ny x Ny), Theta = -V22^-T V12^T. Weights scale columns by sqrt(w).
MatrixXd tls_linear(const MatrixXd& Xc, const MatrixXd& Yc,
                    const std::optional<VectorXd>& weights = std::nullopt);

/// Per-cluster affine TLS fit. Clusters are 0..num_clusters-1. `adjacency_diag`
/// is required when weighting or thresholding is requested.
std::vector<SubmodelEstimate> fit_submodels(const Dataset& data, const Labels& labels, int num_clusters,
                                            const std::optional<VectorXd>& adjacency_diag,
                                            const FitOptions& options = {});

/// Reference fit with the true labels. When sigma_ratio = sigma_x / sigma_y is
/// known the inputs are rescaled so the errors-in-variables are isotropic;
/// sigma_ratio = 0 reduces to ordinary least squares.
std::vector<SubmodelEstimate> clairvoyant_fit(const Dataset& data, int num_submodels,
                                              std::optional<double> sigma_ratio = std::nullopt);

SwitchedAffineModel to_model(const std::vector<SubmodelEstimate>& estimates);

}  // namespace estimation
}  // namespace samid
