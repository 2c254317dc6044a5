#pragma once

// Switched affine models, input/label generation and the measurement model
//
//   x_n = d_n + e_n
//   y_n = Theta_{l(n)} d_n + Gamma_{l(n)} + w_n
//
// with e_n ~ N(0, sigma_x^2 I) and w_n ~ N(0, sigma_y^2 I).

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace samid {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Submodel index per observation, values in 0..K-1.
using Labels = std::vector<int>;

struct Submodel {
  MatrixXd theta;  // Ny x Nx
  VectorXd gamma;  // Ny
};

/// K affine maps y = Theta_i x + Gamma_i sharing input/output dimensions.
///
/// The constructor validates shapes. K = 1 is accepted (it is a plain affine
/// map and is handy for SNR bookkeeping); the identification pipeline itself
/// requires K >= 2.
class SwitchedAffineModel {
 public:
  explicit SwitchedAffineModel(std::vector<Submodel> submodels);

  int num_submodels() const { return static_cast<int>(submodels_.size()); }
  int input_dim() const { return input_dim_; }
  int output_dim() const { return output_dim_; }

  const Submodel& submodel(int i) const { return submodels_.at(static_cast<std::size_t>(i)); }
  const std::vector<Submodel>& submodels() const { return submodels_; }

  /// Noiseless output of submodel i at input d.
  VectorXd output(int i, const VectorXd& d) const;

  /// A(Theta) = [I ... I; Theta_1 ... Theta_K], (Nx+Ny) x (K*Nx).
  MatrixXd stacked_parameter_matrix() const;

 private:
  std::vector<Submodel> submodels_;
  int input_dim_ = 0;
  int output_dim_ = 0;
};

/// Column-stacked observations. Column n of every member is observation n.
struct Dataset {
  MatrixXd X;                     // Nx x N noisy inputs
  MatrixXd Y;                     // Ny x N noisy outputs
  std::optional<Labels> labels;   // generating submodel, when known
  std::optional<MatrixXd> D;      // noiseless inputs, when known
  std::uint64_t seed = 0;

  Index size() const { return X.cols(); }
  int input_dim() const { return static_cast<int>(X.rows()); }
  int output_dim() const { return static_cast<int>(Y.rows()); }

  /// Z = [X; Y].
  MatrixXd stacked() const;

  /// Throws InvalidInput when members disagree on N or labels are negative.
  void validate() const;
};

struct NoiseSpec {
  double sigma_x = 0.0;
  double sigma_y = 0.0;
};

/// Half-space { d : normal . d >= offset } (strict: > offset).
struct HalfSpace {
  VectorXd normal;
  double offset = 0.0;
  bool strict = false;

  bool contains(const VectorXd& d) const;
};

/// Intersection of half-spaces; an empty constraint list is the whole space.
struct Region {
  std::vector<HalfSpace> constraints;

  bool contains(const VectorXd& d) const;
};

/// regions[i] is the input region driving submodel i. The first region that
/// contains d_n decides its label.
struct PiecewiseSwitching {
  std::vector<Region> regions;
};

/// Labels drawn i.i.d. from a categorical distribution over submodels.
struct JumpSwitching {
  std::vector<double> probabilities;
};

struct ExplicitSwitching {
  Labels labels;
};

using SwitchingSpec = std::variant<PiecewiseSwitching, JumpSwitching, ExplicitSwitching>;

/// Two-region rule on the first input coordinate: label 0 iff d_1 >= 0.
PiecewiseSwitching sign_split(int input_dim);

/// Number of submodels a switching spec can emit (max label + 1 for
/// explicit labels).
int switching_label_count(const SwitchingSpec& spec);

struct IdentifiabilityReport {
  bool identifiable = false;
  int rank = 0;
  int required_rank = 0;
  VectorXd singular_values;
  std::string diagnostic;
};

/// Fixed inputs plus labels for an experiment.
struct Design {
  MatrixXd D;
  Labels labels;
};

namespace sim {

/// Nx x N matrix of i.i.d. standard normal entries.
MatrixXd generate_inputs(int input_dim, Index count, std::uint64_t seed);

/// Labels for the columns of D. Piecewise mode ignores the seed; jump mode
/// ignores D except for its column count; explicit mode checks the length.
Labels assign_labels(const SwitchingSpec& spec, const MatrixXd& D, std::uint64_t seed);

/// Draws inputs and labels so that submodel i receives exactly counts[i]
/// observations. Piecewise and jump candidates are drawn sequentially and a
/// candidate whose submodel quota is already full is discarded. Explicit
/// labels fix both N and the counts; `counts` may then be empty.
Design generate_design(const SwitchedAffineModel& model, const SwitchingSpec& spec,
                       const std::vector<Index>& counts, std::uint64_t seed);

Dataset simulate(const SwitchedAffineModel& model, const MatrixXd& D, const Labels& labels,
                 const NoiseSpec& noise, std::uint64_t seed);

/// Total signal energy of inputs and noiseless outputs, the SNR numerator.
double signal_energy(const SwitchedAffineModel& model, const MatrixXd& D, const Labels& labels);

/// 10 log10( signal_energy / (N (Nx sigma_x^2 + Ny sigma_y^2)) ).
double snr_db(const SwitchedAffineModel& model, const MatrixXd& D, const Labels& labels,
              const NoiseSpec& noise);

/// Inverse of snr_db for a fixed ratio sigma_x / sigma_y (0 means sigma_x = 0).
NoiseSpec noise_for_target_snr(const SwitchedAffineModel& model, const MatrixXd& D,
                               const Labels& labels, double target_db, double sigma_ratio);

/// Full column rank test of A(Theta). A singular value counts when it exceeds
/// max(rows, cols) * eps * largest singular value.
IdentifiabilityReport check_identifiability(const SwitchedAffineModel& model);

}  // namespace sim
}  // namespace samid
