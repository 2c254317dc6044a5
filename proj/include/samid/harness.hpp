#pragma once

// Scoring metrics, single-dataset identification and the Monte Carlo SNR sweep.

#include "samid/baselines.hpp"
#include "samid/estimation.hpp"
#include "samid/model_sim.hpp"
#include "samid/scs.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace samid {

enum class Method { scs, cml, feature_kmeans, gpca_lite };

/// "scs", "cml", "feature-kmeans", "gpca-lite".
std::string_view method_name(Method method);
Method parse_method(std::string_view name);

WeightMode parse_weight_mode(std::string_view name);
std::string_view weight_mode_name(WeightMode mode);

struct ClusterMatch {
  std::vector<int> permutation;  // predicted cluster -> true submodel
  Index mismatches = 0;
};

struct SubmodelError {
  double mse_theta = 0.0;
  double mse_gamma = 0.0;
};

namespace metrics {

/// Brute force over all K! relabelings (K <= 8). Ties keep the permutation
/// that comes first lexicographically, so an already-aligned labeling maps to
/// the identity.
ClusterMatch match_clusters(const Labels& predicted, const Labels& truth, int num_clusters);

double misclassification_ratio(const Labels& predicted, const Labels& truth, int num_clusters);

/// Entry-averaged squared errors per true submodel. Estimate i is compared
/// with true submodel permutation[i]; the result is indexed by true submodel.
std::vector<SubmodelError> parameter_mse(const std::vector<SubmodelEstimate>& estimates,
                                         const SwitchedAffineModel& model, const std::vector<int>& permutation);

/// Estimate i -> true submodel with the i-th smallest slope (SISO).
std::vector<int> slope_order_permutation(const SwitchedAffineModel& model);

}  // namespace metrics

struct IdentifyOptions {
  Method method = Method::scs;
  int num_submodels = 2;
  std::uint64_t seed = 0;
  int restarts = 10;
  std::optional<int> neighborhood;  // feature-kmeans; default by input dimension
  WeightMode weight_mode = WeightMode::none;
  double diag_threshold = 0.0;
  std::optional<double> sigma_ratio;  // cml only
};

struct Identification {
  std::vector<SubmodelEstimate> estimates;
  Labels labels;
  /// Pipeline diagnostics (scs only).
  std::optional<ScsDiagnostics> diagnostics;
};

/// Runs one method on one dataset. cml needs data.labels.
Identification identify(const Dataset& data, const IdentifyOptions& options);

struct ExperimentConfig {
  explicit ExperimentConfig(SwitchedAffineModel m) : model(std::move(m)) {}

  SwitchedAffineModel model;
  /// Unset means the sign split on the first input coordinate.
  std::optional<SwitchingSpec> switching;
  std::vector<Index> n_per_submodel;
  std::vector<double> snr_grid;
  double sigma_ratio = 1.0;
  int runs = 200;
  std::vector<Method> methods;
  std::uint64_t master_seed = 0;
  std::optional<int> neighborhood;
  int restarts = 10;
  double diag_threshold = 0.0;
  WeightMode weight_mode = WeightMode::none;

  /// Throws InvalidInput on an inconsistent configuration.
  void validate() const;
};

struct ResultRow {
  double snr_db = 0.0;
  Method method = Method::scs;
  int submodel = 0;
  double mse_theta = 0.0;
  double mse_gamma = 0.0;
  double misclassification = 0.0;
  int failures = 0;
  int runs_used = 0;
};

struct RunOptions {
  /// 0 picks SAMID_THREADS when set, else the hardware concurrency.
  unsigned threads = 0;
  /// Called after each finished run with (done, total) over the whole sweep.
  /// Calls are serialized but may come from worker threads.
  std::function<void(std::size_t, std::size_t)> progress;
};

namespace harness {

/// Noise seed of run r at grid point s. Method seeds are derived from it.
std::uint64_t run_seed(std::uint64_t master_seed, std::size_t snr_index, std::size_t run);

unsigned resolve_threads(unsigned requested);

/// Inputs and labels are drawn once from master_seed and held fixed over all
/// runs and grid points. Rows are ordered by (snr, method in config order,
/// submodel). Failed runs are left out of that method's means and counted.
std::vector<ResultRow> run_monte_carlo(const ExperimentConfig& config, const RunOptions& options = {});

/// Mean over submodels of the error averaged over all Theta and Gamma entries,
/// for one (snr, method) group. NaN when the group is missing or every run failed.
double overall_mse(const std::vector<ResultRow>& rows, const SwitchedAffineModel& model, double snr_db,
                   Method method);

const ResultRow* find_row(const std::vector<ResultRow>& rows, double snr_db, Method method, int submodel = 0);

/// `model` is either an inline model object or a path resolved against base_dir.
ExperimentConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows);
std::string results_csv(const std::vector<ResultRow>& rows);

}  // namespace harness
}  // namespace samid
