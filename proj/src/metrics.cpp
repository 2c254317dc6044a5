#include "samid/error.hpp"
#include "samid/harness.hpp"

#include <algorithm>
#include <numeric>

namespace samid::metrics {

ClusterMatch match_clusters(const Labels& predicted, const Labels& truth, int num_clusters) {
  if (num_clusters < 1 || num_clusters > 8) throw InvalidInput("cluster matching supports 1 to 8 clusters");
  if (predicted.size() != truth.size()) throw InvalidInput("label vectors differ in length");
  const auto k = static_cast<std::size_t>(num_clusters);
  // confusion[p][t] = observations predicted p with truth t
  std::vector<Index> confusion(k * k, 0);
  for (std::size_t n = 0; n < truth.size(); ++n) {
    const int p = predicted[n];
    const int t = truth[n];
    if (p < 0 || p >= num_clusters || t < 0 || t >= num_clusters) throw InvalidInput("label out of range");
    ++confusion[static_cast<std::size_t>(p) * k + static_cast<std::size_t>(t)];
  }
  std::vector<int> perm(k);
  std::iota(perm.begin(), perm.end(), 0);
  ClusterMatch best{perm, static_cast<Index>(truth.size()) + 1};
  do {
    Index agree = 0;
    for (std::size_t p = 0; p < k; ++p) agree += confusion[p * k + static_cast<std::size_t>(perm[p])];
    const Index miss = static_cast<Index>(truth.size()) - agree;
    if (miss < best.mismatches) best = ClusterMatch{perm, miss};
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

double misclassification_ratio(const Labels& predicted, const Labels& truth, int num_clusters) {
  if (truth.empty()) throw InvalidInput("cannot score an empty labeling");
  const auto match = match_clusters(predicted, truth, num_clusters);
  return static_cast<double>(match.mismatches) / static_cast<double>(truth.size());
}

std::vector<SubmodelError> parameter_mse(const std::vector<SubmodelEstimate>& estimates,
                                         const SwitchedAffineModel& model, const std::vector<int>& permutation) {
  const int k = model.num_submodels();
  if (static_cast<int>(estimates.size()) != k || static_cast<int>(permutation.size()) != k) {
    throw InvalidInput("estimate and permutation counts must equal the number of submodels");
  }
  std::vector<int> seen(static_cast<std::size_t>(k), 0);
  std::vector<SubmodelError> out(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    const int t = permutation[i];
    if (t < 0 || t >= k || seen[t]++) throw InvalidInput("permutation is not a bijection");
    const auto& truth = model.submodel(t);
    const auto& est = estimates[i];
    if (est.theta.rows() != truth.theta.rows() || est.theta.cols() != truth.theta.cols() ||
        est.gamma.size() != truth.gamma.size()) {
      throw InvalidInput("estimate shape does not match the model");
    }
    out[t].mse_theta = (est.theta - truth.theta).squaredNorm() / static_cast<double>(truth.theta.size());
    out[t].mse_gamma = (est.gamma - truth.gamma).squaredNorm() / static_cast<double>(truth.gamma.size());
  }
  return out;
}

std::vector<int> slope_order_permutation(const SwitchedAffineModel& model) {
  if (model.input_dim() != 1 || model.output_dim() != 1) {
    throw InvalidInput("slope ordering needs a single-input single-output model");
  }
  std::vector<int> order(static_cast<std::size_t>(model.num_submodels()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return model.submodel(a).theta(0, 0) < model.submodel(b).theta(0, 0);
  });
  return order;
}

}  // namespace samid::metrics
