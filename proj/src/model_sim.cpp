#include "samid/model_sim.hpp"

#include "samid/error.hpp"
#include "samid/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace samid {

SwitchedAffineModel::SwitchedAffineModel(std::vector<Submodel> submodels)
    : submodels_(std::move(submodels)) {
  if (submodels_.empty()) throw InvalidInput("model needs at least one submodel");
  input_dim_ = static_cast<int>(submodels_.front().theta.cols());
  output_dim_ = static_cast<int>(submodels_.front().theta.rows());
  if (input_dim_ < 1 || output_dim_ < 1) throw InvalidInput("model dimensions must be positive");
  for (std::size_t i = 0; i < submodels_.size(); ++i) {
    const auto& s = submodels_[i];
    if (s.theta.rows() != output_dim_ || s.theta.cols() != input_dim_ ||
        s.gamma.size() != output_dim_) {
      std::ostringstream msg;
      msg << "submodel " << i << " has shape " << s.theta.rows() << "x" << s.theta.cols()
          << " / " << s.gamma.size() << ", expected " << output_dim_ << "x" << input_dim_
          << " / " << output_dim_;
      throw InvalidInput(msg.str());
    }
    if (!s.theta.allFinite() || !s.gamma.allFinite()) {
      throw InvalidInput("submodel parameters must be finite");
    }
  }
}

VectorXd SwitchedAffineModel::output(int i, const VectorXd& d) const {
  const auto& s = submodel(i);
  return s.theta * d + s.gamma;
}

MatrixXd SwitchedAffineModel::stacked_parameter_matrix() const {
  const int k = num_submodels();
  MatrixXd a(input_dim_ + output_dim_, k * input_dim_);
  for (int i = 0; i < k; ++i) {
    a.block(0, i * input_dim_, input_dim_, input_dim_).setIdentity();
    a.block(input_dim_, i * input_dim_, output_dim_, input_dim_) = submodels_[i].theta;
  }
  return a;
}

MatrixXd Dataset::stacked() const {
  MatrixXd z(X.rows() + Y.rows(), X.cols());
  z.topRows(X.rows()) = X;
  z.bottomRows(Y.rows()) = Y;
  return z;
}

void Dataset::validate() const {
  if (X.rows() < 1 || Y.rows() < 1) throw InvalidInput("dataset dimensions must be positive");
  if (X.cols() != Y.cols()) throw InvalidInput("X and Y disagree on the number of observations");
  if (labels && static_cast<Index>(labels->size()) != X.cols()) {
    throw InvalidInput("label count does not match the number of observations");
  }
  if (labels && std::any_of(labels->begin(), labels->end(), [](int l) { return l < 0; })) {
    throw InvalidInput("labels must be non-negative");
  }
  if (D && (D->cols() != X.cols() || D->rows() != X.rows())) {
    throw InvalidInput("noiseless inputs do not match X");
  }
}

bool HalfSpace::contains(const VectorXd& d) const {
  if (normal.size() != d.size()) throw InvalidInput("half-space dimension does not match input");
  const double v = normal.dot(d);
  return strict ? v > offset : v >= offset;
}

bool Region::contains(const VectorXd& d) const {
  return std::all_of(constraints.begin(), constraints.end(),
                     [&](const HalfSpace& h) { return h.contains(d); });
}

PiecewiseSwitching sign_split(int input_dim) {
  VectorXd e1 = VectorXd::Zero(input_dim);
  e1(0) = 1.0;
  PiecewiseSwitching spec;
  spec.regions.push_back(Region{{HalfSpace{e1, 0.0, false}}});
  spec.regions.push_back(Region{{HalfSpace{-e1, 0.0, true}}});
  return spec;
}

int switching_label_count(const SwitchingSpec& spec) {
  struct Visitor {
    int operator()(const PiecewiseSwitching& s) const { return static_cast<int>(s.regions.size()); }
    int operator()(const JumpSwitching& s) const { return static_cast<int>(s.probabilities.size()); }
    int operator()(const ExplicitSwitching& s) const {
      return s.labels.empty() ? 0 : *std::max_element(s.labels.begin(), s.labels.end()) + 1;
    }
  };
  return std::visit(Visitor{}, spec);
}

namespace sim {
namespace {

void check_probabilities(const std::vector<double>& p) {
  if (p.empty()) throw InvalidInput("jump switching needs at least one probability");
  double total = 0.0;
  for (double v : p) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidInput("jump probabilities must be non-negative");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-12) throw InvalidInput("jump probabilities must sum to 1");
}

int piecewise_label(const PiecewiseSwitching& spec, const VectorXd& d) {
  for (std::size_t i = 0; i < spec.regions.size(); ++i) {
    if (spec.regions[i].contains(d)) return static_cast<int>(i);
  }
  std::ostringstream msg;
  msg << "input (" << d.transpose() << ") is matched by no piecewise region";
  throw InvalidInput(msg.str());
}

// Categorical draw restricted to entries with positive weight.
int draw_category(Rng& rng, const std::vector<double>& weights) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  const double u = rng.uniform() * total;
  double cumulative = 0.0;
  int last_positive = -1;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    cumulative += weights[i];
    last_positive = static_cast<int>(i);
    if (u < cumulative) return last_positive;
  }
  return last_positive;
}

void check_labels_in_range(const Labels& labels, int k) {
  for (int l : labels) {
    if (l < 0 || l >= k) throw InvalidInput("label out of range for the model");
  }
}

}  // namespace

MatrixXd generate_inputs(int input_dim, Index count, std::uint64_t seed) {
  if (count < 1) throw InvalidInput("generate_inputs needs at least one observation");
  if (input_dim < 1) throw InvalidInput("generate_inputs needs a positive dimension");
  Rng rng(seed);
  MatrixXd d(input_dim, count);
  for (Index n = 0; n < count; ++n) {
    for (int k = 0; k < input_dim; ++k) d(k, n) = rng.normal();
  }
  return d;
}

Labels assign_labels(const SwitchingSpec& spec, const MatrixXd& D, std::uint64_t seed) {
  Labels labels(static_cast<std::size_t>(D.cols()));
  if (const auto* pw = std::get_if<PiecewiseSwitching>(&spec)) {
    if (pw->regions.empty()) throw InvalidInput("piecewise switching needs at least one region");
    for (Index n = 0; n < D.cols(); ++n) labels[n] = piecewise_label(*pw, D.col(n));
  } else if (const auto* jump = std::get_if<JumpSwitching>(&spec)) {
    check_probabilities(jump->probabilities);
    Rng rng(seed);
    for (auto& l : labels) l = draw_category(rng, jump->probabilities);
  } else {
    const auto& given = std::get<ExplicitSwitching>(spec).labels;
    if (static_cast<Index>(given.size()) != D.cols()) {
      throw InvalidInput("explicit label count does not match the number of inputs");
    }
    if (std::any_of(given.begin(), given.end(), [](int l) { return l < 0; })) {
      throw InvalidInput("explicit labels must be non-negative");
    }
    labels = given;
  }
  return labels;
}

Design generate_design(const SwitchedAffineModel& model, const SwitchingSpec& spec,
                       const std::vector<Index>& counts, std::uint64_t seed) {
  const int k = model.num_submodels();
  const int nx = model.input_dim();

  if (const auto* ex = std::get_if<ExplicitSwitching>(&spec)) {
    Design design;
    design.labels = ex->labels;
    if (design.labels.empty()) throw InvalidInput("explicit switching has no labels");
    check_labels_in_range(design.labels, k);
    if (!counts.empty()) {
      if (static_cast<int>(counts.size()) != k) throw InvalidInput("counts must have one entry per submodel");
      for (int i = 0; i < k; ++i) {
        const auto c = std::count(design.labels.begin(), design.labels.end(), i);
        if (c != counts[i]) throw InvalidInput("explicit labels disagree with per-submodel counts");
      }
    }
    design.D = generate_inputs(nx, static_cast<Index>(design.labels.size()), derive_seed(seed, 1));
    return design;
  }

  if (static_cast<int>(counts.size()) != k) throw InvalidInput("counts must have one entry per submodel");
  if (std::any_of(counts.begin(), counts.end(), [](Index c) { return c < 0; })) {
    throw InvalidInput("per-submodel counts must be non-negative");
  }
  const Index total = std::accumulate(counts.begin(), counts.end(), Index{0});
  if (total < 1) throw InvalidInput("design needs at least one observation");
  if (switching_label_count(spec) != k) {
    throw InvalidInput("switching spec does not match the number of submodels");
  }

  std::vector<Index> remaining = counts;
  Design design;
  design.labels.reserve(static_cast<std::size_t>(total));

  if (const auto* pw = std::get_if<PiecewiseSwitching>(&spec)) {
    design.D.resize(nx, total);
    Rng rng(derive_seed(seed, 1));
    const Index max_candidates = 1000 * total + 100000;
    Index accepted = 0;
    VectorXd d(nx);
    for (Index tries = 0; accepted < total; ++tries) {
      if (tries >= max_candidates) {
        throw InvalidInput("could not fill per-submodel quotas; a piecewise region is too unlikely");
      }
      for (int j = 0; j < nx; ++j) d(j) = rng.normal();
      const int label = piecewise_label(*pw, d);
      if (remaining[label] == 0) continue;
      --remaining[label];
      design.D.col(accepted++) = d;
      design.labels.push_back(label);
    }
    return design;
  }

  const auto& probs = std::get<JumpSwitching>(spec).probabilities;
  check_probabilities(probs);
  for (int i = 0; i < k; ++i) {
    if (counts[i] > 0 && probs[i] <= 0.0) {
      throw InvalidInput("jump probability is zero for a submodel with a positive count");
    }
  }
  design.D = generate_inputs(nx, total, derive_seed(seed, 1));
  Rng rng(derive_seed(seed, 2));
  std::vector<double> weights(probs.size());
  for (Index n = 0; n < total; ++n) {
    for (int i = 0; i < k; ++i) weights[i] = remaining[i] > 0 ? probs[i] : 0.0;
    const int label = draw_category(rng, weights);
    --remaining[label];
    design.labels.push_back(label);
  }
  return design;
}

Dataset simulate(const SwitchedAffineModel& model, const MatrixXd& D, const Labels& labels,
                 const NoiseSpec& noise, std::uint64_t seed) {
  const int nx = model.input_dim();
  const int ny = model.output_dim();
  if (D.rows() != nx) throw InvalidInput("input matrix row count does not match the model");
  if (static_cast<Index>(labels.size()) != D.cols()) {
    throw InvalidInput("label count does not match the number of inputs");
  }
  check_labels_in_range(labels, model.num_submodels());
  if (!(noise.sigma_x >= 0.0) || !(noise.sigma_y >= 0.0)) {
    throw InvalidInput("noise standard deviations must be non-negative");
  }

  Dataset data;
  data.X.resize(nx, D.cols());
  data.Y.resize(ny, D.cols());
  Rng rng(seed);
  for (Index n = 0; n < D.cols(); ++n) {
    const auto& s = model.submodel(labels[n]);
    data.Y.col(n) = s.theta * D.col(n) + s.gamma;
    // Draw order per observation: Nx input-noise values, then Ny output-noise values.
    for (int j = 0; j < nx; ++j) data.X(j, n) = D(j, n) + noise.sigma_x * rng.normal();
    for (int j = 0; j < ny; ++j) data.Y(j, n) += noise.sigma_y * rng.normal();
  }
  data.labels = labels;
  data.D = D;
  data.seed = seed;
  return data;
}

double signal_energy(const SwitchedAffineModel& model, const MatrixXd& D, const Labels& labels) {
  if (D.rows() != model.input_dim()) throw InvalidInput("input matrix row count does not match the model");
  if (static_cast<Index>(labels.size()) != D.cols()) {
    throw InvalidInput("label count does not match the number of inputs");
  }
  check_labels_in_range(labels, model.num_submodels());
  double energy = 0.0;
  for (Index n = 0; n < D.cols(); ++n) {
    energy += model.output(labels[n], D.col(n)).squaredNorm() + D.col(n).squaredNorm();
  }
  return energy;
}

double snr_db(const SwitchedAffineModel& model, const MatrixXd& D, const Labels& labels,
              const NoiseSpec& noise) {
  const double noise_energy =
      static_cast<double>(D.cols()) * (model.input_dim() * noise.sigma_x * noise.sigma_x +
                                       model.output_dim() * noise.sigma_y * noise.sigma_y);
  if (!(noise_energy > 0.0)) throw InvalidInput("SNR is undefined for zero noise");
  return 10.0 * std::log10(signal_energy(model, D, labels) / noise_energy);
}

NoiseSpec noise_for_target_snr(const SwitchedAffineModel& model, const MatrixXd& D,
                               const Labels& labels, double target_db, double sigma_ratio) {
  if (!std::isfinite(target_db)) throw InvalidInput("target SNR must be finite");
  if (!(sigma_ratio >= 0.0) || !std::isfinite(sigma_ratio)) {
    throw InvalidInput("sigma ratio must be finite and non-negative");
  }
  const double energy = signal_energy(model, D, labels);
  if (!(energy > 0.0)) throw InvalidInput("signal energy is zero");
  const double per_sample =
      model.input_dim() * sigma_ratio * sigma_ratio + static_cast<double>(model.output_dim());
  const double sigma_y = std::sqrt(energy / (static_cast<double>(D.cols()) * per_sample *
                                             std::pow(10.0, target_db / 10.0)));
  return NoiseSpec{sigma_ratio * sigma_y, sigma_y};
}

IdentifiabilityReport check_identifiability(const SwitchedAffineModel& model) {
  const MatrixXd a = model.stacked_parameter_matrix();
  Eigen::JacobiSVD<MatrixXd> svd(a);
  IdentifiabilityReport report;
  report.singular_values = svd.singularValues();
  report.required_rank = static_cast<int>(a.cols());
  const double largest = report.singular_values.size() ? report.singular_values(0) : 0.0;
  const double threshold = static_cast<double>(std::max(a.rows(), a.cols())) *
                           std::numeric_limits<double>::epsilon() * largest;
  report.rank = static_cast<int>((report.singular_values.array() > threshold).count());
  report.identifiable = report.rank == report.required_rank;
  std::ostringstream msg;
  msg << "A(Theta) is " << a.rows() << "x" << a.cols() << " with numerical rank " << report.rank;
  if (!report.identifiable) {
    if (model.output_dim() < (model.num_submodels() - 1) * model.input_dim()) {
      msg << "; full column rank needs Ny >= (K-1)*Nx";
    } else {
      msg << "; submodel linear parts are not independent";
    }
  }
  report.diagnostic = msg.str();
  return report;
}

}  // namespace sim
}  // namespace samid
