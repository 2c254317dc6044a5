#include "samid/baselines.hpp"
#include "samid/error.hpp"
#include "samid/harness.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace samid;
using samid::testing::siso;

namespace {

HybridPolynomial siso_polynomial(double t1, double g1, double t2, double g2) {
  HybridPolynomial p;
  p.degree = 2;
  p.input_dim = 1;
  p.basis = intersection::monomial_basis(2, 2);
  VectorXd c(6);
  // (y - t1 x - g1)(y - t2 x - g2) on [y^2, yx, x^2, y, x, 1]
  c << 1.0, -(t1 + t2), t1 * t2, -(g1 + g2), g1 * t2 + g2 * t1, g1 * g2;
  p.channels.push_back(c);
  return p;
}

// Two parallel lines over separated input intervals.
Dataset parallel_lines() {
  Dataset d;
  const Index per = 15;
  d.X.resize(1, 2 * per);
  d.Y.resize(1, 2 * per);
  d.labels = Labels(static_cast<std::size_t>(2 * per));
  for (Index i = 0; i < per; ++i) {
    const double t = static_cast<double>(i) / per;
    d.X(0, 2 * i) = t;
    d.Y(0, 2 * i) = t;
    (*d.labels)[2 * i] = 0;
    d.X(0, 2 * i + 1) = 3.0 + t;
    d.Y(0, 2 * i + 1) = 3.0 + t + 10.0;
    (*d.labels)[2 * i + 1] = 1;
  }
  return d;
}

}  // namespace

TEST(LocalFeatures, ExactInsideARegion) {
  const auto data = parallel_lines();
  const auto f = baselines::local_affine_features(data, 7);
  ASSERT_EQ(f.rows(), data.size());
  ASSERT_EQ(f.cols(), 2);
  for (Index i = 0; i < data.size(); ++i) {
    const double offset = (*data.labels)[i] == 0 ? 0.0 : 10.0;
    EXPECT_NEAR(f(i, 0), 1.0, 1e-10);
    EXPECT_NEAR(f(i, 1), offset, 1e-9);
  }
}

TEST(LocalFeatures, MimoLayoutIsRowMajorThenGamma) {
  const auto model = samid::testing::example2();
  Dataset data;
  data.X = sim::generate_inputs(2, 40, 3);
  data.Y = (model.submodel(0).theta * data.X).colwise() + model.submodel(0).gamma;
  const auto f = baselines::local_affine_features(data, 10);
  ASSERT_EQ(f.cols(), 6);
  const VectorXd expected = (VectorXd(6) << 0.7, 0.4, 0.2, 0.3, -0.4, 0.17).finished();
  for (Index i = 0; i < f.rows(); ++i) EXPECT_LE((f.row(i).transpose() - expected).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(LocalFeatures, Errors) {
  const auto data = parallel_lines();
  EXPECT_THROW(baselines::local_affine_features(data, 1), InvalidInput);
  EXPECT_THROW(baselines::local_affine_features(data, static_cast<int>(data.size())), InvalidInput);
  Dataset repeated = data;
  repeated.X.setConstant(0.5);
  EXPECT_THROW(baselines::local_affine_features(repeated, 3), NumericalFailure);
  EXPECT_EQ(baselines::default_neighborhood(1), 7);
  EXPECT_EQ(baselines::default_neighborhood(2), 10);
}

TEST(FeatureKmeans, SeparatesParallelLines) {
  const auto data = parallel_lines();
  const auto labels = baselines::feature_cluster_labels(data, 2, 7, 1);
  EXPECT_EQ(metrics::misclassification_ratio(labels, *data.labels, 2), 0.0);

  const auto perm = samid::testing::shuffled_indices(data.size(), 9);
  const auto shuffled = samid::testing::permute_columns(data, perm);
  const auto relabeled = baselines::feature_cluster_labels(shuffled, 2, 7, 1);
  EXPECT_EQ(metrics::misclassification_ratio(relabeled, *shuffled.labels, 2), 0.0);
}

TEST(FeatureKmeans, MixesRegionsNearTheSwitchingBoundary) {
  const auto data = samid::testing::noiseless_example1();
  const auto labels = baselines::feature_cluster_labels(data, 2, 7, 4);
  EXPECT_GT(metrics::misclassification_ratio(labels, *data.labels, 2), 0.0);
}

TEST(FeatureKmeans, JumpSwitchingDefeatsLocalFits) {
  ExperimentConfig cfg(samid::testing::example2());
  cfg.switching = JumpSwitching{{0.5, 0.5}};
  cfg.n_per_submodel = {400, 400};
  cfg.snr_grid = {50.0};
  cfg.runs = 50;
  cfg.methods = {Method::feature_kmeans};
  cfg.master_seed = 77;
  const auto rows = harness::run_monte_carlo(cfg);
  const auto* row = harness::find_row(rows, 50.0, Method::feature_kmeans);
  ASSERT_NE(row, nullptr);
  EXPECT_GE(row->misclassification, 0.35);
  EXPECT_LE(row->misclassification, 0.65);
}

TEST(HdcAggregates, Example1) {
  const auto agg = baselines::hdc_aggregates(intersection::expand_model(samid::testing::example1()));
  EXPECT_NEAR(agg.theta_tilde(0), 1.7 * 2.8, 1e-14);
  EXPECT_NEAR(agg.theta_tilde(1), 4.5, 1e-14);
  EXPECT_NEAR(agg.theta_tilde(2), 0.9 * 2.8 + 1.2 * 1.7, 1e-14);
  EXPECT_NEAR(agg.theta_tilde(3), 2.1, 1e-14);
  EXPECT_NEAR(agg.gamma_tilde, 1.08, 1e-14);
}

TEST(GpcaLite, NoiselessExample1IsExact) {
  const auto data = samid::testing::noiseless_example1();
  const auto est = baselines::gpca_lite_fit(data);
  ASSERT_EQ(est.size(), 2u);
  EXPECT_NEAR(est[0].theta(0, 0), 1.7, 1e-8);
  EXPECT_NEAR(est[0].gamma(0), 0.9, 1e-8);
  EXPECT_NEAR(est[1].theta(0, 0), 2.8, 1e-8);
  EXPECT_NEAR(est[1].gamma(0), 1.2, 1e-8);
  EXPECT_EQ(est[0].n_used, data.size());
  EXPECT_EQ(baselines::assign_by_residual(data, est), *data.labels);
}

TEST(GpcaLite, InvertsTheProductExpansion) {
  Rng rng(61);
  for (int trial = 0; trial < 100; ++trial) {
    double t1 = 3.0 * rng.normal();
    double t2 = 3.0 * rng.normal();
    if (std::abs(t1 - t2) < 0.05) t2 = t1 + 0.5;
    const double g1 = 2.0 * rng.normal();
    const double g2 = 2.0 * rng.normal();
    const auto est = baselines::gpca_lite_from_polynomial(siso_polynomial(t1, g1, t2, g2));
    const bool swapped = t1 > t2;
    const double lo_t = swapped ? t2 : t1, hi_t = swapped ? t1 : t2;
    const double lo_g = swapped ? g2 : g1, hi_g = swapped ? g1 : g2;
    const double tol = 1e-9 * (1.0 + std::abs(t1) + std::abs(t2) + std::abs(g1) + std::abs(g2)) /
                       std::min(1.0, std::abs(t1 - t2));
    EXPECT_NEAR(est[0].theta(0, 0), lo_t, tol) << "trial " << trial;
    EXPECT_NEAR(est[1].theta(0, 0), hi_t, tol) << "trial " << trial;
    EXPECT_NEAR(est[0].gamma(0), lo_g, tol) << "trial " << trial;
    EXPECT_NEAR(est[1].gamma(0), hi_g, tol) << "trial " << trial;
  }
}

TEST(GpcaLite, Errors) {
  auto circle = siso_polynomial(0, 0, 0, 0);
  circle.channels[0] << 1, 0, 1, 0, 0, -1;  // y^2 + x^2 - 1
  EXPECT_THROW(baselines::gpca_lite_from_polynomial(circle), NumericalFailure);
  EXPECT_THROW(baselines::gpca_lite_from_polynomial(siso_polynomial(1.0, 0.0, 1.0, 2.0)), NumericalFailure);
  EXPECT_THROW(baselines::gpca_lite_fit(samid::testing::noiseless_example2(20)), InvalidInput);
  EXPECT_THROW(baselines::hdc_aggregates(intersection::expand_model(samid::testing::example2())), InvalidInput);
}

TEST(AssignByResidual, TiesGoToLowerIndex) {
  const auto data = samid::testing::noiseless_example1(10);
  const SubmodelEstimate e{MatrixXd::Constant(1, 1, 0.3), VectorXd::Constant(1, 0.1)};
  EXPECT_EQ(baselines::assign_by_residual(data, {e, e}), Labels(20, 0));
  EXPECT_THROW(baselines::assign_by_residual(data, {}), InvalidInput);
}

TEST(HdcBias, OutputNoiseTermHasMeanMinusVariance) {
  Rng rng(5);
  for (double sigma : {0.05, 0.3, 1.0}) {
    for (double y : {-2.0, 0.0, 1.5}) {
      const int n = 10000;
      double sum = 0.0, sum_sq = 0.0;
      for (int i = 0; i < n; ++i) {
        const double v = baselines::hdc_output_noise(y, sigma * rng.normal());
        sum += v;
        sum_sq += v * v;
      }
      const double mean = sum / n;
      const double se = std::sqrt((sum_sq / n - mean * mean) / n);
      EXPECT_LE(std::abs(mean + sigma * sigma), 3.0 * se) << "sigma " << sigma << " y " << y;
    }
  }
}
