#include "samid/error.hpp"
#include "samid/harness.hpp"
#include "samid/scs.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace samid;

namespace {

MatrixXd random_matrix(Index rows, Index cols, std::uint64_t seed) {
  Rng rng(seed);
  MatrixXd m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

Dataset noisy_example1(double snr, std::uint64_t seed) {
  const auto model = samid::testing::example1();
  const auto design = sim::generate_design(model, sign_split(1), {100, 100}, seed);
  const auto noise = sim::noise_for_target_snr(model, design.D, design.labels, snr, 1.0);
  return sim::simulate(model, design.D, design.labels, noise, seed + 1);
}

VectorXd oracle_point(const SwitchedAffineModel& model) {
  const auto p = intersection::intersection_oracle(model);
  VectorXd z0(p.x0.size() + p.y0.size());
  z0 << p.x0, p.y0;
  return z0;
}

}  // namespace

TEST(RowSpace, OrthonormalAndSpanning) {
  const MatrixXd Z = random_matrix(3, 12, 5);
  const VectorXd z0 = random_matrix(3, 1, 6);
  const auto space = scs::row_space(Z, z0, 2);
  ASSERT_EQ(space.V.rows(), 12);
  ASSERT_EQ(space.V.cols(), 2);
  EXPECT_LE((space.V.transpose() * space.V - MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_GE(space.singular_values(0), space.singular_values(1));

  // Residual energy is the part of Zc outside span(V).
  const MatrixXd Zc = Z.colwise() - z0;
  const MatrixXd outside = Zc - Zc * space.V * space.V.transpose();
  EXPECT_NEAR(space.residual_energy, outside.squaredNorm(), 1e-10 * Zc.squaredNorm());

  const auto full = scs::row_space(Z, z0, 3);
  EXPECT_NEAR(full.residual_energy, 0.0, 1e-20 + 1e-12 * Zc.squaredNorm());
}

TEST(RowSpace, Errors) {
  const MatrixXd Z = random_matrix(2, 5, 1);
  EXPECT_THROW(scs::row_space(Z, VectorXd::Zero(3), 1), InvalidInput);
  EXPECT_THROW(scs::row_space(Z, VectorXd::Zero(2), 0), InvalidInput);
  EXPECT_THROW(scs::row_space(Z, VectorXd::Zero(2), 3), InvalidInput);
  // Every observation on one line through z0: the second direction is empty.
  MatrixXd line(2, 5);
  line << 1, 2, 3, 4, 5, 2, 4, 6, 8, 10;
  EXPECT_THROW(scs::row_space(line, VectorXd::Zero(2), 2), NumericalFailure);
}

TEST(Adjacency, MatchesProjectionOracle) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const MatrixXd Z = random_matrix(3, 4 + seed, seed + 10);
    const VectorXd z0 = random_matrix(3, 1, seed + 20);
    const MatrixXd Zc = Z.colwise() - z0;
    const MatrixXd projection = Zc.transpose() * (Zc * Zc.transpose()).inverse() * Zc;
    const auto adj = scs::adjacency(scs::row_space(Z, z0, 3));
    EXPECT_LE((adj.M - projection.cwiseAbs()).cwiseAbs().maxCoeff(), 1e-10) << "seed " << seed;
    EXPECT_EQ(adj.M, adj.M.transpose());
    EXPECT_GE(adj.M.minCoeff(), 0.0);
    EXPECT_LE((adj.W - adj.M.rowwise().sum()).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(Adjacency, SingleBlock) {
  RowSpace space;
  space.V.resize(2, 1);
  space.V << 1.0 / std::sqrt(3.0), std::sqrt(2.0 / 3.0);
  const auto adj = scs::adjacency(space);
  MatrixXd expected(2, 2);
  expected << 1.0 / 3.0, std::sqrt(2.0) / 3.0, std::sqrt(2.0) / 3.0, 2.0 / 3.0;
  EXPECT_LE((adj.M - expected).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_NEAR(adj.M(0, 1), 0.4714, 5e-5);
  // Rank one with positive entries: the normalized spectrum is {1, 0}.
  const auto emb = scs::spectral_embed(adj, 1);
  EXPECT_NEAR(emb.eigenvalues(0), 1.0, 1e-12);
  EXPECT_NEAR(emb.next_eigenvalue, 0.0, 1e-12);
}

TEST(Adjacency, ScalarFourPointInstance) {
  // Inputs {1, 2} on y = 0.5 d, {-1, -3} on y = -2 d, intersection at the origin.
  MatrixXd z(2, 4);
  z << 1, 2, -1, -3, 0.5, 1.0, 2.0, 6.0;
  const auto adj = scs::adjacency(scs::row_space(z, VectorXd::Zero(2), 2));
  MatrixXd expected = MatrixXd::Zero(4, 4);
  expected.topLeftCorner(2, 2) << 0.2, 0.4, 0.4, 0.8;
  expected.bottomRightCorner(2, 2) << 0.1, 0.3, 0.3, 0.9;
  EXPECT_LE((adj.M - expected).cwiseAbs().maxCoeff(), 1e-10);

  const std::vector<Index> perm{2, 0, 3, 1};
  MatrixXd zp(2, 4);
  for (Index k = 0; k < 4; ++k) zp.col(k) = z.col(perm[k]);
  const auto permuted = scs::adjacency(scs::row_space(zp, VectorXd::Zero(2), 2));
  for (Index i = 0; i < 4; ++i) {
    for (Index j = 0; j < 4; ++j) {
      if ((perm[i] < 2) != (perm[j] < 2)) EXPECT_LE(permuted.M(i, j), 1e-10);
    }
  }
}

TEST(Adjacency, NoiselessBlocksAreDecoupled) {
  const auto data = samid::testing::noiseless_example1(40);
  const auto adj = scs::adjacency(scs::row_space(data.stacked(), oracle_point(samid::testing::example1()), 2));
  const auto& labels = *data.labels;
  double cross = 0.0;
  for (Index i = 0; i < data.size(); ++i) {
    for (Index j = 0; j < data.size(); ++j) {
      if (labels[i] != labels[j]) cross = std::max(cross, adj.M(i, j));
    }
  }
  EXPECT_LE(cross, 1e-10);
}

TEST(Adjacency, TopNormalizedEigenvalueIsOne) {
  const auto data = noisy_example1(30.0, 3);
  const auto adj = scs::adjacency(scs::row_space(data.stacked(), oracle_point(samid::testing::example1()), 2));
  const auto emb = scs::spectral_embed(adj, 2);
  EXPECT_NEAR(emb.eigenvalues(0), 1.0, 1e-10);
  EXPECT_LE(emb.eigenvalues(1), 1.0 + 1e-10);
  EXPECT_THROW(scs::spectral_embed(adj, 0), InvalidInput);
  EXPECT_THROW(scs::spectral_embed(adj, static_cast<int>(data.size())), InvalidInput);
}

TEST(Adjacency, PermutationEquivariance) {
  const auto data = noisy_example1(35.0, 8);
  const auto z0 = oracle_point(samid::testing::example1());
  const auto perm = samid::testing::shuffled_indices(data.size(), 4);
  const auto shuffled = samid::testing::permute_columns(data, perm);
  const auto a = scs::adjacency(scs::row_space(data.stacked(), z0, 2));
  const auto b = scs::adjacency(scs::row_space(shuffled.stacked(), z0, 2));
  double worst = 0.0;
  for (Index i = 0; i < data.size(); ++i) {
    for (Index j = 0; j < data.size(); ++j) worst = std::max(worst, std::abs(b.M(i, j) - a.M(perm[i], perm[j])));
  }
  EXPECT_LE(worst, 1e-10);
}

TEST(Adjacency, ScaleInvariance) {
  const auto data = noisy_example1(35.0, 9);
  const auto z0 = oracle_point(samid::testing::example1());
  const auto a = scs::adjacency(scs::row_space(data.stacked(), z0, 2));
  const auto b = scs::adjacency(scs::row_space(data.stacked() * 6.5, z0 * 6.5, 2));
  EXPECT_LE((a.M - b.M).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Adjacency, BasisRotationInvariance) {
  const auto data = noisy_example1(35.0, 10);
  auto space = scs::row_space(data.stacked(), oracle_point(samid::testing::example1()), 2);
  const auto a = scs::adjacency(space);
  const double angle = 0.83;
  MatrixXd q(2, 2);
  q << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  space.V = space.V * q;
  const auto b = scs::adjacency(space);
  EXPECT_LE((a.M - b.M).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(KMeans, SeparatedGroups) {
  MatrixXd pts(6, 1);
  pts << 10.0, 0.0, 10.1, 0.1, 10.2, 0.2;
  const auto res = scs::kmeans_rows(pts, 2, {}, 42);
  EXPECT_EQ(res.labels[0], res.labels[2]);
  EXPECT_EQ(res.labels[2], res.labels[4]);
  EXPECT_EQ(res.labels[1], res.labels[3]);
  EXPECT_NE(res.labels[0], res.labels[1]);
  EXPECT_NEAR(res.inertia, 0.04, 1e-12);
  EXPECT_NEAR(res.centroids(res.labels[1], 0), 0.1, 1e-12);
  EXPECT_NEAR(res.centroids(res.labels[0], 0), 10.1, 1e-12);
  EXPECT_EQ(res.restart_scores.size(), 10u);

  const auto again = scs::kmeans_rows(pts, 2, {}, 42);
  EXPECT_EQ(again.labels, res.labels);
  EXPECT_EQ(again.restart_scores, res.restart_scores);
}

TEST(KMeans, BestRestartWins) {
  const MatrixXd pts = random_matrix(60, 2, 77);
  const auto res = scs::kmeans_rows(pts, 4, {}, 3);
  double best = std::numeric_limits<double>::infinity();
  for (double s : res.restart_scores) best = std::min(best, s);
  EXPECT_EQ(res.inertia, best);
  EXPECT_EQ(res.restart_scores[static_cast<std::size_t>(res.best_restart)], best);
  // Inertia agrees with the reported labels and centroids.
  double inertia = 0.0;
  for (Index i = 0; i < pts.rows(); ++i) inertia += (pts.row(i) - res.centroids.row(res.labels[i])).squaredNorm();
  EXPECT_NEAR(inertia, res.inertia, 1e-10);
}

TEST(KMeans, Errors) {
  const MatrixXd same = MatrixXd::Ones(5, 2);
  EXPECT_THROW(scs::kmeans_rows(same, 2, {}, 1), NumericalFailure);
  EXPECT_THROW(scs::kmeans_rows(same, 6, {}, 1), InvalidInput);
  EXPECT_THROW(scs::kmeans_rows(same, 2, {.restarts = 0}, 1), InvalidInput);
  MatrixXd bad = random_matrix(5, 2, 1);
  bad(2, 1) = std::nan("");
  EXPECT_THROW(scs::kmeans_rows(bad, 2, {}, 1), NumericalFailure);
}

TEST(ScsLabel, NoiselessExample1) {
  const auto data = samid::testing::noiseless_example1();
  const auto res = scs::scs_label(data, 2, 5);
  EXPECT_EQ(metrics::misclassification_ratio(res.labels, *data.labels, 2), 0.0);
  const auto& d = res.diagnostics;
  ASSERT_EQ(d.eigenvalues.size(), 3);
  // Two decoupled rank-one blocks: spectrum {1, 1, 0, ...}.
  EXPECT_NEAR(d.eigenvalues(0), 1.0, 1e-8);
  EXPECT_NEAR(d.eigenvalues(1), 1.0, 1e-8);
  EXPECT_NEAR(d.eigenvalues(2), 0.0, 1e-8);
  EXPECT_NEAR(d.eigengap, 1.0, 1e-8);
  EXPECT_NEAR(d.intersection.x0(0), -3.0 / 11.0, 1e-8);
  EXPECT_EQ(res.adjacency_diagonal.size(), data.size());
  EXPECT_EQ(d.restart_scores.size(), 10u);
}

TEST(ScsLabel, NoiselessExample2) {
  const auto data = samid::testing::noiseless_example2();
  const auto res = scs::scs_label(data, 2, 9);
  EXPECT_EQ(metrics::misclassification_ratio(res.labels, *data.labels, 2), 0.0);
  EXPECT_EQ(res.diagnostics.retained_singular_values.size(), 4);
}

TEST(ScsLabel, InvariantToObservationOrder) {
  const auto data = noisy_example1(45.0, 21);
  const auto base = scs::scs_label(data, 2, 3);
  const auto perm = samid::testing::shuffled_indices(data.size(), 13);
  const auto shuffled = samid::testing::permute_columns(data, perm);
  const auto res = scs::scs_label(shuffled, 2, 3);
  Labels mapped(res.labels.size());
  for (std::size_t k = 0; k < perm.size(); ++k) mapped[k] = base.labels[perm[k]];
  EXPECT_EQ(metrics::match_clusters(res.labels, mapped, 2).mismatches, 0);
}

TEST(ScsLabel, InvariantToDataScale) {
  const auto data = noisy_example1(45.0, 22);
  Dataset scaled = data;
  scaled.X *= 0.25;
  scaled.Y *= 0.25;
  const auto a = scs::scs_label(data, 2, 3);
  const auto b = scs::scs_label(scaled, 2, 3);
  EXPECT_EQ(metrics::match_clusters(a.labels, b.labels, 2).mismatches, 0);
}

TEST(ScsLabel, Errors) {
  const auto data = samid::testing::noiseless_example1(10);
  EXPECT_THROW(scs::scs_label(data, 1, 0), InvalidInput);
  EXPECT_THROW(scs::scs_label(data, 3, 0), InvalidInput);
}

TEST(ScsDiagnosticsJson, Fields) {
  const auto res = scs::scs_label(samid::testing::noiseless_example1(20), 2, 1);
  const auto j = scs::to_json(res.diagnostics);
  for (const char* key : {"intersection_residual", "x0", "y0", "eigenvalues", "eigengap", "restart_scores",
                          "retained_singular_values"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_EQ(j.at("eigenvalues").size(), 3u);
}
