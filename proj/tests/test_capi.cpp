#include "samid/samid.h"

#include <gtest/gtest.h>

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace {

const char* kExample1 = R"({"K":2,"Nx":1,"Ny":1,"submodels":[{"theta":[1.7],"gamma":[0.9]},{"theta":[2.8],"gamma":[1.2]}]})";

struct ModelDeleter {
  void operator()(samid_model* m) const { samid_model_free(m); }
};
struct DatasetDeleter {
  void operator()(samid_dataset* d) const { samid_dataset_free(d); }
};
struct IdentificationDeleter {
  void operator()(samid_identification* r) const { samid_identification_free(r); }
};
struct SweepDeleter {
  void operator()(samid_sweep_result* r) const { samid_sweep_free(r); }
};
using ModelPtr = std::unique_ptr<samid_model, ModelDeleter>;
using DatasetPtr = std::unique_ptr<samid_dataset, DatasetDeleter>;
using IdentificationPtr = std::unique_ptr<samid_identification, IdentificationDeleter>;
using SweepPtr = std::unique_ptr<samid_sweep_result, SweepDeleter>;

std::string take(char* s) {
  std::string out = s ? s : "";
  samid_string_free(s);
  return out;
}

ModelPtr example1() {
  samid_model* m = nullptr;
  EXPECT_EQ(samid_model_from_json(kExample1, &m), SAMID_OK) << samid_last_error();
  return ModelPtr(m);
}

DatasetPtr simulate(const samid_model* model, size_t n, double snr, uint64_t seed) {
  samid_dataset* d = nullptr;
  EXPECT_EQ(samid_simulate_snr(model, nullptr, n, snr, 1.0, seed, &d), SAMID_OK) << samid_last_error();
  return DatasetPtr(d);
}

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "samid_capi_test";
  std::filesystem::create_directories(dir);
  return dir / name;
}

void count_progress(size_t, size_t, void* user) { ++*static_cast<size_t*>(user); }

}  // namespace

TEST(CApi, Version) { EXPECT_STREQ(samid_version(), "0.1.0"); }

TEST(CApi, ModelRoundTrip) {
  auto model = example1();
  int k = 0, nx = 0, ny = 0;
  ASSERT_EQ(samid_model_dims(model.get(), &k, &nx, &ny), SAMID_OK);
  EXPECT_EQ(k, 2);
  EXPECT_EQ(nx, 1);
  EXPECT_EQ(ny, 1);
  char* text = nullptr;
  ASSERT_EQ(samid_model_to_json(model.get(), &text), SAMID_OK);
  const std::string json = take(text);
  samid_model* again = nullptr;
  ASSERT_EQ(samid_model_from_json(json.c_str(), &again), SAMID_OK);
  ModelPtr owned(again);
  ASSERT_EQ(samid_model_to_json(again, &text), SAMID_OK);
  EXPECT_EQ(take(text), json);

  int identifiable = 0, rank = 0;
  ASSERT_EQ(samid_model_check_identifiability(model.get(), &identifiable, &rank), SAMID_OK);
  EXPECT_EQ(identifiable, 1);
  EXPECT_EQ(rank, 2);
}

TEST(CApi, ModelCreateRowMajor) {
  const double thetas[] = {0.7, 0.4, 0.2, 0.3, 0.8, 0.9, 0.4, 0.5};
  const double gammas[] = {-0.4, 0.17, -0.81, -0.09};
  samid_model* m = nullptr;
  ASSERT_EQ(samid_model_create(2, 2, 2, thetas, gammas, &m), SAMID_OK) << samid_last_error();
  ModelPtr model(m);
  char* text = nullptr;
  ASSERT_EQ(samid_model_to_json(m, &text), SAMID_OK);
  const std::string json = take(text);
  EXPECT_NE(json.find("0.4,"), std::string::npos);
  int identifiable = 0;
  ASSERT_EQ(samid_model_check_identifiability(m, &identifiable, nullptr), SAMID_OK);
  EXPECT_EQ(identifiable, 1);

  const double parallel_thetas[] = {1.0, 1.0};
  const double parallel_gammas[] = {0.0, 1.0};
  samid_model* p = nullptr;
  ASSERT_EQ(samid_model_create(2, 1, 1, parallel_thetas, parallel_gammas, &p), SAMID_OK);
  ModelPtr parallel(p);
  ASSERT_EQ(samid_model_check_identifiability(p, &identifiable, nullptr), SAMID_OK);
  EXPECT_EQ(identifiable, 0);
  EXPECT_STRNE(samid_last_error(), "");
}

TEST(CApi, ErrorCodes) {
  samid_model* m = nullptr;
  EXPECT_EQ(samid_model_from_json("{not json", &m), SAMID_ERR_CONFIG);
  EXPECT_EQ(m, nullptr);
  EXPECT_STRNE(samid_last_error(), "");
  EXPECT_EQ(samid_model_from_json(R"({"K":1})", &m), SAMID_ERR_CONFIG);
  EXPECT_EQ(samid_model_load("/nonexistent/model.json", &m), SAMID_ERR_IO);
  EXPECT_EQ(samid_model_from_json(nullptr, &m), SAMID_ERR_ARGUMENT);
  EXPECT_EQ(samid_model_from_json(kExample1, nullptr), SAMID_ERR_ARGUMENT);
  EXPECT_EQ(samid_model_dims(nullptr, nullptr, nullptr, nullptr), SAMID_ERR_ARGUMENT);

  samid_dataset* d = nullptr;
  EXPECT_EQ(samid_dataset_load_csv("/nonexistent/data.csv", &d), SAMID_ERR_IO);
  EXPECT_EQ(samid_simulate_snr(nullptr, nullptr, 10, 30, 1, 0, &d), SAMID_ERR_ARGUMENT);

  int method = -1;
  EXPECT_EQ(samid_method_from_name("gpca-lite", &method), SAMID_OK);
  EXPECT_EQ(method, SAMID_METHOD_GPCA_LITE);
  EXPECT_EQ(samid_method_from_name("magic", &method), SAMID_ERR_CONFIG);

  // Freeing NULL is a no-op.
  samid_model_free(nullptr);
  samid_dataset_free(nullptr);
  samid_identification_free(nullptr);
  samid_sweep_free(nullptr);
  samid_string_free(nullptr);
}

TEST(CApi, DatasetCreateCopyAndCsv) {
  const double x[] = {0.0, 1.0, 2.0, 3.0};
  const double y[] = {0.5, 1.5, 2.5, 3.5};
  const int labels[] = {0, 1, 0, 1};
  samid_dataset* d = nullptr;
  ASSERT_EQ(samid_dataset_create(1, 1, 4, x, y, labels, &d), SAMID_OK);
  DatasetPtr data(d);
  int nx = 0, ny = 0, has = 0;
  size_t n = 0;
  ASSERT_EQ(samid_dataset_dims(d, &nx, &ny, &n, &has), SAMID_OK);
  EXPECT_EQ(n, 4u);
  EXPECT_EQ(has, 1);

  const auto path = scratch("roundtrip.csv");
  ASSERT_EQ(samid_dataset_save_csv(d, path.c_str(), 1), SAMID_OK);
  samid_dataset* back = nullptr;
  ASSERT_EQ(samid_dataset_load_csv(path.c_str(), &back), SAMID_OK);
  DatasetPtr loaded(back);
  std::vector<double> xs(4), ys(4);
  std::vector<int> ls(4);
  ASSERT_EQ(samid_dataset_copy(back, xs.data(), ys.data(), ls.data()), SAMID_OK);
  EXPECT_EQ(xs, std::vector<double>(x, x + 4));
  EXPECT_EQ(ys, std::vector<double>(y, y + 4));
  EXPECT_EQ(ls, std::vector<int>(labels, labels + 4));

  samid_dataset* unlabeled = nullptr;
  ASSERT_EQ(samid_dataset_create(1, 1, 4, x, y, nullptr, &unlabeled), SAMID_OK);
  DatasetPtr u(unlabeled);
  EXPECT_EQ(samid_dataset_copy(unlabeled, nullptr, nullptr, ls.data()), SAMID_ERR_CONFIG);
  EXPECT_EQ(samid_dataset_create(0, 1, 4, x, y, nullptr, &unlabeled), SAMID_ERR_CONFIG);
  const int negative[] = {0, -1, 0, 1};
  EXPECT_EQ(samid_dataset_create(1, 1, 4, x, y, negative, &unlabeled), SAMID_ERR_CONFIG);
}

TEST(CApi, SimulateIsSeeded) {
  auto model = example1();
  auto a = simulate(model.get(), 50, 30.0, 7);
  auto b = simulate(model.get(), 50, 30.0, 7);
  auto c = simulate(model.get(), 50, 30.0, 8);
  std::vector<double> ya(50), yb(50), yc(50);
  samid_dataset_copy(a.get(), nullptr, ya.data(), nullptr);
  samid_dataset_copy(b.get(), nullptr, yb.data(), nullptr);
  samid_dataset_copy(c.get(), nullptr, yc.data(), nullptr);
  EXPECT_EQ(ya, yb);
  EXPECT_NE(ya, yc);

  samid_dataset* d = nullptr;
  EXPECT_EQ(samid_simulate_sigma(model.get(), R"({"mode":"jump","probabilities":[0.5,0.5]})", 40, 0.0, 0.0, 1, &d),
            SAMID_OK);
  DatasetPtr noiseless(d);
  std::vector<double> x(40), y(40);
  std::vector<int> l(40);
  samid_dataset_copy(d, x.data(), y.data(), l.data());
  for (int i = 0; i < 40; ++i) {
    const double expected = l[i] == 0 ? 1.7 * x[i] + 0.9 : 2.8 * x[i] + 1.2;
    EXPECT_NEAR(y[i], expected, 1e-15);
  }
  EXPECT_EQ(samid_simulate_snr(model.get(), R"({"mode":"jump","probabilities":[1,1,1]})", 40, 30, 1, 1, &d),
            SAMID_ERR_CONFIG);
}

TEST(CApi, IdentifyNoiseless) {
  auto model = example1();
  samid_dataset* d = nullptr;
  ASSERT_EQ(samid_simulate_sigma(model.get(), nullptr, 200, 0.0, 0.0, 3, &d), SAMID_OK);
  DatasetPtr data(d);
  samid_identify_options opts;
  samid_identify_options_init(&opts);
  EXPECT_EQ(opts.restarts, 10);
  EXPECT_LT(opts.sigma_ratio, 0.0);
  samid_identification* r = nullptr;
  ASSERT_EQ(samid_identify(d, &opts, &r), SAMID_OK) << samid_last_error();
  IdentificationPtr result(r);
  ASSERT_EQ(samid_identification_size(r), 200u);

  std::vector<int> labels(200), truth(200);
  ASSERT_EQ(samid_identification_labels(r, labels.data()), SAMID_OK);
  samid_dataset_copy(d, nullptr, nullptr, truth.data());
  int agree = 0;
  for (int i = 0; i < 200; ++i) agree += labels[i] == truth[i];
  EXPECT_TRUE(agree == 0 || agree == 200);

  char* text = nullptr;
  ASSERT_EQ(samid_identification_model_json(r, &text), SAMID_OK);
  samid_model* est = nullptr;
  ASSERT_EQ(samid_model_from_json(take(text).c_str(), &est), SAMID_OK);
  ModelPtr estimated(est);
  ASSERT_EQ(samid_identification_diagnostics_json(r, &text), SAMID_OK);
  const auto diag = take(text);
  for (const char* key : {"\"method\"", "\"cluster_sizes\"", "\"eigenvalues\"", "\"x0\""}) {
    EXPECT_NE(diag.find(key), std::string::npos) << key;
  }

  opts.method = 42;
  EXPECT_EQ(samid_identify(d, &opts, &r), SAMID_ERR_CONFIG);
  opts.method = SAMID_METHOD_GPCA_LITE;
  opts.num_submodels = 3;
  EXPECT_EQ(samid_identify(d, &opts, &r), SAMID_ERR_CONFIG);
  EXPECT_EQ(samid_identify(nullptr, &opts, &r), SAMID_ERR_ARGUMENT);
  EXPECT_EQ(samid_identify(d, nullptr, &r), SAMID_ERR_ARGUMENT);
}

TEST(CApi, IdentifyNumericalFailure) {
  // Points on y x = 1: no quadratic with a y^2 term fits them.
  std::vector<double> x(30), y(30);
  for (int i = 0; i < 30; ++i) {
    x[i] = 0.5 + 0.05 * i;
    y[i] = 1.0 / x[i];
  }
  samid_dataset* d = nullptr;
  ASSERT_EQ(samid_dataset_create(1, 1, 30, x.data(), y.data(), nullptr, &d), SAMID_OK);
  DatasetPtr data(d);
  samid_identify_options opts;
  samid_identify_options_init(&opts);
  opts.method = SAMID_METHOD_GPCA_LITE;
  samid_identification* r = nullptr;
  EXPECT_EQ(samid_identify(d, &opts, &r), SAMID_ERR_NUMERICAL);
  EXPECT_EQ(r, nullptr);
}

TEST(CApi, SweepRowsAndCsv) {
  const std::string cfg = std::string(R"({"model":)") + kExample1 +
                          R"(,"n_per_submodel":30,"snr_grid":[30,40],"runs":4,"methods":["scs","cml"],"master_seed":5})";
  size_t calls = 0;
  samid_sweep_result* s = nullptr;
  ASSERT_EQ(samid_sweep_run(cfg.c_str(), nullptr, 2, count_progress, &calls, &s), SAMID_OK) << samid_last_error();
  SweepPtr sweep(s);
  EXPECT_EQ(calls, 8u);
  ASSERT_EQ(samid_sweep_row_count(s), 8u);
  samid_result_row row;
  ASSERT_EQ(samid_sweep_row(s, 2, &row), SAMID_OK);
  EXPECT_EQ(row.snr_db, 30.0);
  EXPECT_STREQ(row.method, "cml");
  EXPECT_EQ(row.submodel, 0);
  EXPECT_EQ(row.failures + row.runs_used, 4);
  EXPECT_EQ(samid_sweep_row(s, 8, &row), SAMID_ERR_ARGUMENT);

  char* text = nullptr;
  ASSERT_EQ(samid_sweep_csv(s, &text), SAMID_OK);
  const auto csv = take(text);
  EXPECT_EQ(csv.rfind("snr_db,method,submodel,mse_theta,mse_gamma,misclassification,failures,runs_used\n", 0), 0u);

  samid_sweep_result* again = nullptr;
  ASSERT_EQ(samid_sweep_run(cfg.c_str(), nullptr, 1, nullptr, nullptr, &again), SAMID_OK);
  SweepPtr second(again);
  ASSERT_EQ(samid_sweep_csv(again, &text), SAMID_OK);
  EXPECT_EQ(take(text), csv);

  EXPECT_EQ(samid_sweep_run(R"({"model":"nope.json","snr_grid":[1],"methods":["scs"]})", "/nonexistent", 1,
                            nullptr, nullptr, &s),
            SAMID_ERR_IO);
  EXPECT_EQ(samid_sweep_run(R"({"snr_grid":[1]})", nullptr, 1, nullptr, nullptr, &s), SAMID_ERR_CONFIG);
  EXPECT_EQ(samid_sweep_run_file("/nonexistent/exp.json", 1, nullptr, nullptr, &s), SAMID_ERR_IO);
}

TEST(CApi, SweepFromShippedConfigPath) {
  samid_sweep_result* s = nullptr;
  // Loading alone is enough here; a tiny override keeps it quick.
  const std::string cfg = R"({"model":"example1_model.json","n_per_submodel":20,"snr_grid":[40],"runs":2,"methods":["gpca-lite"]})";
  ASSERT_EQ(samid_sweep_run(cfg.c_str(), SAMID_SOURCE_DIR "/configs", 1, nullptr, nullptr, &s), SAMID_OK)
      << samid_last_error();
  SweepPtr sweep(s);
  EXPECT_EQ(samid_sweep_row_count(s), 2u);
}
