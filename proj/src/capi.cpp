#include "samid/samid.h"

#include "samid/error.hpp"
#include "samid/harness.hpp"
#include "samid/io.hpp"
#include "samid/rng.hpp"

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <functional>
#include <new>
#include <string>
#include <vector>

struct samid_model {
  samid::SwitchedAffineModel model;
};

struct samid_dataset {
  samid::Dataset data;
};

struct samid_identification {
  samid::Identification result;
  samid::Method method;
};

struct samid_sweep_result {
  std::vector<samid::ResultRow> rows;
};

namespace {

thread_local std::string last_error;

samid_status fail(samid_status status, const std::string& message) {
  last_error = message;
  return status;
}

// Runs f, translating exceptions into status codes.
template <class F>
samid_status guarded(F&& f) {
  try {
    last_error.clear();
    f();
    return SAMID_OK;
  } catch (const samid::InvalidInput& e) {
    return fail(SAMID_ERR_CONFIG, e.what());
  } catch (const samid::NumericalFailure& e) {
    return fail(SAMID_ERR_NUMERICAL, e.what());
  } catch (const samid::IoError& e) {
    return fail(SAMID_ERR_IO, e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(SAMID_ERR_CONFIG, std::string("JSON error: ") + e.what());
  } catch (const std::bad_alloc&) {
    return fail(SAMID_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(SAMID_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(SAMID_ERR_INTERNAL, "unknown error");
  }
}

samid_status null_argument(const char* what) { return fail(SAMID_ERR_ARGUMENT, std::string(what) + " is NULL"); }

char* copy_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

samid::SwitchingSpec parse_switching(const char* json, const samid::SwitchedAffineModel& model) {
  if (!json) return samid::sign_split(model.input_dim());
  return samid::io::switching_from_json(nlohmann::json::parse(json), model.num_submodels(), model.input_dim());
}

samid_status simulate_impl(const samid_model* model, const char* switching_json, size_t n, uint64_t seed,
                           samid_dataset** out, const std::function<samid::NoiseSpec(const samid::MatrixXd&,
                                                                                     const samid::Labels&)>& noise) {
  if (!model) return null_argument("model");
  if (!out) return null_argument("out");
  *out = nullptr;
  return guarded([&] {
    const auto& m = model->model;
    const auto spec = parse_switching(switching_json, m);
    const auto d = samid::sim::generate_inputs(m.input_dim(), static_cast<samid::Index>(n), samid::derive_seed(seed, 1));
    const auto labels = samid::sim::assign_labels(spec, d, samid::derive_seed(seed, 2));
    for (int l : labels) {
      if (l >= m.num_submodels()) throw samid::InvalidInput("switching rule emits a label beyond the model's submodels");
    }
    auto data = samid::sim::simulate(m, d, labels, noise(d, labels), samid::derive_seed(seed, 3));
    data.seed = seed;
    *out = new samid_dataset{std::move(data)};
  });
}

}  // namespace

extern "C" {

const char* samid_version(void) { return "0.1.0"; }

const char* samid_last_error(void) { return last_error.c_str(); }

void samid_string_free(char* s) { delete[] s; }

samid_status samid_model_from_json(const char* json, samid_model** out) {
  if (!json) return null_argument("json");
  if (!out) return null_argument("out");
  *out = nullptr;
  return guarded([&] { *out = new samid_model{samid::io::model_from_json(nlohmann::json::parse(json))}; });
}

samid_status samid_model_load(const char* path, samid_model** out) {
  if (!path) return null_argument("path");
  if (!out) return null_argument("out");
  *out = nullptr;
  return guarded([&] { *out = new samid_model{samid::io::load_model(path)}; });
}

samid_status samid_model_create(int num_submodels, int input_dim, int output_dim, const double* thetas,
                                const double* gammas, samid_model** out) {
  if (!thetas) return null_argument("thetas");
  if (!gammas) return null_argument("gammas");
  if (!out) return null_argument("out");
  *out = nullptr;
  return guarded([&] {
    if (num_submodels < 1 || input_dim < 1 || output_dim < 1) {
      throw samid::InvalidInput("model dimensions must be positive");
    }
    std::vector<samid::Submodel> subs;
    const std::size_t theta_size = static_cast<std::size_t>(output_dim) * input_dim;
    for (int i = 0; i < num_submodels; ++i) {
      samid::Submodel s;
      s.theta = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
          thetas + i * theta_size, output_dim, input_dim);
      s.gamma = Eigen::Map<const samid::VectorXd>(gammas + static_cast<std::size_t>(i) * output_dim, output_dim);
      subs.push_back(std::move(s));
    }
    *out = new samid_model{samid::SwitchedAffineModel(std::move(subs))};
  });
}

samid_status samid_model_dims(const samid_model* model, int* num_submodels, int* input_dim, int* output_dim) {
  if (!model) return null_argument("model");
  if (num_submodels) *num_submodels = model->model.num_submodels();
  if (input_dim) *input_dim = model->model.input_dim();
  if (output_dim) *output_dim = model->model.output_dim();
  return SAMID_OK;
}

samid_status samid_model_to_json(const samid_model* model, char** out) {
  if (!model) return null_argument("model");
  if (!out) return null_argument("out");
  *out = nullptr;
  return guarded([&] { *out = copy_string(samid::io::model_to_json(model->model).dump(2)); });
}

samid_status samid_model_check_identifiability(const samid_model* model, int* identifiable, int* rank) {
  if (!model) return null_argument("model");
  return guarded([&] {
    const auto report = samid::sim::check_identifiability(model->model);
    if (identifiable) *identifiable = report.identifiable ? 1 : 0;
    if (rank) *rank = report.rank;
    if (!report.identifiable) last_error = report.diagnostic;
  });
}

void samid_model_free(samid_model* model) { delete model; }

samid_status samid_simulate_snr(const samid_model* model, const char* switching_json, size_t n, double snr_db,
                                double sigma_ratio, uint64_t seed, samid_dataset** out) {
  return simulate_impl(model, switching_json, n, seed, out, [&](const samid::MatrixXd& d, const samid::Labels& l) {
    return samid::sim::noise_for_target_snr(model->model, d, l, snr_db, sigma_ratio);
  });
}

samid_status samid_simulate_sigma(const samid_model* model, const char* switching_json, size_t n, double sigma_x,
                                  double sigma_y, uint64_t seed, samid_dataset** out) {
  return simulate_impl(model, switching_json, n, seed, out, [&](const samid::MatrixXd&, const samid::Labels&) {
    return samid::NoiseSpec{sigma_x, sigma_y};
  });
}

samid_status samid_dataset_load_csv(const char* path, samid_dataset** out) {
  if (!path) return null_argument("path");
  if (!out) return null_argument("out");
  *out = nullptr;
  return guarded([&] { *out = new samid_dataset{samid::io::load_dataset_csv(path)}; });
}

samid_status samid_dataset_save_csv(const samid_dataset* data, const char* path, int with_labels) {
  if (!data) return null_argument("data");
  if (!path) return null_argument("path");
  return guarded([&] { samid::io::save_dataset_csv(path, data->data, with_labels != 0); });
}

samid_status samid_dataset_create(int input_dim, int output_dim, size_t n, const double* x, const double* y,
                                  const int* labels, samid_dataset** out) {
  if (!x) return null_argument("x");
  if (!y) return null_argument("y");
  if (!out) return null_argument("out");
  *out = nullptr;
  return guarded([&] {
    if (input_dim < 1 || output_dim < 1) throw samid::InvalidInput("dataset dimensions must be positive");
    const auto cols = static_cast<samid::Index>(n);
    samid::Dataset data;
    data.X = Eigen::Map<const samid::MatrixXd>(x, input_dim, cols);
    data.Y = Eigen::Map<const samid::MatrixXd>(y, output_dim, cols);
    if (labels) data.labels = samid::Labels(labels, labels + n);
    data.validate();
    *out = new samid_dataset{std::move(data)};
  });
}

samid_status samid_dataset_dims(const samid_dataset* data, int* input_dim, int* output_dim, size_t* n,
                                int* has_labels) {
  if (!data) return null_argument("data");
  if (input_dim) *input_dim = data->data.input_dim();
  if (output_dim) *output_dim = data->data.output_dim();
  if (n) *n = static_cast<size_t>(data->data.size());
  if (has_labels) *has_labels = data->data.labels ? 1 : 0;
  return SAMID_OK;
}

samid_status samid_dataset_copy(const samid_dataset* data, double* x, double* y, int* labels) {
  if (!data) return null_argument("data");
  const auto& d = data->data;
  if (labels && !d.labels) return fail(SAMID_ERR_CONFIG, "dataset has no labels");
  if (x) std::memcpy(x, d.X.data(), sizeof(double) * static_cast<size_t>(d.X.size()));
  if (y) std::memcpy(y, d.Y.data(), sizeof(double) * static_cast<size_t>(d.Y.size()));
  if (labels) std::copy(d.labels->begin(), d.labels->end(), labels);
  return SAMID_OK;
}

void samid_dataset_free(samid_dataset* data) { delete data; }

void samid_identify_options_init(samid_identify_options* options) {
  if (!options) return;
  options->method = SAMID_METHOD_SCS;
  options->num_submodels = 2;
  options->seed = 0;
  options->restarts = 10;
  options->neighborhood = 0;
  options->weight_mode = SAMID_WEIGHT_NONE;
  options->diag_threshold = 0.0;
  options->sigma_ratio = -1.0;
}

samid_status samid_method_from_name(const char* name, int* method) {
  if (!name) return null_argument("name");
  if (!method) return null_argument("method");
  return guarded([&] { *method = static_cast<int>(samid::parse_method(name)); });
}

samid_status samid_identify(const samid_dataset* data, const samid_identify_options* options,
                            samid_identification** out) {
  if (!data) return null_argument("data");
  if (!options) return null_argument("options");
  if (!out) return null_argument("out");
  *out = nullptr;
  return guarded([&] {
    if (options->method < SAMID_METHOD_SCS || options->method > SAMID_METHOD_GPCA_LITE) {
      throw samid::InvalidInput("unknown method code");
    }
    if (options->weight_mode != SAMID_WEIGHT_NONE && options->weight_mode != SAMID_WEIGHT_ADJACENCY_DIAGONAL) {
      throw samid::InvalidInput("unknown weight mode code");
    }
    samid::IdentifyOptions opts;
    opts.method = static_cast<samid::Method>(options->method);
    opts.num_submodels = options->num_submodels;
    opts.seed = options->seed;
    opts.restarts = options->restarts;
    if (options->neighborhood > 0) opts.neighborhood = options->neighborhood;
    if (options->neighborhood < 0) throw samid::InvalidInput("neighbourhood size must be positive");
    opts.weight_mode = static_cast<samid::WeightMode>(options->weight_mode);
    opts.diag_threshold = options->diag_threshold;
    if (options->sigma_ratio >= 0.0) opts.sigma_ratio = options->sigma_ratio;
    *out = new samid_identification{samid::identify(data->data, opts), opts.method};
  });
}

size_t samid_identification_size(const samid_identification* result) {
  return result ? result->result.labels.size() : 0;
}

samid_status samid_identification_labels(const samid_identification* result, int* labels) {
  if (!result) return null_argument("result");
  if (!labels) return null_argument("labels");
  std::copy(result->result.labels.begin(), result->result.labels.end(), labels);
  return SAMID_OK;
}

samid_status samid_identification_model_json(const samid_identification* result, char** out) {
  if (!result) return null_argument("result");
  if (!out) return null_argument("out");
  *out = nullptr;
  return guarded([&] {
    *out = copy_string(samid::io::model_to_json(samid::estimation::to_model(result->result.estimates)).dump(2));
  });
}

samid_status samid_identification_diagnostics_json(const samid_identification* result, char** out) {
  if (!result) return null_argument("result");
  if (!out) return null_argument("out");
  *out = nullptr;
  return guarded([&] {
    nlohmann::json j;
    j["method"] = std::string(samid::method_name(result->method));
    std::vector<long long> n_used;
    std::vector<long long> sizes(result->result.estimates.size(), 0);
    for (const auto& e : result->result.estimates) n_used.push_back(static_cast<long long>(e.n_used));
    for (int l : result->result.labels) {
      if (l >= 0 && static_cast<std::size_t>(l) < sizes.size()) ++sizes[static_cast<std::size_t>(l)];
    }
    j["cluster_sizes"] = sizes;
    j["n_used"] = n_used;
    if (result->result.diagnostics) j.update(samid::scs::to_json(*result->result.diagnostics));
    *out = copy_string(j.dump(2));
  });
}

void samid_identification_free(samid_identification* result) { delete result; }

namespace {

samid_status sweep_impl(const std::function<samid::ExperimentConfig()>& load, unsigned threads,
                        samid_progress_fn progress, void* user, samid_sweep_result** out) {
  if (!out) return null_argument("out");
  *out = nullptr;
  return guarded([&] {
    const auto config = load();
    samid::RunOptions opts;
    opts.threads = threads;
    if (progress) opts.progress = [progress, user](std::size_t done, std::size_t total) { progress(done, total, user); };
    *out = new samid_sweep_result{samid::harness::run_monte_carlo(config, opts)};
  });
}

}  // namespace

samid_status samid_sweep_run(const char* config_json, const char* base_dir, unsigned threads,
                             samid_progress_fn progress, void* user, samid_sweep_result** out) {
  if (!config_json) return null_argument("config_json");
  return sweep_impl(
      [&] {
        return samid::harness::config_from_json(nlohmann::json::parse(config_json),
                                                base_dir ? std::filesystem::path(base_dir) : std::filesystem::path());
      },
      threads, progress, user, out);
}

samid_status samid_sweep_run_file(const char* config_path, unsigned threads, samid_progress_fn progress,
                                  void* user, samid_sweep_result** out) {
  if (!config_path) return null_argument("config_path");
  return sweep_impl([&] { return samid::harness::load_config(config_path); }, threads, progress, user, out);
}

size_t samid_sweep_row_count(const samid_sweep_result* result) { return result ? result->rows.size() : 0; }

samid_status samid_sweep_row(const samid_sweep_result* result, size_t index, samid_result_row* row) {
  if (!result) return null_argument("result");
  if (!row) return null_argument("row");
  if (index >= result->rows.size()) return fail(SAMID_ERR_ARGUMENT, "row index out of range");
  const auto& r = result->rows[index];
  row->snr_db = r.snr_db;
  row->method = samid::method_name(r.method).data();
  row->submodel = r.submodel;
  row->mse_theta = r.mse_theta;
  row->mse_gamma = r.mse_gamma;
  row->misclassification = r.misclassification;
  row->failures = r.failures;
  row->runs_used = r.runs_used;
  return SAMID_OK;
}

samid_status samid_sweep_csv(const samid_sweep_result* result, char** out) {
  if (!result) return null_argument("result");
  if (!out) return null_argument("out");
  *out = nullptr;
  return guarded([&] { *out = copy_string(samid::harness::results_csv(result->rows)); });
}

void samid_sweep_free(samid_sweep_result* result) { delete result; }

}  // extern "C"
