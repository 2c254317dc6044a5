#include "samid/harness.hpp"

#include "samid/error.hpp"
#include "samid/intersection.hpp"
#include "samid/io.hpp"
#include "samid/rng.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

namespace samid {

std::string_view method_name(Method method) {
  switch (method) {
    case Method::scs: return "scs";
    case Method::cml: return "cml";
    case Method::feature_kmeans: return "feature-kmeans";
    case Method::gpca_lite: return "gpca-lite";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  for (Method m : {Method::scs, Method::cml, Method::feature_kmeans, Method::gpca_lite}) {
    if (method_name(m) == name) return m;
  }
  throw InvalidInput("unknown method '" + std::string(name) + "' (expected scs, cml, feature-kmeans or gpca-lite)");
}

WeightMode parse_weight_mode(std::string_view name) {
  if (name == "none") return WeightMode::none;
  if (name == "adjacency_diagonal" || name == "adjacency-diagonal") return WeightMode::adjacency_diagonal;
  throw InvalidInput("unknown weight mode '" + std::string(name) + "' (expected none or adjacency_diagonal)");
}

std::string_view weight_mode_name(WeightMode mode) {
  return mode == WeightMode::none ? "none" : "adjacency_diagonal";
}

Identification identify(const Dataset& data, const IdentifyOptions& options) {
  data.validate();
  const int k = options.num_submodels;
  if (k < 1) throw InvalidInput("number of submodels must be positive");
  if (options.restarts < 1) throw InvalidInput("restarts must be at least 1");
  KMeansOptions km;
  km.restarts = options.restarts;

  Identification out;
  switch (options.method) {
    case Method::scs: {
      auto res = scs::scs_label(data, k, options.seed, km);
      out.labels = std::move(res.labels);
      out.estimates = estimation::fit_submodels(data, out.labels, k, res.adjacency_diagonal,
                                                FitOptions{options.weight_mode, options.diag_threshold});
      out.diagnostics = std::move(res.diagnostics);
      break;
    }
    case Method::cml:
      out.estimates = estimation::clairvoyant_fit(data, k, options.sigma_ratio);
      out.labels = *data.labels;
      break;
    case Method::feature_kmeans: {
      const int c = options.neighborhood.value_or(baselines::default_neighborhood(data.input_dim()));
      out.labels = baselines::feature_cluster_labels(data, k, c, options.seed, km);
      out.estimates = estimation::fit_submodels(data, out.labels, k, std::nullopt);
      break;
    }
    case Method::gpca_lite:
      if (k != 2) throw InvalidInput("gpca-lite fits exactly two submodels");
      out.estimates = baselines::gpca_lite_fit(data);
      out.labels = baselines::assign_by_residual(data, out.estimates);
      break;
  }
  return out;
}

void ExperimentConfig::validate() const {
  const int k = model.num_submodels();
  const int nx = model.input_dim();
  const int ny = model.output_dim();
  if (k < 2) throw InvalidInput("experiments need at least two submodels");
  const auto report = sim::check_identifiability(model);
  if (!report.identifiable) throw InvalidInput("model is not identifiable: " + report.diagnostic);

  Index total = 0;
  if (switching && std::holds_alternative<ExplicitSwitching>(*switching)) {
    total = static_cast<Index>(std::get<ExplicitSwitching>(*switching).labels.size());
  } else {
    if (static_cast<int>(n_per_submodel.size()) != k) {
      throw InvalidInput("n_per_submodel needs one count per submodel");
    }
    for (Index c : n_per_submodel) {
      if (c < 0) throw InvalidInput("n_per_submodel entries must be non-negative");
      total += c;
    }
  }
  if (total < static_cast<Index>(k) * nx + 1) {
    std::ostringstream msg;
    msg << "experiments need at least K*Nx+1 = " << k * nx + 1 << " observations, got " << total;
    throw InvalidInput(msg.str());
  }
  if (snr_grid.empty()) throw InvalidInput("snr_grid must not be empty");
  for (double s : snr_grid) {
    if (!std::isfinite(s)) throw InvalidInput("snr_grid values must be finite");
  }
  if (!(sigma_ratio >= 0.0) || !std::isfinite(sigma_ratio)) {
    throw InvalidInput("sigma_ratio must be finite and non-negative");
  }
  if (runs < 1) throw InvalidInput("runs must be at least 1");
  if (methods.empty()) throw InvalidInput("methods must not be empty");
  std::set<Method> unique(methods.begin(), methods.end());
  if (unique.size() != methods.size()) throw InvalidInput("methods contain duplicates");
  if (restarts < 1) throw InvalidInput("restarts must be at least 1");
  if (!(diag_threshold >= 0.0 && diag_threshold < 1.0)) throw InvalidInput("diag_threshold must lie in [0, 1)");

  for (Method m : methods) {
    if (m == Method::gpca_lite && (k != 2 || nx != 1 || ny != 1)) {
      throw InvalidInput("gpca-lite needs a single-input single-output model with two submodels");
    }
    if (m == Method::feature_kmeans) {
      const int c = neighborhood.value_or(baselines::default_neighborhood(nx));
      if (c < nx + 1) throw InvalidInput("neighbourhood size c must be at least Nx+1");
      if (total <= c) throw InvalidInput("neighbourhood size c must be smaller than N");
    }
    if (m == Method::scs) {
      try {
        intersection::intersection_oracle(model);
      } catch (const NumericalFailure&) {
        throw InvalidInput("scs needs submodels with a non-empty common intersection");
      }
    }
  }
}

namespace harness {
namespace {

struct MethodOutcome {
  bool failed = true;
  std::vector<SubmodelError> errors;
  double misclassification = 0.0;
};

MethodOutcome run_method(Method method, const ExperimentConfig& config, const Dataset& data,
                         std::uint64_t seed) {
  const auto& model = config.model;
  const int k = model.num_submodels();
  const Labels& truth = *data.labels;
  IdentifyOptions opts;
  opts.method = method;
  opts.num_submodels = k;
  opts.seed = seed;
  opts.restarts = config.restarts;
  opts.neighborhood = config.neighborhood;
  opts.weight_mode = config.weight_mode;
  opts.diag_threshold = config.diag_threshold;
  opts.sigma_ratio = config.sigma_ratio;

  MethodOutcome out;
  try {
    const auto ident = identify(data, opts);
    std::vector<int> perm;
    if (method == Method::cml) {
      perm.resize(static_cast<std::size_t>(k));
      for (int i = 0; i < k; ++i) perm[i] = i;
      out.misclassification = 0.0;
    } else if (method == Method::gpca_lite) {
      perm = metrics::slope_order_permutation(model);
      out.misclassification = metrics::misclassification_ratio(ident.labels, truth, k);
    } else {
      const auto match = metrics::match_clusters(ident.labels, truth, k);
      perm = match.permutation;
      out.misclassification = static_cast<double>(match.mismatches) / static_cast<double>(truth.size());
    }
    out.errors = metrics::parameter_mse(ident.estimates, model, perm);
    out.failed = false;
    for (const auto& e : out.errors) {
      if (!std::isfinite(e.mse_theta) || !std::isfinite(e.mse_gamma)) out.failed = true;
    }
  } catch (const NumericalFailure&) {
    out.failed = true;
  }
  return out;
}

}  // namespace

std::uint64_t run_seed(std::uint64_t master_seed, std::size_t snr_index, std::size_t run) {
  return derive_seed(master_seed, snr_index, run);
}

unsigned resolve_threads(unsigned requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("SAMID_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? hw : 1;
}

std::vector<ResultRow> run_monte_carlo(const ExperimentConfig& config, const RunOptions& options) {
  config.validate();
  const auto& model = config.model;
  const int k = model.num_submodels();
  const SwitchingSpec switching = config.switching.value_or(SwitchingSpec{sign_split(model.input_dim())});
  const Design design = sim::generate_design(model, switching, config.n_per_submodel, config.master_seed);

  const std::size_t num_snr = config.snr_grid.size();
  const auto runs = static_cast<std::size_t>(config.runs);
  const std::size_t num_methods = config.methods.size();
  std::vector<NoiseSpec> noise(num_snr);
  for (std::size_t s = 0; s < num_snr; ++s) {
    noise[s] = sim::noise_for_target_snr(model, design.D, design.labels, config.snr_grid[s], config.sigma_ratio);
  }

  // outcomes[(s * runs + r) * num_methods + m]
  const std::size_t total_jobs = num_snr * runs;
  std::vector<MethodOutcome> outcomes(total_jobs * num_methods);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  std::size_t done = 0;
  std::mutex mu;
  std::exception_ptr error;

  auto worker = [&] {
    while (!abort.load()) {
      const std::size_t job = next.fetch_add(1);
      if (job >= total_jobs) return;
      const std::size_t s = job / runs;
      const std::size_t r = job % runs;
      try {
        const auto seed = run_seed(config.master_seed, s, r);
        const Dataset data = sim::simulate(model, design.D, design.labels, noise[s], seed);
        for (std::size_t m = 0; m < num_methods; ++m) {
          outcomes[job * num_methods + m] = run_method(config.methods[m], config, data, derive_seed(seed, m + 1));
        }
      } catch (...) {
        std::lock_guard lock(mu);
        if (!error) error = std::current_exception();
        abort.store(true);
        return;
      }
      if (options.progress) {
        std::lock_guard lock(mu);
        options.progress(++done, total_jobs);
      }
    }
  };

  const unsigned threads =
      static_cast<unsigned>(std::min<std::size_t>(resolve_threads(options.threads), total_jobs));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);

  // Reduce in run order so the sums do not depend on scheduling.
  std::vector<ResultRow> rows;
  for (std::size_t s = 0; s < num_snr; ++s) {
    for (std::size_t m = 0; m < num_methods; ++m) {
      std::vector<double> sum_theta(static_cast<std::size_t>(k), 0.0);
      std::vector<double> sum_gamma(static_cast<std::size_t>(k), 0.0);
      double sum_miss = 0.0;
      int used = 0;
      for (std::size_t r = 0; r < runs; ++r) {
        const auto& o = outcomes[(s * runs + r) * num_methods + m];
        if (o.failed) continue;
        ++used;
        sum_miss += o.misclassification;
        for (int i = 0; i < k; ++i) {
          sum_theta[i] += o.errors[i].mse_theta;
          sum_gamma[i] += o.errors[i].mse_gamma;
        }
      }
      const double nan = std::numeric_limits<double>::quiet_NaN();
      for (int i = 0; i < k; ++i) {
        ResultRow row;
        row.snr_db = config.snr_grid[s];
        row.method = config.methods[m];
        row.submodel = i;
        row.runs_used = used;
        row.failures = config.runs - used;
        row.mse_theta = used ? sum_theta[i] / used : nan;
        row.mse_gamma = used ? sum_gamma[i] / used : nan;
        row.misclassification = used ? sum_miss / used : nan;
        rows.push_back(row);
      }
    }
  }
  return rows;
}

const ResultRow* find_row(const std::vector<ResultRow>& rows, double snr_db, Method method, int submodel) {
  for (const auto& row : rows) {
    if (row.snr_db == snr_db && row.method == method && row.submodel == submodel) return &row;
  }
  return nullptr;
}

double overall_mse(const std::vector<ResultRow>& rows, const SwitchedAffineModel& model, double snr_db,
                   Method method) {
  const double theta_entries = static_cast<double>(model.input_dim() * model.output_dim());
  const double gamma_entries = static_cast<double>(model.output_dim());
  double sum = 0.0;
  for (int i = 0; i < model.num_submodels(); ++i) {
    const auto* row = find_row(rows, snr_db, method, i);
    if (!row) return std::numeric_limits<double>::quiet_NaN();
    sum += (row->mse_theta * theta_entries + row->mse_gamma * gamma_entries) / (theta_entries + gamma_entries);
  }
  return sum / model.num_submodels();
}

namespace {

void reject_unknown(const nlohmann::json& j, std::initializer_list<std::string_view> allowed) {
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) throw InvalidInput("unknown experiment config key '" + key + "'");
  }
}

double number(const nlohmann::json& j, const char* key) {
  if (!j.is_number()) throw InvalidInput(std::string("'") + key + "' must be a number");
  return j.get<double>();
}

int integer(const nlohmann::json& j, const char* key) {
  if (!j.is_number_integer()) throw InvalidInput(std::string("'") + key + "' must be an integer");
  return j.get<int>();
}

}  // namespace

ExperimentConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw InvalidInput("experiment config must be a JSON object");
  reject_unknown(j, {"model", "switching", "n_per_submodel", "snr_grid", "sigma_ratio", "runs", "methods",
                     "master_seed", "c", "restarts", "diag_threshold", "weight_mode"});
  for (const char* key : {"model", "snr_grid", "methods"}) {
    if (!j.contains(key)) throw InvalidInput(std::string("experiment config is missing '") + key + "'");
  }

  const auto& jm = j.at("model");
  SwitchedAffineModel model = [&] {
    if (jm.is_string()) {
      std::filesystem::path p = jm.get<std::string>();
      if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
      return io::load_model(p);
    }
    return io::model_from_json(jm);
  }();
  ExperimentConfig cfg{std::move(model)};
  const int k = cfg.model.num_submodels();

  if (j.contains("switching")) {
    cfg.switching = io::switching_from_json(j.at("switching"), k, cfg.model.input_dim());
  }
  if (j.contains("n_per_submodel")) {
    const auto& n = j.at("n_per_submodel");
    if (n.is_number_integer()) {
      cfg.n_per_submodel.assign(static_cast<std::size_t>(k), n.get<Index>());
    } else if (n.is_array()) {
      for (const auto& v : n) {
        if (!v.is_number_integer()) throw InvalidInput("'n_per_submodel' entries must be integers");
        cfg.n_per_submodel.push_back(v.get<Index>());
      }
    } else {
      throw InvalidInput("'n_per_submodel' must be an integer or an array of integers");
    }
  }
  const auto& grid = j.at("snr_grid");
  if (!grid.is_array()) throw InvalidInput("'snr_grid' must be an array of numbers");
  for (const auto& v : grid) cfg.snr_grid.push_back(number(v, "snr_grid"));
  const auto& methods = j.at("methods");
  if (!methods.is_array()) throw InvalidInput("'methods' must be an array of method names");
  for (const auto& v : methods) {
    if (!v.is_string()) throw InvalidInput("'methods' must be an array of method names");
    cfg.methods.push_back(parse_method(v.get<std::string>()));
  }
  if (j.contains("sigma_ratio")) cfg.sigma_ratio = number(j.at("sigma_ratio"), "sigma_ratio");
  if (j.contains("runs")) cfg.runs = integer(j.at("runs"), "runs");
  if (j.contains("master_seed")) {
    const auto& s = j.at("master_seed");
    if (!s.is_number_integer() || (!s.is_number_unsigned() && s.get<std::int64_t>() < 0)) {
      throw InvalidInput("'master_seed' must be a non-negative integer");
    }
    cfg.master_seed = s.get<std::uint64_t>();
  }
  if (j.contains("c")) cfg.neighborhood = integer(j.at("c"), "c");
  if (j.contains("restarts")) cfg.restarts = integer(j.at("restarts"), "restarts");
  if (j.contains("diag_threshold")) cfg.diag_threshold = number(j.at("diag_threshold"), "diag_threshold");
  if (j.contains("weight_mode")) {
    if (!j.at("weight_mode").is_string()) throw InvalidInput("'weight_mode' must be a string");
    cfg.weight_mode = parse_weight_mode(j.at("weight_mode").get<std::string>());
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  return config_from_json(io::load_json(path), path.parent_path());
}

void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
  out << "snr_db,method,submodel,mse_theta,mse_gamma,misclassification,failures,runs_used\n";
  for (const auto& r : rows) {
    out << io::format_double(r.snr_db) << ',' << method_name(r.method) << ',' << r.submodel << ','
        << io::format_double(r.mse_theta) << ',' << io::format_double(r.mse_gamma) << ','
        << io::format_double(r.misclassification) << ',' << r.failures << ',' << r.runs_used << '\n';
  }
}

std::string results_csv(const std::vector<ResultRow>& rows) {
  std::ostringstream out;
  write_results_csv(out, rows);
  return out.str();
}

}  // namespace harness
}  // namespace samid
