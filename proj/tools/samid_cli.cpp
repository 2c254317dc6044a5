// samid command-line front end. Talks to the library only through the C API.

#include "samid/samid.h"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

namespace {

// Exit codes: 0 success, 1 configuration or I/O problem, 2 numerical failure.
int exit_code(samid_status s) {
  switch (s) {
    case SAMID_OK: return 0;
    case SAMID_ERR_NUMERICAL:
    case SAMID_ERR_INTERNAL: return 2;
    default: return 1;
  }
}

int report(samid_status s, const char* what) {
  if (s != SAMID_OK) std::cerr << "samid: " << what << ": " << samid_last_error() << '\n';
  return exit_code(s);
}

struct Deleter {
  void operator()(samid_model* p) const { samid_model_free(p); }
  void operator()(samid_dataset* p) const { samid_dataset_free(p); }
  void operator()(samid_identification* p) const { samid_identification_free(p); }
  void operator()(samid_sweep_result* p) const { samid_sweep_free(p); }
  void operator()(char* p) const { samid_string_free(p); }
};
template <class T>
using Owned = std::unique_ptr<T, Deleter>;

bool read_file(const std::string& path, std::string& out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  out.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  return true;
}

bool write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  out.close();
  if (!out) {
    std::cerr << "samid: cannot write '" << path << "'\n";
    return false;
  }
  return true;
}

struct SimulateArgs {
  std::string model;
  std::string switching = "piecewise";
  std::vector<double> probs;
  std::size_t n = 0;
  double snr = 0.0;
  double sigma_x = 0.0;
  double sigma_y = 0.0;
  double ratio = 1.0;
  std::uint64_t seed = 0;
  std::string out;
};

int run_simulate(const SimulateArgs& a, bool by_snr) {
  samid_model* raw_model = nullptr;
  if (int rc = report(samid_model_load(a.model.c_str(), &raw_model), "loading model")) return rc;
  Owned<samid_model> model(raw_model);

  std::string switching;
  if (a.switching == "piecewise") {
    switching = R"({"mode": "piecewise"})";
  } else if (a.switching == "jump") {
    std::ostringstream s;
    s.precision(17);
    s << R"({"mode": "jump")";
    if (!a.probs.empty()) {
      s << R"(, "probabilities": [)";
      for (std::size_t i = 0; i < a.probs.size(); ++i) s << (i ? ", " : "") << a.probs[i];
      s << ']';
    }
    s << '}';
    switching = s.str();
  } else if (!read_file(a.switching, switching)) {
    std::cerr << "samid: --switching must be piecewise, jump or a readable JSON file, got '" << a.switching
              << "'\n";
    return 1;
  }
  if (!a.probs.empty() && a.switching != "jump") {
    std::cerr << "samid: --probs only applies to --switching jump\n";
    return 1;
  }

  samid_dataset* raw_data = nullptr;
  const samid_status s =
      by_snr ? samid_simulate_snr(model.get(), switching.c_str(), a.n, a.snr, a.ratio, a.seed, &raw_data)
             : samid_simulate_sigma(model.get(), switching.c_str(), a.n, a.sigma_x, a.sigma_y, a.seed, &raw_data);
  if (int rc = report(s, "simulating")) return rc;
  Owned<samid_dataset> data(raw_data);
  return report(samid_dataset_save_csv(data.get(), a.out.c_str(), 1), "writing dataset");
}

struct IdentifyArgs {
  std::string data;
  int k = 2;
  std::string method = "scs";
  std::uint64_t seed = 0;
  std::string out;
  std::string diagnostics;
  std::string labels_out;
  int restarts = 10;
  int c = 0;
  std::string weight_mode = "none";
  double diag_threshold = 0.0;
  double sigma_ratio = -1.0;
};

int run_identify(const IdentifyArgs& a) {
  samid_identify_options opts;
  samid_identify_options_init(&opts);
  if (int rc = report(samid_method_from_name(a.method.c_str(), &opts.method), "parsing --method")) return rc;
  if (a.weight_mode == "none") {
    opts.weight_mode = SAMID_WEIGHT_NONE;
  } else if (a.weight_mode == "adjacency_diagonal" || a.weight_mode == "adjacency-diagonal") {
    opts.weight_mode = SAMID_WEIGHT_ADJACENCY_DIAGONAL;
  } else {
    std::cerr << "samid: --weight-mode must be none or adjacency_diagonal\n";
    return 1;
  }
  opts.num_submodels = a.k;
  opts.seed = a.seed;
  opts.restarts = a.restarts;
  opts.neighborhood = a.c;
  opts.diag_threshold = a.diag_threshold;
  opts.sigma_ratio = a.sigma_ratio;

  samid_dataset* raw_data = nullptr;
  if (int rc = report(samid_dataset_load_csv(a.data.c_str(), &raw_data), "reading data")) return rc;
  Owned<samid_dataset> data(raw_data);

  samid_identification* raw_result = nullptr;
  if (int rc = report(samid_identify(data.get(), &opts, &raw_result), "identification")) return rc;
  Owned<samid_identification> result(raw_result);

  char* raw = nullptr;
  if (int rc = report(samid_identification_model_json(result.get(), &raw), "serializing estimates")) return rc;
  Owned<char> model_json(raw);
  if (int rc = report(samid_identification_diagnostics_json(result.get(), &raw), "serializing diagnostics")) {
    return rc;
  }
  Owned<char> diag_json(raw);

  std::string diag_path = a.diagnostics;
  if (diag_path.empty()) {
    std::filesystem::path p(a.out);
    diag_path = (p.parent_path() / (p.stem().string() + ".diagnostics.json")).string();
  }
  if (!write_file(a.out, std::string(model_json.get()) + "\n")) return 1;
  if (!write_file(diag_path, std::string(diag_json.get()) + "\n")) return 1;

  if (!a.labels_out.empty()) {
    std::vector<int> labels(samid_identification_size(result.get()));
    samid_identification_labels(result.get(), labels.data());
    std::string text = "label\n";
    for (int l : labels) text += std::to_string(l) + "\n";
    if (!write_file(a.labels_out, text)) return 1;
  }
  return 0;
}

struct SweepArgs {
  std::string config;
  std::string out;
  unsigned threads = 0;
  bool quiet = false;
};

void print_progress(std::size_t done, std::size_t total, void*) {
  std::fprintf(stderr, "\rsweep: %zu/%zu runs", done, total);
  if (done == total) std::fputc('\n', stderr);
  std::fflush(stderr);
}

int run_sweep(const SweepArgs& a) {
  samid_sweep_result* raw = nullptr;
  const samid_status s =
      samid_sweep_run_file(a.config.c_str(), a.threads, a.quiet ? nullptr : print_progress, nullptr, &raw);
  if (int rc = report(s, "sweep")) return rc;
  Owned<samid_sweep_result> result(raw);
  char* csv = nullptr;
  if (int rc = report(samid_sweep_csv(result.get(), &csv), "formatting results")) return rc;
  Owned<char> text(csv);
  return write_file(a.out, text.get()) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Identification of switched affine models from unlabeled input-output data"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(samid_version()));

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Simulate noisy observations of a model");
  simulate->add_option("--model", sim.model, "Model JSON file")->required();
  simulate->add_option("--switching", sim.switching, "piecewise, jump or a switching JSON file")
      ->capture_default_str();
  simulate->add_option("--probs", sim.probs, "Jump probabilities, one per submodel");
  simulate->add_option("--n", sim.n, "Number of observations")->required()->check(CLI::PositiveNumber);
  auto* snr_opt = simulate->add_option("--snr", sim.snr, "Target SNR in dB");
  auto* sx_opt = simulate->add_option("--sigma-x", sim.sigma_x, "Input noise standard deviation")
                     ->check(CLI::NonNegativeNumber);
  auto* sy_opt = simulate->add_option("--sigma-y", sim.sigma_y, "Output noise standard deviation")
                     ->check(CLI::NonNegativeNumber);
  simulate->add_option("--ratio", sim.ratio, "sigma_x / sigma_y when --snr is given")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  simulate->add_option("--seed", sim.seed, "Random seed")->capture_default_str();
  simulate->add_option("--out", sim.out, "Output CSV")->required();
  snr_opt->excludes(sx_opt)->excludes(sy_opt);

  IdentifyArgs id;
  auto* identify = app.add_subcommand("identify", "Estimate submodel parameters from a dataset");
  identify->add_option("--data", id.data, "Dataset CSV")->required();
  identify->add_option("--k", id.k, "Number of submodels")->required()->check(CLI::PositiveNumber);
  identify->add_option("--method", id.method, "scs, cml, feature-kmeans or gpca-lite")->capture_default_str();
  identify->add_option("--seed", id.seed, "k-means seed")->capture_default_str();
  identify->add_option("--out", id.out, "Output model JSON")->required();
  identify->add_option("--diagnostics", id.diagnostics, "Diagnostics JSON (default <out>.diagnostics.json)");
  identify->add_option("--labels-out", id.labels_out, "Write the estimated labels as CSV");
  identify->add_option("--restarts", id.restarts, "k-means restarts")->capture_default_str()->check(
      CLI::PositiveNumber);
  identify->add_option("--c", id.c, "feature-kmeans neighbourhood (default 7 for Nx = 1, else 10)");
  identify->add_option("--weight-mode", id.weight_mode, "none or adjacency_diagonal")->capture_default_str();
  identify->add_option("--diag-threshold", id.diag_threshold, "Relative adjacency-diagonal cutoff in [0, 1)")
      ->capture_default_str();
  identify->add_option("--sigma-ratio", id.sigma_ratio, "cml: known sigma_x / sigma_y");

  SweepArgs sw;
  auto* sweep = app.add_subcommand("sweep", "Run a Monte Carlo SNR sweep");
  sweep->add_option("--config", sw.config, "Experiment JSON")->required();
  sweep->add_option("--out", sw.out, "Results CSV")->required();
  sweep->add_option("--threads", sw.threads, "Worker threads (default: SAMID_THREADS or all cores)");
  sweep->add_flag("--quiet", sw.quiet, "No progress output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  if (simulate->parsed()) {
    const bool by_snr = snr_opt->count() > 0;
    if (!by_snr && sx_opt->count() == 0 && sy_opt->count() == 0) {
      std::cerr << "samid: simulate needs --snr or --sigma-x/--sigma-y\n";
      return 1;
    }
    return run_simulate(sim, by_snr);
  }
  if (identify->parsed()) return run_identify(id);
  return run_sweep(sw);
}
