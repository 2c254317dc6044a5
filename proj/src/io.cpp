#include "samid/io.hpp"

#include "samid/error.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string_view>

namespace samid::io {
namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    auto field = line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r')) {
      field.remove_suffix(1);
    }
    fields.push_back(field);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

double parse_double(std::string_view s, std::size_t line_no) {
  double v = 0.0;
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw InvalidInput("line " + std::to_string(line_no) + ": cannot parse number '" + std::string(s) + "'");
  }
  return v;
}

int parse_int(std::string_view s, std::size_t line_no) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw InvalidInput("line " + std::to_string(line_no) + ": cannot parse label '" + std::string(s) + "'");
  }
  return v;
}

std::vector<double> number_array(const json& j, const char* what) {
  if (!j.is_array()) throw InvalidInput(std::string(what) + " must be an array of numbers");
  std::vector<double> out;
  for (const auto& v : j) {
    if (!v.is_number()) throw InvalidInput(std::string(what) + " must be an array of numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

void reject_unknown_keys(const json& j, std::initializer_list<std::string_view> allowed, const char* what) {
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (auto a : allowed) known = known || key == a;
    if (!known) throw InvalidInput(std::string("unknown key '") + key + "' in " + what);
  }
}

int positive_int(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number_integer() || j.at(key).get<int>() < 1) {
    throw InvalidInput(std::string("model field '") + key + "' must be a positive integer");
  }
  return j.at(key).get<int>();
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw Error("failed to format a double");
  return std::string(buf, ptr);
}

void write_dataset_csv(std::ostream& out, const Dataset& data, bool with_labels) {
  data.validate();
  with_labels = with_labels && data.labels.has_value();
  for (int j = 0; j < data.input_dim(); ++j) out << (j ? "," : "") << 'x' << j + 1;
  for (int j = 0; j < data.output_dim(); ++j) out << ",y" << j + 1;
  if (with_labels) out << ",label";
  out << '\n';
  for (Index n = 0; n < data.size(); ++n) {
    for (int j = 0; j < data.input_dim(); ++j) out << (j ? "," : "") << format_double(data.X(j, n));
    for (int j = 0; j < data.output_dim(); ++j) out << ',' << format_double(data.Y(j, n));
    if (with_labels) out << ',' << (*data.labels)[n];
    out << '\n';
  }
}

Dataset read_dataset_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") != std::string::npos) break;
  }
  if (line_no == 0 || line.find_first_not_of(" \t\r") == std::string::npos) {
    throw InvalidInput("dataset CSV is empty");
  }
  const auto header = split_fields(line);
  int nx = 0, ny = 0;
  bool has_label = false;
  for (std::size_t i = 0; i < header.size(); ++i) {
    const auto h = header[i];
    if (has_label) throw InvalidInput("'label' must be the last CSV column");
    if (h == "label") {
      has_label = true;
    } else if (ny == 0 && h == "x" + std::to_string(nx + 1)) {
      ++nx;
    } else if (h == "y" + std::to_string(ny + 1)) {
      ++ny;
    } else {
      throw InvalidInput("unexpected CSV header field '" + std::string(h) + "'");
    }
  }
  if (nx < 1 || ny < 1) throw InvalidInput("CSV header needs x1.. and y1.. columns");

  std::vector<double> values;
  Labels labels;
  Index rows = 0;
  const std::size_t width = header.size();
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = split_fields(line);
    if (fields.size() != width) {
      throw InvalidInput("line " + std::to_string(line_no) + ": expected " + std::to_string(width) + " fields");
    }
    for (int j = 0; j < nx + ny; ++j) values.push_back(parse_double(fields[j], line_no));
    if (has_label) labels.push_back(parse_int(fields.back(), line_no));
    ++rows;
  }
  if (rows == 0) throw InvalidInput("dataset CSV has no observations");

  Dataset data;
  data.X.resize(nx, rows);
  data.Y.resize(ny, rows);
  for (Index n = 0; n < rows; ++n) {
    const double* row = values.data() + n * (nx + ny);
    for (int j = 0; j < nx; ++j) data.X(j, n) = row[j];
    for (int j = 0; j < ny; ++j) data.Y(j, n) = row[nx + j];
  }
  if (has_label) data.labels = std::move(labels);
  data.validate();
  return data;
}

Dataset load_dataset_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return read_dataset_csv(in);
  } catch (const InvalidInput& e) {
    throw InvalidInput(path.string() + ": " + e.what());
  }
}

void save_dataset_csv(const std::filesystem::path& path, const Dataset& data, bool with_labels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  write_dataset_csv(out, data, with_labels);
  if (!out) throw IoError("error writing " + path.string());
}

json model_to_json(const SwitchedAffineModel& model) {
  json subs = json::array();
  for (const auto& s : model.submodels()) {
    json theta = json::array();
    for (Index r = 0; r < s.theta.rows(); ++r) {
      for (Index c = 0; c < s.theta.cols(); ++c) theta.push_back(s.theta(r, c));
    }
    json gamma = json::array();
    for (Index r = 0; r < s.gamma.size(); ++r) gamma.push_back(s.gamma(r));
    subs.push_back({{"theta", theta}, {"gamma", gamma}});
  }
  return {{"K", model.num_submodels()},
          {"Nx", model.input_dim()},
          {"Ny", model.output_dim()},
          {"submodels", subs}};
}

SwitchedAffineModel model_from_json(const json& j) {
  if (!j.is_object()) throw InvalidInput("model JSON must be an object");
  reject_unknown_keys(j, {"K", "Nx", "Ny", "submodels"}, "model");
  const int k = positive_int(j, "K");
  const int nx = positive_int(j, "Nx");
  const int ny = positive_int(j, "Ny");
  if (!j.contains("submodels") || !j.at("submodels").is_array() ||
      static_cast<int>(j.at("submodels").size()) != k) {
    throw InvalidInput("model needs a 'submodels' array with K entries");
  }
  std::vector<Submodel> subs;
  for (const auto& s : j.at("submodels")) {
    if (!s.is_object()) throw InvalidInput("submodel must be an object");
    reject_unknown_keys(s, {"theta", "gamma"}, "submodel");
    if (!s.contains("theta") || !s.contains("gamma")) throw InvalidInput("submodel needs 'theta' and 'gamma'");
    const auto theta = number_array(s.at("theta"), "theta");
    const auto gamma = number_array(s.at("gamma"), "gamma");
    if (static_cast<int>(theta.size()) != nx * ny) throw InvalidInput("theta must have Ny*Nx entries");
    if (static_cast<int>(gamma.size()) != ny) throw InvalidInput("gamma must have Ny entries");
    Submodel sub{MatrixXd(ny, nx), VectorXd(ny)};
    for (int r = 0; r < ny; ++r) {
      for (int c = 0; c < nx; ++c) sub.theta(r, c) = theta[r * nx + c];
      sub.gamma(r) = gamma[r];
    }
    subs.push_back(std::move(sub));
  }
  return SwitchedAffineModel(std::move(subs));
}

json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw InvalidInput(path.string() + ": " + e.what());
  }
}

SwitchedAffineModel load_model(const std::filesystem::path& path) {
  try {
    return model_from_json(load_json(path));
  } catch (const InvalidInput& e) {
    throw InvalidInput(path.string() + ": " + e.what());
  }
}

SwitchingSpec switching_from_json(const json& j, int num_submodels, int input_dim) {
  if (!j.is_object() || !j.contains("mode") || !j.at("mode").is_string()) {
    throw InvalidInput("switching spec needs a string 'mode'");
  }
  const auto mode = j.at("mode").get<std::string>();
  if (mode == "piecewise") {
    reject_unknown_keys(j, {"mode", "regions"}, "piecewise switching");
    if (!j.contains("regions")) return sign_split(input_dim);
    PiecewiseSwitching spec;
    const auto& regions = j.at("regions");
    if (!regions.is_array()) throw InvalidInput("'regions' must be an array");
    for (const auto& r : regions) {
      if (!r.is_array()) throw InvalidInput("each region must be an array of half-spaces");
      Region region;
      for (const auto& h : r) {
        if (!h.is_object() || !h.contains("normal")) throw InvalidInput("half-space needs a 'normal'");
        reject_unknown_keys(h, {"normal", "offset", "strict"}, "half-space");
        const auto normal = number_array(h.at("normal"), "normal");
        if (static_cast<int>(normal.size()) != input_dim) {
          throw InvalidInput("half-space normal must have Nx entries");
        }
        HalfSpace hs;
        hs.normal = Eigen::Map<const VectorXd>(normal.data(), input_dim);
        if (h.contains("offset")) {
          if (!h.at("offset").is_number()) throw InvalidInput("'offset' must be a number");
          hs.offset = h.at("offset").get<double>();
        }
        if (h.contains("strict")) {
          if (!h.at("strict").is_boolean()) throw InvalidInput("'strict' must be a boolean");
          hs.strict = h.at("strict").get<bool>();
        }
        region.constraints.push_back(std::move(hs));
      }
      spec.regions.push_back(std::move(region));
    }
    return spec;
  }
  if (mode == "jump") {
    reject_unknown_keys(j, {"mode", "probabilities"}, "jump switching");
    if (!j.contains("probabilities")) {
      return JumpSwitching{std::vector<double>(num_submodels, 1.0 / num_submodels)};
    }
    return JumpSwitching{number_array(j.at("probabilities"), "probabilities")};
  }
  if (mode == "explicit") {
    reject_unknown_keys(j, {"mode", "labels"}, "explicit switching");
    if (!j.contains("labels") || !j.at("labels").is_array()) {
      throw InvalidInput("explicit switching needs a 'labels' array");
    }
    ExplicitSwitching spec;
    for (const auto& l : j.at("labels")) {
      if (!l.is_number_integer()) throw InvalidInput("labels must be integers");
      spec.labels.push_back(l.get<int>());
    }
    return spec;
  }
  throw InvalidInput("unknown switching mode '" + mode + "'");
}

json switching_to_json(const SwitchingSpec& spec) {
  if (const auto* pw = std::get_if<PiecewiseSwitching>(&spec)) {
    json regions = json::array();
    for (const auto& r : pw->regions) {
      json hs = json::array();
      for (const auto& h : r.constraints) {
        hs.push_back({{"normal", std::vector<double>(h.normal.data(), h.normal.data() + h.normal.size())},
                      {"offset", h.offset},
                      {"strict", h.strict}});
      }
      regions.push_back(hs);
    }
    return {{"mode", "piecewise"}, {"regions", regions}};
  }
  if (const auto* jump = std::get_if<JumpSwitching>(&spec)) {
    return {{"mode", "jump"}, {"probabilities", jump->probabilities}};
  }
  return {{"mode", "explicit"}, {"labels", std::get<ExplicitSwitching>(spec).labels}};
}

}  // namespace samid::io
