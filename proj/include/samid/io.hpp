#pragma once

// File formats.
//
// Dataset CSV: header `x1,..,xNx,y1,..,yNy[,label]`, one row per observation.
// Doubles are written with the shortest decimal form that round-trips.
//
// Model JSON: {"K": k, "Nx": nx, "Ny": ny,
//              "submodels": [{"theta": [row-major Ny*Nx], "gamma": [Ny]}, ...]}
//
// Switching JSON: {"mode": "piecewise", "regions": [[{"normal": [..], "offset": b,
//                  "strict": false}, ...], ...]}
//               | {"mode": "jump", "probabilities": [..]}
//               | {"mode": "explicit", "labels": [..]}

#include "samid/model_sim.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <iosfwd>
#include <string>

namespace samid::io {

using nlohmann::json;

std::string format_double(double v);

void write_dataset_csv(std::ostream& out, const Dataset& data, bool with_labels = true);
Dataset read_dataset_csv(std::istream& in);
Dataset load_dataset_csv(const std::filesystem::path& path);
void save_dataset_csv(const std::filesystem::path& path, const Dataset& data, bool with_labels = true);

json model_to_json(const SwitchedAffineModel& model);
SwitchedAffineModel model_from_json(const json& j);
SwitchedAffineModel load_model(const std::filesystem::path& path);

/// Piecewise without "regions" falls back to sign_split(input_dim); jump
/// without "probabilities" is uniform over num_submodels.
SwitchingSpec switching_from_json(const json& j, int num_submodels, int input_dim);
json switching_to_json(const SwitchingSpec& spec);

/// Parses a file, reporting the path on failure.
json load_json(const std::filesystem::path& path);

}  // namespace samid::io
