#pragma once

#include "mfbf/regressor.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>

namespace mfbf {

// Checkpoint schema (JSON object, keys in this order):
//   format        "mfbf-mlp-v1"
//   layer_sizes   [input, hidden..., 1]
//   activation    "relu"
//   dropout       hidden-layer dropout rate
//   seed          network seed (fixes the Monte-Carlo dropout masks)
//   target_scale  metres per unit of network output
//   encoder       {lower, upper, angle_dims, raw_angles, action_count}
//   weights       per layer, out x in, flattened row-major
//   biases        per layer
//   metadata      free-form string map
// Floats are written in shortest round-trip form, so a reload is bit-exact.

void write_checkpoint(const MlpRegressor& model, std::ostream& out,
                      const std::map<std::string, std::string>& metadata = {});
MlpRegressor read_checkpoint(std::istream& in);

void save_checkpoint(const MlpRegressor& model, const std::filesystem::path& path,
                     const std::map<std::string, std::string>& metadata = {});
MlpRegressor load_checkpoint(const std::filesystem::path& path);

} // namespace mfbf
