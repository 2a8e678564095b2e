#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "flowbound/kinematics.hpp"
#include "flowbound/trees.hpp"

namespace flowbound::io {

inline constexpr const char* kVersion = "0.1.0";

nlohmann::json load_json(const std::string& path);
void save_json(const std::string& path, const nlohmann::json& j);

// {"n_ext": N, "p": [[x,y,z,w] x (N-1)]}; the writer adds the derived "p0".
MomentumConfig momentum_config_from_json(const nlohmann::json& j);
nlohmann::json momentum_config_to_json(const MomentumConfig& cfg);

// {"n_ext": N, "splits": [{"side": [labels...], "rho": w}, ...]} with sides
// sorted; a side listing label 0 is replaced by its complement.
WeightedTree tree_from_json(const nlohmann::json& j);
nlohmann::json tree_to_json(const WeightedTree& tree);

// Order-independent content hash of a JSON document (hex string).
std::string stable_hash(const nlohmann::json& j);

// Reproducibility record written next to every command's outputs.
nlohmann::json make_manifest(const std::string& command, const nlohmann::json& config,
                             std::uint64_t seed);

}  // namespace flowbound::io
