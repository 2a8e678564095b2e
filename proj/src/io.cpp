#include "flowbound/io.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace flowbound::io {

using nlohmann::json;

json load_json(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  json j;
  is >> j;
  return j;
}

void save_json(const std::string& path, const json& j) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << j.dump(2) << '\n';
}

MomentumConfig momentum_config_from_json(const json& j) {
  if (!j.contains("n_ext") || !j.contains("p"))
    throw std::runtime_error("momentum config needs n_ext and p");
  const int n = j.at("n_ext").get<int>();
  std::vector<Momentum4> ext;
  for (const auto& row : j.at("p")) {
    if (!row.is_array() || row.size() != 4)
      throw std::runtime_error("momentum rows must have four components");
    ext.emplace_back(row[0].get<double>(), row[1].get<double>(), row[2].get<double>(),
                     row[3].get<double>());
  }
  return MomentumConfig(n, std::move(ext));
}

json momentum_config_to_json(const MomentumConfig& cfg) {
  json j;
  j["n_ext"] = cfg.n_ext();
  json rows = json::array();
  for (const Momentum4& p : cfg.external()) rows.push_back({p[0], p[1], p[2], p[3]});
  j["p"] = rows;
  const Momentum4 p0 = cfg.p0();
  j["p0"] = {p0[0], p0[1], p0[2], p0[3]};
  return j;
}

WeightedTree tree_from_json(const json& j) {
  WeightedTree t;
  t.n_ext = j.at("n_ext").get<int>();
  if (t.n_ext < 2 || t.n_ext > 16) throw std::runtime_error("n_ext out of range");
  for (const auto& s : j.at("splits")) {
    LabelMask side = 0;
    for (const auto& lbl : s.at("side")) {
      const int e = lbl.get<int>();
      if (e < 0 || e >= t.n_ext) throw std::runtime_error("side label out of range");
      side |= static_cast<LabelMask>(1u << e);
    }
    if (side & 1u) side = static_cast<LabelMask>(~side & ((1u << t.n_ext) - 1u));
    t.splits.push_back({side, s.at("rho").get<int>()});
  }
  t.canonicalize();
  return t;
}

json tree_to_json(const WeightedTree& tree) {
  json j;
  j["n_ext"] = tree.n_ext;
  json splits = json::array();
  for (const Split& s : tree.splits) {
    json labels = json::array();
    for (int e = 0; e < tree.n_ext; ++e)
      if (s.side >> e & 1u) labels.push_back(e);
    splits.push_back({{"side", labels}, {"rho", s.rho}});
  }
  j["splits"] = splits;
  return j;
}

std::string stable_hash(const json& j) {
  const std::string dump = j.dump();  // sorted keys: nlohmann objects are ordered maps
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : dump) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

json make_manifest(const std::string& command, const json& config, std::uint64_t seed) {
  json m;
  m["command"] = command;
  m["config"] = config;
  m["config_hash"] = stable_hash(config);
  m["seed"] = seed;
  m["versions"] = {{"flowbound", kVersion},
                   {"json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                   {"compiler", __VERSION__}};
  return m;
}

}  // namespace flowbound::io
