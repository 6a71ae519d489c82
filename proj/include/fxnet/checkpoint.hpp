#pragma once

// Versioned JSON checkpoints.
//
// Weights are one flat array in the model's canonical enumeration. Numbers
// are written in shortest round-trip decimal form, so reloading restores
// every weight bit for bit.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>

#include <json.hpp>

#include "fxnet/elman.hpp"
#include "fxnet/errors.hpp"
#include "fxnet/mlp.hpp"
#include "fxnet/preprocess.hpp"

namespace fxnet {

inline constexpr int kCheckpointVersion = 1;
inline constexpr std::string_view kCheckpointFormat = "fxnet-checkpoint";

struct CheckpointMeta {
  std::uint64_t seed = 0;
  std::string config_hash;
  std::string trainer;
  std::size_t window = 20;
  double split_ratio = 0.8;
  /// Rows used to warm the recurrent state before scoring (elman only).
  std::size_t warmup = 0;

  bool operator==(const CheckpointMeta&) const = default;
};

struct Checkpoint {
  std::variant<MlpNetwork, ElmanNetwork> model;
  NormalizationParams normalization;
  CheckpointMeta meta;

  bool is_elman() const noexcept { return std::holds_alternative<ElmanNetwork>(model); }
  std::string_view kind() const noexcept { return is_elman() ? "elman" : "ff"; }
};

/// 64-bit FNV-1a, used for config fingerprints.
inline std::string fnv1a_hex(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline nlohmann::json checkpoint_to_json(const Checkpoint& ck) {
  using nlohmann::json;
  json j;
  j["format"] = kCheckpointFormat;
  j["version"] = kCheckpointVersion;
  j["model"] = ck.kind();
  if (const auto* mlp = std::get_if<MlpNetwork>(&ck.model)) {
    const auto s = mlp->shape();
    j["layer_sizes"] = {s.inputs, s.hidden, s.outputs};
    j["weights"] = mlp->flatten();
  } else {
    const auto& elman = std::get<ElmanNetwork>(ck.model);
    const auto s = elman.shape();
    j["layer_sizes"] = {s.inputs, s.hidden, 1};
    j["weights"] = elman.flatten();
  }
  j["normalization"] = {{"mean", ck.normalization.mean},
                        {"std", ck.normalization.std},
                        {"mode", to_string(ck.normalization.mode)}};
  j["metadata"] = {{"seed", ck.meta.seed},         {"config_hash", ck.meta.config_hash},
                   {"trainer", ck.meta.trainer},   {"window", ck.meta.window},
                   {"split_ratio", ck.meta.split_ratio}, {"warmup", ck.meta.warmup}};
  return j;
}

inline Checkpoint checkpoint_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != kCheckpointFormat) throw CorruptError("not an fxnet checkpoint");
    const int version = j.at("version").get<int>();
    if (version > kCheckpointVersion) {
      throw VersionError("checkpoint version " + std::to_string(version) + " is newer than supported version " +
                         std::to_string(kCheckpointVersion));
    }
    if (version < 1) throw CorruptError("invalid checkpoint version");

    const auto sizes = j.at("layer_sizes").get<std::vector<std::size_t>>();
    const auto weights = j.at("weights").get<std::vector<double>>();
    if (sizes.size() != 3 || sizes[0] < 1 || sizes[1] < 1 || sizes[2] < 1) {
      throw CorruptError("layer_sizes must hold three positive counts");
    }
    if (!all_finite(weights)) throw CorruptError("non-finite weight");

    Checkpoint ck;
    const auto kind = j.at("model").get<std::string>();
    if (kind == "ff") {
      MlpNetwork net(MlpShape{sizes[0], sizes[1], sizes[2]});
      if (weights.size() != net.parameter_count()) throw CorruptError("weight count does not match layer sizes");
      net.assign(weights);
      ck.model = std::move(net);
    } else if (kind == "elman") {
      if (sizes[2] != 1) throw CorruptError("elman networks have exactly one output");
      ElmanNetwork net(ElmanShape{sizes[0], sizes[1]});
      if (weights.size() != net.parameter_count()) throw CorruptError("weight count does not match layer sizes");
      net.assign(weights);
      ck.model = std::move(net);
    } else {
      throw CorruptError("unknown model kind '" + kind + "'");
    }

    const auto& norm = j.at("normalization");
    ck.normalization.mean = norm.at("mean").get<double>();
    ck.normalization.std = norm.at("std").get<double>();
    ck.normalization.mode = parse_return_mode(norm.at("mode").get<std::string>());
    if (!(ck.normalization.std > 0.0)) throw CorruptError("normalization std must be positive");

    const auto& meta = j.at("metadata");
    ck.meta.seed = meta.at("seed").get<std::uint64_t>();
    ck.meta.config_hash = meta.at("config_hash").get<std::string>();
    ck.meta.trainer = meta.at("trainer").get<std::string>();
    ck.meta.window = meta.at("window").get<std::size_t>();
    ck.meta.split_ratio = meta.at("split_ratio").get<double>();
    ck.meta.warmup = meta.at("warmup").get<std::size_t>();
    if (ck.meta.window != sizes[0]) throw CorruptError("window does not match the input layer");
    return ck;
  } catch (const nlohmann::json::exception& e) {
    throw CorruptError(std::string("checkpoint schema: ") + e.what());
  } catch (const DomainError& e) {
    throw CorruptError(std::string("checkpoint value: ") + e.what());
  }
}

inline void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << checkpoint_to_json(ck).dump(2) << '\n';
  out.flush();
  if (!out) throw IoError("write failure on '" + path.string() + "'");
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("read failure on '" + path.string() + "'");
  const auto j = nlohmann::json::parse(buf.str(), nullptr, false);
  if (j.is_discarded()) throw CorruptError("'" + path.string() + "' is not valid JSON (truncated?)");
  return checkpoint_from_json(j);
}

}  // namespace fxnet
