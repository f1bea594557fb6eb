#include "modflow/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "modflow/errors.hpp"

namespace modflow {

namespace {

using nlohmann::json;

// CRC-64/ECMA-182, polynomial 0x42F0E1EBA9EA3693.
const std::array<std::uint64_t, 256>& crc64_table() {
  static const std::array<std::uint64_t, 256> table = [] {
    std::array<std::uint64_t, 256> t{};
    for (std::uint64_t i = 0; i < 256; ++i) {
      std::uint64_t crc = i << 56;
      for (int b = 0; b < 8; ++b) {
        crc = (crc & 0x8000000000000000ull) ? (crc << 1) ^ 0x42F0E1EBA9EA3693ull
                                            : crc << 1;
      }
      t[i] = crc;
    }
    return t;
  }();
  return table;
}

std::uint64_t crc64(const std::string& data) {
  std::uint64_t crc = 0;
  for (unsigned char c : data) {
    crc = crc64_table()[((crc >> 56) ^ c) & 0xFF] ^ (crc << 8);
  }
  return crc;
}

static_assert(std::endian::native == std::endian::little,
              "checkpoint writer assumes a little-endian host");

void append_u32(std::string& out, std::uint32_t v) {
  out.append(reinterpret_cast<const char*>(&v), sizeof(v));
}

void append_u64(std::string& out, std::uint64_t v) {
  out.append(reinterpret_cast<const char*>(&v), sizeof(v));
}

void append_f64_array(std::string& out, const std::vector<double>& v) {
  out.append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(double));
}

json alphabet_to_json(const AtomAlphabet& a) {
  json j;
  j["mode"] = a.mode == AlphabetMode::atoms ? "atoms" : "clusters";
  j["labels"] = a.labels;
  j["valence"] = a.max_valence;
  return j;
}

AtomAlphabet alphabet_from_json(const json& j) {
  AtomAlphabet a;
  a.mode = j.at("mode").get<std::string>() == "atoms" ? AlphabetMode::atoms
                                                      : AlphabetMode::clusters;
  a.labels = j.at("labels").get<std::vector<std::string>>();
  a.max_valence = j.at("valence").get<std::vector<int>>();
  a.validate();
  return a;
}

json vocab_to_json(const ClusterVocabulary& v) {
  json arr = json::array();
  for (int i = 0; i < v.size(); ++i) {
    json p;
    p["symbols"] = v.patterns[i].symbols;
    p["orders"] = v.patterns[i].orders;
    p["count"] = v.counts[i];
    arr.push_back(p);
  }
  return arr;
}

ClusterVocabulary vocab_from_json(const json& arr) {
  ClusterVocabulary v;
  for (const auto& p : arr) {
    RingPattern pat;
    pat.symbols = p.at("symbols").get<std::vector<std::string>>();
    pat.orders = p.at("orders").get<std::vector<int>>();
    v.patterns.push_back(std::move(pat));
    v.counts.push_back(p.at("count").get<long>());
  }
  return v;
}

}  // namespace

void save_checkpoint(const ModFlowModel& model, const std::string& path,
                     const std::string& config_echo) {
  json meta;
  meta["alphabet"] = alphabet_to_json(model.alphabet);
  meta["vocab"] = vocab_to_json(model.vocab);
  meta["eps"] = model.eps;
  meta["coord_dim"] = model.coord_dim;
  meta["coord_flow"] = model.coord_flow;
  meta["label_dim"] = model.params.label_dim;
  meta["hidden_dim"] = model.params.hidden_dim;
  meta["bond_arity"] = model.params.bond_arity;
  meta["solver"] = {{"rtol", model.solver.rtol},
                    {"atol", model.solver.atol},
                    {"initial_step", model.solver.initial_step},
                    {"max_steps", model.solver.max_steps},
                    {"t_start", model.solver.t_start},
                    {"t_end", model.solver.t_end}};
  meta["adam_step"] = model.adam_step;
  meta["trained_epochs"] = model.trained_epochs;
  meta["config_echo"] = config_echo;
  meta["arrays"] = {{{"name", "params"}, {"len", model.params.values.size()}},
                    {{"name", "adam_m"}, {"len", model.adam_m.size()}},
                    {{"name", "adam_v"}, {"len", model.adam_v.size()}}};
  const std::string meta_text = meta.dump();

  std::string blob;
  blob.reserve(64 + meta_text.size() + 3 * model.params.values.size() * sizeof(double));
  blob.append("MDFL", 4);
  append_u32(blob, kCheckpointVersion);
  append_u64(blob, meta_text.size());
  blob.append(meta_text);
  append_f64_array(blob, model.params.values);
  append_f64_array(blob, model.adam_m);
  append_f64_array(blob, model.adam_v);
  append_u64(blob, crc64(blob));

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(ErrorCode::io, "cannot open checkpoint file '" + path + "' for writing");
  out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  if (!out) raise(ErrorCode::io, "failed writing checkpoint '" + path + "'");
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::io, "cannot open checkpoint file '" + path + "'");
  std::string blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (blob.size() < 4 + 4 + 8 + 8) {
    raise(ErrorCode::checksum_mismatch, "checkpoint file truncated");
  }
  if (blob.compare(0, 4, "MDFL") != 0) {
    raise(ErrorCode::version_mismatch, "not a modflow checkpoint (bad magic)");
  }
  std::uint32_t version = 0;
  std::memcpy(&version, blob.data() + 4, sizeof(version));
  if (version != kCheckpointVersion) {
    raise(ErrorCode::version_mismatch,
          "checkpoint version " + std::to_string(version) + " unsupported (expected " +
              std::to_string(kCheckpointVersion) + ")");
  }

  std::uint64_t stored_crc = 0;
  std::memcpy(&stored_crc, blob.data() + blob.size() - 8, sizeof(stored_crc));
  const std::string body = blob.substr(0, blob.size() - 8);
  if (crc64(body) != stored_crc) {
    raise(ErrorCode::checksum_mismatch, "checkpoint CRC mismatch");
  }

  std::uint64_t meta_len = 0;
  std::memcpy(&meta_len, blob.data() + 8, sizeof(meta_len));
  if (16 + meta_len > body.size()) {
    raise(ErrorCode::checksum_mismatch, "checkpoint metadata length out of range");
  }
  json meta;
  try {
    meta = json::parse(body.substr(16, meta_len));
  } catch (const json::exception& e) {
    raise(ErrorCode::checksum_mismatch, std::string("checkpoint metadata unreadable: ") + e.what());
  }

  LoadedCheckpoint loaded;
  ModFlowModel& model = loaded.model;
  model.alphabet = alphabet_from_json(meta.at("alphabet"));
  model.vocab = vocab_from_json(meta.at("vocab"));
  model.eps = meta.at("eps").get<double>();
  model.coord_dim = meta.at("coord_dim").get<int>();
  model.coord_flow = meta.at("coord_flow").get<bool>();
  model.params.label_dim = meta.at("label_dim").get<int>();
  model.params.hidden_dim = meta.at("hidden_dim").get<int>();
  model.params.bond_arity = meta.at("bond_arity").get<int>();
  const json& solver = meta.at("solver");
  model.solver.rtol = solver.at("rtol").get<double>();
  model.solver.atol = solver.at("atol").get<double>();
  model.solver.initial_step = solver.at("initial_step").get<double>();
  model.solver.max_steps = solver.at("max_steps").get<long>();
  model.solver.t_start = solver.at("t_start").get<double>();
  model.solver.t_end = solver.at("t_end").get<double>();
  model.adam_step = meta.at("adam_step").get<long>();
  model.trained_epochs = meta.at("trained_epochs").get<long>();
  loaded.config_echo = meta.at("config_echo").get<std::string>();

  std::size_t offset = 16 + meta_len;
  auto read_array = [&](std::vector<double>& dst, std::size_t len) {
    if (offset + len * sizeof(double) > body.size()) {
      raise(ErrorCode::checksum_mismatch, "checkpoint arrays truncated");
    }
    dst.resize(len);
    std::memcpy(dst.data(), body.data() + offset, len * sizeof(double));
    offset += len * sizeof(double);
  };
  const json& arrays = meta.at("arrays");
  for (const auto& arr : arrays) {
    const std::string name = arr.at("name").get<std::string>();
    const std::size_t len = arr.at("len").get<std::size_t>();
    if (name == "params") {
      read_array(model.params.values, len);
    } else if (name == "adam_m") {
      read_array(model.adam_m, len);
    } else if (name == "adam_v") {
      read_array(model.adam_v, len);
    } else {
      raise(ErrorCode::version_mismatch, "unknown checkpoint array '" + name + "'");
    }
  }
  if (model.params.values.size() !=
      EgnnParams::count_for(model.params.label_dim, model.params.hidden_dim,
                            model.params.bond_arity)) {
    raise(ErrorCode::checksum_mismatch, "parameter array length inconsistent with dims");
  }
  return loaded;
}

}  // namespace modflow
