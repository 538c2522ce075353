// Checkpoint file layout:
//
//   <JSON header on one line>\n<payload>
//
// The header carries the format version, hyperparameters, training config,
// final metrics, metrics history and a tensor manifest (name, shape, byte
// offset into the payload). The payload is raw little-endian IEEE-754 doubles,
// row-major, in manifest order.

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include <nlohmann/json.hpp>

#include "modgrok/errors.hpp"
#include "modgrok/trainer.hpp"

namespace modgrok {
namespace {

using nlohmann::json;

constexpr const char* kFormatName = "modgrok-checkpoint";

void append_le(std::string& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<char>(bits & 0xffu));
    bits >>= 8;
  }
}

double read_le(const char* p) {
  std::uint64_t bits = 0;
  for (int i = 7; i >= 0; --i) bits = (bits << 8) | static_cast<unsigned char>(p[i]);
  return std::bit_cast<double>(bits);
}

json config_to_json(const TrainConfig& c) {
  json j = {{"p", c.p},
            {"d_h", c.d_h},
            {"train_frac", c.train_frac},
            {"lr", c.lr},
            {"weight_decay", c.weight_decay},
            {"decoupled_weight_decay", c.decoupled_weight_decay},
            {"epochs", c.epochs},
            {"seed", c.seed},
            {"log_every", c.log_every}};
  j["early_stop_logs"] = c.early_stop_logs ? json(*c.early_stop_logs) : json(nullptr);
  return j;
}

template <typename T>
T field(const json& j, const char* key, const char* where) {
  if (!j.is_object() || !j.contains(key)) {
    throw FormatError(std::string("checkpoint header: missing field '") + where + "." + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw FormatError(std::string("checkpoint header: field '") + where + "." + key + "' has the wrong type");
  }
}

TrainConfig config_from_json(const json& j) {
  TrainConfig c;
  c.p = field<std::size_t>(j, "p", "config");
  c.d_h = field<std::size_t>(j, "d_h", "config");
  c.train_frac = field<double>(j, "train_frac", "config");
  c.lr = field<double>(j, "lr", "config");
  c.weight_decay = field<double>(j, "weight_decay", "config");
  if (j.contains("decoupled_weight_decay")) {
    c.decoupled_weight_decay = field<bool>(j, "decoupled_weight_decay", "config");
  }
  c.epochs = field<std::size_t>(j, "epochs", "config");
  c.seed = field<std::uint64_t>(j, "seed", "config");
  c.log_every = field<std::size_t>(j, "log_every", "config");
  if (j.contains("early_stop_logs") && !j["early_stop_logs"].is_null()) {
    c.early_stop_logs = field<std::size_t>(j, "early_stop_logs", "config");
  }
  return c;
}

json metrics_to_json(const MetricsRow& r) {
  return json::array({r.epoch, r.train_loss, r.test_loss, r.train_acc, r.test_acc});
}

MetricsRow metrics_from_json(const json& j) {
  if (!j.is_array() || j.size() != 5) throw FormatError("checkpoint header: malformed metrics row");
  try {
    return {j[0].get<std::size_t>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>(), j[4].get<double>()};
  } catch (const json::exception&) {
    throw FormatError("checkpoint header: malformed metrics row");
  }
}

}  // namespace

std::string encode_checkpoint(const Checkpoint& ckpt) {
  ckpt.params.check_shapes(ckpt.hyper);

  std::string payload;
  json manifest = json::array();
  for (const auto& t : tensors(ckpt.params)) {
    manifest.push_back({{"name", t.name}, {"shape", {t.rows, t.cols}}, {"offset", payload.size()}});
    for (double v : t.values) append_le(payload, v);
  }

  json history = json::array();
  for (const auto& r : ckpt.history) history.push_back(metrics_to_json(r));

  json header = {
      {"format", kFormatName},
      {"format_version", ckpt.format_version},
      {"hyper", {{"p", ckpt.hyper.p}, {"d_h", ckpt.hyper.d_h}, {"d_e", ckpt.hyper.d_e()}}},
      {"config", config_to_json(ckpt.config)},
      {"metrics",
       {{"train_loss", ckpt.final_metrics.train_loss},
        {"test_loss", ckpt.final_metrics.test_loss},
        {"train_acc", ckpt.final_metrics.train_acc},
        {"test_acc", ckpt.final_metrics.test_acc},
        {"epoch", ckpt.final_metrics.epoch}}},
      {"epochs_completed", ckpt.epochs_completed},
      {"history", history},
      {"tensors", manifest},
      {"payload_bytes", payload.size()},
  };

  std::string out = header.dump();
  out.push_back('\n');
  out += payload;
  return out;
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  const auto newline = bytes.find('\n');
  if (newline == std::string::npos) throw FormatError("checkpoint: header line not terminated");

  json header;
  try {
    header = json::parse(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(newline));
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("checkpoint: header is not valid JSON: ") + e.what());
  }

  if (field<std::string>(header, "format", "header") != kFormatName) {
    throw FormatError("checkpoint: field 'format' is not " + std::string(kFormatName));
  }
  const int version = field<int>(header, "format_version", "header");
  if (version != kCheckpointFormatVersion) {
    throw FormatError("checkpoint: unsupported format_version " + std::to_string(version) + " (supported: " +
                      std::to_string(kCheckpointFormatVersion) + ")");
  }

  Checkpoint ckpt;
  ckpt.format_version = version;
  const json& hyper = header["hyper"];
  ckpt.hyper.p = field<std::size_t>(hyper, "p", "hyper");
  ckpt.hyper.d_h = field<std::size_t>(hyper, "d_h", "hyper");
  if (field<std::size_t>(hyper, "d_e", "hyper") != ckpt.hyper.d_h) {
    throw FormatError("checkpoint: field 'hyper.d_e' must equal hyper.d_h");
  }
  try {
    ckpt.hyper.validate();
  } catch (const InputError& e) {
    throw FormatError(std::string("checkpoint: field 'hyper' invalid: ") + e.what());
  }
  if (!header.contains("config")) throw FormatError("checkpoint header: missing field 'header.config'");
  ckpt.config = config_from_json(header["config"]);

  const json& metrics = header["metrics"];
  ckpt.final_metrics = {field<std::size_t>(metrics, "epoch", "metrics"),
                        field<double>(metrics, "train_loss", "metrics"),
                        field<double>(metrics, "test_loss", "metrics"),
                        field<double>(metrics, "train_acc", "metrics"),
                        field<double>(metrics, "test_acc", "metrics")};
  ckpt.epochs_completed = field<std::size_t>(header, "epochs_completed", "header");
  if (header.contains("history")) {
    for (const auto& r : header["history"]) ckpt.history.push_back(metrics_from_json(r));
  }

  const auto payload_bytes = field<std::size_t>(header, "payload_bytes", "header");
  const std::size_t payload_start = newline + 1;
  if (bytes.size() - payload_start != payload_bytes) {
    throw FormatError("checkpoint: field 'payload_bytes' says " + std::to_string(payload_bytes) + " but file has " +
                      std::to_string(bytes.size() - payload_start) + " payload bytes");
  }

  ckpt.params = ModelParams::zeros(ckpt.hyper);
  auto expected = tensors(ckpt.params);
  if (!header.contains("tensors") || !header["tensors"].is_array() || header["tensors"].size() != expected.size()) {
    throw FormatError("checkpoint: field 'tensors' must list " + std::to_string(expected.size()) + " tensors");
  }
  for (std::size_t k = 0; k < expected.size(); ++k) {
    const json& entry = header["tensors"][k];
    const auto name = field<std::string>(entry, "name", "tensors[]");
    if (name != expected[k].name) {
      throw FormatError("checkpoint: field 'tensors[" + std::to_string(k) + "].name' is '" + name + "', expected '" +
                        std::string(expected[k].name) + "'");
    }
    const auto shape = field<std::vector<std::size_t>>(entry, "shape", "tensors[]");
    if (shape.size() != 2 || shape[0] != expected[k].rows || shape[1] != expected[k].cols) {
      throw FormatError("checkpoint: field 'tensors[" + name + "].shape' does not match hyper");
    }
    const auto offset = field<std::size_t>(entry, "offset", "tensors[]");
    const std::size_t n_bytes = expected[k].values.size() * 8;
    if (offset > payload_bytes || payload_bytes - offset < n_bytes) {
      throw FormatError("checkpoint: field 'tensors[" + name + "].offset' points past the payload");
    }
    const char* src = bytes.data() + payload_start + offset;
    for (std::size_t i = 0; i < expected[k].values.size(); ++i) expected[k].values[i] = read_le(src + 8 * i);
  }
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  const std::string bytes = encode_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw PersistenceError("cannot open checkpoint for writing: " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw PersistenceError("failed writing checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint: " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace modgrok
