#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "modgrok/model.hpp"
#include "modgrok/rng.hpp"

namespace modgrok {

/// All p² ordered pairs, index a·p + b, target (a+b) mod p.
struct LabeledPairs {
  std::vector<TokenPair> pairs;
  std::vector<std::uint32_t> targets;

  std::size_t size() const { return pairs.size(); }
  LabeledPairs subset(std::span<const std::size_t> indices) const;
};

struct Split {
  std::vector<std::size_t> train_idx;  // ascending
  std::vector<std::size_t> test_idx;   // ascending
};

struct Dataset {
  LabeledPairs all;
  Split split;
  LabeledPairs train;
  LabeledPairs test;
};

LabeledPairs gen_dataset(std::size_t p);

/// Uniform random partition with round(frac·n) training indices.
Split split(std::size_t n, double frac, SeededRng& rng);
std::size_t train_size(std::size_t n, double frac);

/// Dataset for a run: full grid plus the split drawn from the split sub-seed.
Dataset make_dataset(std::size_t p, double frac, std::uint64_t seed);

struct TrainConfig {
  std::size_t p = 113;
  std::size_t d_h = 256;
  double train_frac = 0.3;
  double lr = 0.01;
  double weight_decay = 5e-5;
  /// AdamW-style decay applied to the weights instead of the gradient.
  bool decoupled_weight_decay = false;
  std::size_t epochs = 20000;
  std::uint64_t seed = 0;
  std::size_t log_every = 10;
  /// Stop once test accuracy has been 100% for this many consecutive logs.
  std::optional<std::size_t> early_stop_logs;
  std::string checkpoint_path;

  Hyper hyper() const { return {p, d_h}; }
  /// Throws InputError naming the first invalid field.
  void validate() const;
};

struct AdamState {
  Gradients m;
  Gradients v;
  std::uint64_t t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState zeros(const Hyper& hyper);
};

/// One Adam update. Coupled (L2) decay adds λw to the gradient before the moments;
/// decoupled decay subtracts lr·λw from the weights after them.
void adam_step(ModelParams& params, const Gradients& grads, AdamState& state, double lr, double weight_decay,
               bool decoupled = false);

struct MetricsRow {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double test_loss = 0.0;
  double train_acc = 0.0;
  double test_acc = 0.0;

  friend bool operator==(const MetricsRow&, const MetricsRow&) = default;
};

inline constexpr int kCheckpointFormatVersion = 1;

struct Checkpoint {
  int format_version = kCheckpointFormatVersion;
  Hyper hyper;
  ModelParams params;
  TrainConfig config;
  MetricsRow final_metrics;
  std::size_t epochs_completed = 0;
  std::vector<MetricsRow> history;
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<MetricsRow> history;
};

/// Called after every logged evaluation.
using ProgressFn = std::function<void(const MetricsRow&)>;

/// Full-batch training. Writes config.checkpoint_path when it is non-empty.
TrainResult train(const TrainConfig& config, const ProgressFn& progress = {});

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

/// Byte encoding used by save_checkpoint; exposed for tests and hashing.
std::string encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(const std::string& bytes);

void write_metrics_csv(std::span<const MetricsRow> history, const std::string& path);

}  // namespace modgrok
