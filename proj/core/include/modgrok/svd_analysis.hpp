#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "modgrok/linalg.hpp"
#include "modgrok/model.hpp"
#include "modgrok/trainer.hpp"

namespace modgrok {

/// The four weight matrices subject to spectral analysis. Biases are never analyzed.
enum class WeightMatrix { kEmbed, kUnembed, kInputHidden, kHiddenHidden };

inline constexpr std::array<WeightMatrix, 4> kAllWeightMatrices = {
    WeightMatrix::kEmbed, WeightMatrix::kUnembed, WeightMatrix::kInputHidden, WeightMatrix::kHiddenHidden};

std::string_view weight_name(WeightMatrix w);  // "W_E", "W_fc", "W_ih", "W_hh"
/// Throws InputError for unknown names.
WeightMatrix parse_weight_name(std::string_view name);

const Matrix& weight(const ModelParams& params, WeightMatrix w);
Matrix& weight(ModelParams& params, WeightMatrix w);

/// Accuracy on the full p² grid and on the held-out split of a checkpoint.
struct AccuracyPair {
  double full = 0.0;
  double test = 0.0;
};

/// Scores interventions on a fixed checkpoint's dataset.
class AccuracyProbe {
 public:
  explicit AccuracyProbe(const Checkpoint& ckpt);
  AccuracyProbe(const Hyper& hyper, Dataset data);

  AccuracyPair operator()(const ModelParams& params) const;
  const Hyper& hyper() const { return hyper_; }
  const Dataset& data() const { return data_; }

 private:
  Hyper hyper_;
  Dataset data_;
};

/// Singular values of W_E (all p+1 rows), W_fc, W_ih, W_hh, keyed by name.
std::map<std::string, Vector> weight_spectra(const ModelParams& params);

/// Σ_{i≤r} σᵢ / Σ_j σⱼ for 1 ≤ r ≤ len(sigma).
double energy_fraction(const Vector& sigma, std::size_t r);

struct RankPoint {
  std::size_t r = 0;
  double sigma_r = 0.0;
  double energy_fraction = 0.0;
  double accuracy_full = 0.0;
  double accuracy_test = 0.0;
};

struct RankSweepResult {
  std::string matrix_name;
  Vector sigma;
  AccuracyPair baseline;
  std::vector<RankPoint> points;  // r = 1..min(m, n)
  /// Smallest r whose full-grid accuracy is exactly 1.
  std::optional<std::size_t> minimal_full_accuracy_rank;
  std::optional<double> energy_fraction_at_minimal;
};

/// Replace one matrix by its rank-r truncation for each r and score the model.
RankSweepResult rank_sweep(const ModelParams& params, const AccuracyProbe& probe, WeightMatrix w);
RankSweepResult rank_sweep(const Checkpoint& ckpt, std::string_view matrix_name);

/// Replace every listed matrix by its complement beyond the given rank, simultaneously.
AccuracyPair complement_ablation(const ModelParams& params, const AccuracyProbe& probe,
                                 const std::map<WeightMatrix, std::size_t>& ranks);
AccuracyPair complement_ablation(const Checkpoint& ckpt, const std::map<std::string, std::size_t>& ranks);

}  // namespace modgrok
