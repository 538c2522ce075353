#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "modgrok/fourier.hpp"
#include "modgrok/freq_align.hpp"
#include "modgrok/svd_analysis.hpp"
#include "modgrok/trainer.hpp"

namespace modgrok::cli {

struct AnalysisOptions {
  double threshold = kDefaultSignificanceThreshold;
  VerdictOptions verdict;
};

/// Everything `analyze all` computes for one checkpoint.
struct FullAnalysis {
  FourierBasis basis;
  HiddenStacks stacks;
  ModelSpectra spectra;
  std::map<std::string, std::vector<std::size_t>> frequencies;  // W_E, W_fc, H1, H2, H3
  std::vector<RankSweepResult> sweeps;                          // W_E, W_fc, W_ih, W_hh
  std::optional<std::map<WeightMatrix, std::size_t>> complement_ranks;
  std::optional<AccuracyPair> complement_accuracy;
  std::optional<Alignment> alignment;
  std::vector<AblationResult> single;
  std::vector<AblationResult> cumulative;
  std::vector<PairFit> fits;
  Verdict verdict;
};

using StageTimer = std::function<void(const std::string& stage, double seconds)>;

std::map<std::string, std::vector<std::size_t>> frequency_sets(const ModelSpectra& s, double threshold);

/// Minimal full-accuracy ranks for all four matrices, or nothing if any is missing.
std::optional<std::map<WeightMatrix, std::size_t>> minimal_ranks(const std::vector<RankSweepResult>& sweeps);

FullAnalysis analyze_all(const Checkpoint& ckpt, const AnalysisOptions& options, const StageTimer& timer = {});

nlohmann::json config_json(const Checkpoint& ckpt);
nlohmann::json verdict_json(const Verdict& v, const FullAnalysis& a);
/// The report.json document. Contains no timings, so identical inputs give identical bytes.
nlohmann::json report_json(const Checkpoint& ckpt, const FullAnalysis& a, const AnalysisOptions& options);

}  // namespace modgrok::cli
