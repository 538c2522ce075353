#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "analysis.hpp"

namespace modgrok::cli {

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Throws PersistenceError on failure.
void write_text(const std::filesystem::path& path, const std::string& text);

std::string spectrum_csv(const Spectrum1D& s);
std::string spectrum_csv(const Spectrum2D& s);
std::string magnitude_csv(const Spectrum2D& s);
std::string rank_sweep_csv(const std::vector<RankSweepResult>& sweeps);
std::string complement_csv(const std::map<WeightMatrix, std::size_t>& ranks, const AccuracyPair& acc);
std::string alignment_csv(const Alignment& a);
/// Frequency ablation table: single and cumulative accuracy per assigned frequency, in pair order.
std::string ablation_csv(const std::vector<AblationResult>& single, const std::vector<AblationResult>& cumulative);
/// Fit table: one row per fitted singular vector.
std::string fits_csv(const std::vector<PairFit>& fits);

/// Collects emitted files and stage timings for manifest.json.
class Manifest {
 public:
  Manifest(std::filesystem::path out_dir, std::string command);

  /// Writes `text` under the output directory and records its hash.
  std::filesystem::path emit(const std::string& name, const std::string& text);
  /// Records a file that something else wrote.
  void record(const std::filesystem::path& path);
  void time(const std::string& stage, double seconds);
  void set(const std::string& key, nlohmann::json value);

  const std::filesystem::path& out_dir() const { return out_dir_; }
  nlohmann::json to_json() const;
  void write() const;

 private:
  std::filesystem::path out_dir_;
  std::string command_;
  nlohmann::json extra_ = nlohmann::json::object();
  std::vector<std::pair<std::string, std::string>> files_;  // relative path, sha256
  std::vector<std::pair<std::string, double>> timings_;
};

}  // namespace modgrok::cli
