#include "artifacts.hpp"

#include <openssl/evp.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>

#include "modgrok/errors.hpp"

#ifndef MODGROK_VERSION
#define MODGROK_VERSION "unknown"
#endif

namespace modgrok::cli {
namespace {

namespace fs = std::filesystem;

// 17 significant digits round-trip every double, so CSVs are exact and byte-stable.
std::string num(double v) {
  std::array<char, 32> buf{};
  std::snprintf(buf.data(), buf.size(), "%.17g", v);
  return buf.data();
}

}  // namespace

std::string sha256_hex(const std::string& bytes) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest.data(), &len) != 1) {
    throw Error("sha256: OpenSSL digest failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xF];
  }
  return out;
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return sha256_hex(ss.str());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  out.close();
  if (!out) throw PersistenceError("cannot write " + path.string());
}

std::string spectrum_csv(const Spectrum1D& s) {
  std::string out = "k,cos_energy,sin_energy,total\n";
  for (std::size_t i = 0; i < s.freq_energy.size(); ++i) {
    out += std::to_string(i + 1) + ',' + num(s.cos_energy[i]) + ',' + num(s.sin_energy[i]) + ',' +
           num(s.freq_energy[i]) + '\n';
  }
  return out;
}

// 2D tensors have no single cos/sin split; the a- and b-axis marginals take those columns.
std::string spectrum_csv(const Spectrum2D& s) {
  std::string out = "k,a_energy,b_energy,total\n";
  for (std::size_t i = 0; i < s.freq_energy.size(); ++i) {
    out += std::to_string(i + 1) + ',' + num(s.marginal_a[i]) + ',' + num(s.marginal_b[i]) + ',' +
           num(s.freq_energy[i]) + '\n';
  }
  return out;
}

std::string magnitude_csv(const Spectrum2D& s) {
  std::string out;
  for (std::size_t i = 0; i < s.mag.rows(); ++i) {
    for (std::size_t j = 0; j < s.mag.cols(); ++j) out += (j ? "," : "") + num(s.mag(i, j));
    out += '\n';
  }
  return out;
}

std::string rank_sweep_csv(const std::vector<RankSweepResult>& sweeps) {
  std::string out = "matrix,r,sigma_r,energy_fraction,accuracy_full,accuracy_test\n";
  for (const auto& s : sweeps) {
    for (const auto& pt : s.points) {
      out += s.matrix_name + ',' + std::to_string(pt.r) + ',' + num(pt.sigma_r) + ',' + num(pt.energy_fraction) + ',' +
             num(pt.accuracy_full) + ',' + num(pt.accuracy_test) + '\n';
    }
  }
  return out;
}

std::string complement_csv(const std::map<WeightMatrix, std::size_t>& ranks, const AccuracyPair& acc) {
  std::string out = "matrix,rank\n";
  for (const auto& [w, r] : ranks) out += std::string(weight_name(w)) + ',' + std::to_string(r) + '\n';
  out += "accuracy_full," + num(acc.full) + "\naccuracy_test," + num(acc.test) + '\n';
  return out;
}

std::string alignment_csv(const Alignment& a) {
  std::string out = "pair,component_1,component_2,sigma_1,sigma_2,k,energy_share,assigned\n";
  for (const auto& p : a.pairs) {
    out += std::to_string(p.pair_index) + ',' + std::to_string(p.first_component + 1) + ',' +
           std::to_string(p.first_component + 2) + ',' + num(a.svd.S[p.first_component]) + ',' +
           num(a.svd.S[p.first_component + 1]) + ',' + std::to_string(p.k) + ',' + num(p.energy_share) + ',' +
           (p.assigned() ? "1" : "0") + '\n';
  }
  return out;
}

std::string ablation_csv(const std::vector<AblationResult>& single, const std::vector<AblationResult>& cumulative) {
  std::string out = "k,single_acc,cumulative_acc\n";
  for (std::size_t i = 0; i < single.size() && i < cumulative.size(); ++i) {
    out += std::to_string(single[i].ablated_ks.front()) + ',' + num(single[i].accuracy) + ',' +
           num(cumulative[i].accuracy) + '\n';
  }
  return out;
}

std::string fits_csv(const std::vector<PairFit>& fits) {
  std::string out = "k,alpha,beta,rel_error\n";
  for (const auto& f : fits) {
    for (const FitResult* r : {&f.first, &f.second}) {
      out += std::to_string(f.k) + ',' + num(r->alpha) + ',' + num(r->beta) + ',' + num(r->rel_error) + '\n';
    }
  }
  return out;
}

Manifest::Manifest(fs::path out_dir, std::string command) : out_dir_(std::move(out_dir)), command_(std::move(command)) {
  std::error_code ec;
  fs::create_directories(out_dir_, ec);
  if (ec) throw PersistenceError("cannot create output directory " + out_dir_.string() + ": " + ec.message());
}

fs::path Manifest::emit(const std::string& name, const std::string& text) {
  const fs::path path = out_dir_ / name;
  write_text(path, text);
  files_.emplace_back(name, sha256_hex(text));
  return path;
}

void Manifest::record(const fs::path& path) {
  const fs::path rel = path.lexically_relative(out_dir_);
  files_.emplace_back(rel.empty() ? path.string() : rel.string(), sha256_file(path));
}

void Manifest::time(const std::string& stage, double seconds) { timings_.emplace_back(stage, seconds); }

void Manifest::set(const std::string& key, nlohmann::json value) { extra_[key] = std::move(value); }

nlohmann::json Manifest::to_json() const {
  nlohmann::json files = nlohmann::json::array();
  for (const auto& [name, hash] : files_) files.push_back({{"path", name}, {"sha256", hash}});
  nlohmann::json timings = nlohmann::json::object();
  for (const auto& [stage, s] : timings_) timings[stage] = s;
  nlohmann::json out = {{"tool", "modgrok"}, {"version", MODGROK_VERSION}, {"command", command_},
                        {"files", files},    {"timings_seconds", timings}};
  out.update(extra_);
  return out;
}

void Manifest::write() const { write_text(out_dir_ / "manifest.json", to_json().dump(2) + '\n'); }

}  // namespace modgrok::cli
