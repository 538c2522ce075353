#include "modgrok/svd_analysis.hpp"

#include <numeric>

#include "modgrok/errors.hpp"

namespace modgrok {

std::string_view weight_name(WeightMatrix w) {
  switch (w) {
    case WeightMatrix::kEmbed:
      return "W_E";
    case WeightMatrix::kUnembed:
      return "W_fc";
    case WeightMatrix::kInputHidden:
      return "W_ih";
    case WeightMatrix::kHiddenHidden:
      return "W_hh";
  }
  return "?";
}

WeightMatrix parse_weight_name(std::string_view name) {
  for (WeightMatrix w : kAllWeightMatrices)
    if (weight_name(w) == name) return w;
  throw InputError("unknown weight matrix '" + std::string(name) + "' (expected W_E, W_fc, W_ih or W_hh)");
}

const Matrix& weight(const ModelParams& params, WeightMatrix w) {
  switch (w) {
    case WeightMatrix::kEmbed:
      return params.W_E;
    case WeightMatrix::kUnembed:
      return params.W_fc;
    case WeightMatrix::kInputHidden:
      return params.W_ih;
    case WeightMatrix::kHiddenHidden:
      return params.W_hh;
  }
  throw InputError("invalid weight matrix");
}

Matrix& weight(ModelParams& params, WeightMatrix w) {
  return const_cast<Matrix&>(weight(static_cast<const ModelParams&>(params), w));
}

AccuracyProbe::AccuracyProbe(const Checkpoint& ckpt)
    : AccuracyProbe(ckpt.hyper, make_dataset(ckpt.config.p, ckpt.config.train_frac, ckpt.config.seed)) {}

AccuracyProbe::AccuracyProbe(const Hyper& hyper, Dataset data) : hyper_(hyper), data_(std::move(data)) {}

AccuracyPair AccuracyProbe::operator()(const ModelParams& params) const {
  const auto pred = predictions(params, hyper_, data_.all.pairs);
  std::size_t full = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) full += pred[i] == data_.all.targets[i];
  std::size_t test = 0;
  for (std::size_t i : data_.split.test_idx) test += pred[i] == data_.all.targets[i];
  AccuracyPair out;
  out.full = pred.empty() ? 0.0 : static_cast<double>(full) / static_cast<double>(pred.size());
  out.test = data_.split.test_idx.empty() ? 0.0
                                          : static_cast<double>(test) / static_cast<double>(data_.split.test_idx.size());
  return out;
}

std::map<std::string, Vector> weight_spectra(const ModelParams& params) {
  std::map<std::string, Vector> out;
  for (WeightMatrix w : kAllWeightMatrices) out.emplace(weight_name(w), svd(weight(params, w)).S);
  return out;
}

double energy_fraction(const Vector& sigma, std::size_t r) {
  if (r < 1 || r > sigma.size()) {
    throw RangeError("energy_fraction: r=" + std::to_string(r) + " outside 1.." + std::to_string(sigma.size()));
  }
  const double total = std::accumulate(sigma.begin(), sigma.end(), 0.0);
  if (total <= 0.0) throw DomainError("energy_fraction: all singular values are zero");
  return std::accumulate(sigma.begin(), sigma.begin() + static_cast<std::ptrdiff_t>(r), 0.0) / total;
}

RankSweepResult rank_sweep(const ModelParams& params, const AccuracyProbe& probe, WeightMatrix w) {
  const SvdResult decomposition = svd(weight(params, w));
  RankSweepResult out;
  out.matrix_name = weight_name(w);
  out.sigma = decomposition.S;
  out.baseline = probe(params);

  const double sigma_total = std::accumulate(out.sigma.begin(), out.sigma.end(), 0.0);
  ModelParams modified = params;
  double partial = 0.0;
  for (std::size_t r = 1; r <= out.sigma.size(); ++r) {
    weight(modified, w) = truncate(decomposition, r);
    const AccuracyPair acc = probe(modified);
    partial += out.sigma[r - 1];
    RankPoint pt{r, out.sigma[r - 1], sigma_total > 0.0 ? partial / sigma_total : 0.0, acc.full, acc.test};
    out.points.push_back(pt);
    if (!out.minimal_full_accuracy_rank && acc.full == 1.0) {
      out.minimal_full_accuracy_rank = r;
      out.energy_fraction_at_minimal = pt.energy_fraction;
    }
  }
  return out;
}

RankSweepResult rank_sweep(const Checkpoint& ckpt, std::string_view matrix_name) {
  const WeightMatrix w = parse_weight_name(matrix_name);
  return rank_sweep(ckpt.params, AccuracyProbe(ckpt), w);
}

AccuracyPair complement_ablation(const ModelParams& params, const AccuracyProbe& probe,
                                 const std::map<WeightMatrix, std::size_t>& ranks) {
  ModelParams modified = params;
  for (const auto& [w, r] : ranks) weight(modified, w) = complement(svd(weight(params, w)), r);
  return probe(modified);
}

AccuracyPair complement_ablation(const Checkpoint& ckpt, const std::map<std::string, std::size_t>& ranks) {
  std::map<WeightMatrix, std::size_t> parsed;
  for (const auto& [name, r] : ranks) parsed[parse_weight_name(name)] = r;
  return complement_ablation(ckpt.params, AccuracyProbe(ckpt), parsed);
}

}  // namespace modgrok
