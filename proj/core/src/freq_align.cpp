#include "modgrok/freq_align.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "modgrok/errors.hpp"

namespace modgrok {
namespace {

std::string join(const std::vector<std::size_t>& ks) {
  std::ostringstream out;
  out << '{';
  for (std::size_t i = 0; i < ks.size(); ++i) out << (i ? "," : "") << ks[i];
  out << '}';
  return out.str();
}

}  // namespace

std::vector<std::size_t> Alignment::assigned_frequencies() const {
  std::vector<std::size_t> out;
  for (const auto& pair : pairs) {
    if (pair.assigned() && std::find(out.begin(), out.end(), pair.k) == out.end()) out.push_back(pair.k);
  }
  return out;
}

Alignment assign_pairs(const Matrix& w_fc, const FourierBasis& basis, std::size_t rank) {
  if (w_fc.cols() != basis.p) {
    throw ShapeError("assign_pairs: W_fc has " + std::to_string(w_fc.cols()) + " output columns, basis p=" +
                     std::to_string(basis.p));
  }
  Alignment out;
  out.svd = svd(w_fc);
  if (rank > out.svd.S.size()) {
    throw RangeError("assign_pairs: rank " + std::to_string(rank) + " exceeds " + std::to_string(out.svd.S.size()));
  }
  out.rank = rank;
  if (rank % 2 == 1) out.unpaired_component = rank - 1;

  const std::size_t K = basis.num_frequencies();
  for (std::size_t j = 1; j <= rank / 2; ++j) {
    FrequencyAssignment pair;
    pair.pair_index = j;
    pair.first_component = 2 * (j - 1);
    pair.pair_matrix = component_range(out.svd, pair.first_component, pair.first_component + 2);

    const Matrix coeffs = matmul_nt(pair.pair_matrix, basis.F);
    Vector energy(K + 1, 0.0);
    for (std::size_t r = 0; r < coeffs.rows(); ++r) {
      auto row = coeffs.row(r);
      for (std::size_t c = 0; c < coeffs.cols(); ++c) energy[(c + 1) / 2] += row[c] * row[c];
    }
    double total = 0.0;
    for (double e : energy) total += e;
    const auto best = std::max_element(energy.begin() + 1, energy.end());
    pair.k = static_cast<std::size_t>(best - energy.begin());
    pair.energy_share = total > 0.0 ? *best / total : 0.0;
    out.pairs.push_back(std::move(pair));
  }
  return out;
}

Alignment assign_pairs(const Checkpoint& ckpt, const FourierBasis& basis) {
  const RankSweepResult sweep = rank_sweep(ckpt.params, AccuracyProbe(ckpt), WeightMatrix::kUnembed);
  if (!sweep.minimal_full_accuracy_rank) {
    throw DomainError("assign_pairs: no truncation of W_fc reaches 100% accuracy");
  }
  return assign_pairs(ckpt.params.W_fc, basis, *sweep.minimal_full_accuracy_rank);
}

AblationResult ablate_frequency(const ModelParams& params, const AccuracyProbe& probe, const Alignment& alignment,
                                const std::vector<std::size_t>& ks, AblationMode mode) {
  const auto assigned = alignment.assigned_frequencies();
  for (std::size_t k : ks) {
    if (std::find(assigned.begin(), assigned.end(), k) == assigned.end()) {
      throw InputError("frequency " + std::to_string(k) + " is not assigned to any W_fc pair (assigned: " +
                       join(assigned) + ")");
    }
  }
  ModelParams modified = params;
  for (const auto& pair : alignment.pairs) {
    if (!pair.assigned() || std::find(ks.begin(), ks.end(), pair.k) == ks.end()) continue;
    modified.W_fc = subtract(modified.W_fc, pair.pair_matrix);
  }
  const AccuracyPair acc = probe(modified);
  return {ks, mode, acc.full, acc.test};
}

std::vector<AblationResult> single_ablations(const ModelParams& params, const AccuracyProbe& probe,
                                             const Alignment& alignment) {
  std::vector<AblationResult> out;
  for (std::size_t k : alignment.assigned_frequencies()) {
    out.push_back(ablate_frequency(params, probe, alignment, {k}, AblationMode::kSingle));
  }
  return out;
}

std::vector<AblationResult> cumulative_ablation(const ModelParams& params, const AccuracyProbe& probe,
                                                const Alignment& alignment) {
  std::vector<AblationResult> out;
  std::vector<std::size_t> ks;
  for (std::size_t k : alignment.assigned_frequencies()) {
    ks.push_back(k);
    out.push_back(ablate_frequency(params, probe, alignment, ks, AblationMode::kCumulative));
  }
  return out;
}

FitResult fit_sum_frequency(const Matrix& signal, std::size_t k) {
  const std::size_t p = signal.rows();
  if (signal.cols() != p) throw ShapeError("fit_sum_frequency: signal must be p×p, got " + signal.shape_string());
  if (k < 1 || 2 * k >= p + 1) {
    throw InputError("fit_sum_frequency: frequency " + std::to_string(k) + " outside 1.." + std::to_string((p - 1) / 2));
  }

  double cc = 0.0, ss = 0.0, cs = 0.0, cy = 0.0, sy = 0.0, yy = 0.0;
  const double step = 2.0 * std::numbers::pi / static_cast<double>(p);
  for (std::size_t a = 0; a < p; ++a) {
    for (std::size_t b = 0; b < p; ++b) {
      const double angle = step * static_cast<double>((k * ((a + b) % p)) % p);
      const double c = std::cos(angle);
      const double s = std::sin(angle);
      const double y = signal(a, b);
      cc += c * c;
      ss += s * s;
      cs += c * s;
      cy += c * y;
      sy += s * y;
      yy += y * y;
    }
  }
  if (yy == 0.0) throw DegenerateFitError("fit_sum_frequency: signal is identically zero");

  FitResult out;
  out.k = k;
  const double det = cc * ss - cs * cs;
  out.alpha = (ss * cy - cs * sy) / det;
  out.beta = (cc * sy - cs * cy) / det;

  const double half_trace = 0.5 * (cc + ss);
  const double spread = std::sqrt(0.25 * (cc - ss) * (cc - ss) + cs * cs);
  out.condition_number = (half_trace + spread) / (half_trace - spread);

  double resid = 0.0;
  for (std::size_t a = 0; a < p; ++a) {
    for (std::size_t b = 0; b < p; ++b) {
      const double angle = step * static_cast<double>((k * ((a + b) % p)) % p);
      const double r = signal(a, b) - out.alpha * std::cos(angle) - out.beta * std::sin(angle);
      resid += r * r;
    }
  }
  out.rel_error = std::sqrt(resid / yy);
  return out;
}

PairFit project_and_fit(const Matrix& h3_hat, std::size_t p, const Alignment& alignment,
                        const FrequencyAssignment& pair) {
  if (h3_hat.rows() != p * p || h3_hat.cols() != alignment.svd.U.rows()) {
    throw ShapeError("project_and_fit: normalized states " + h3_hat.shape_string() + " do not match p=" +
                     std::to_string(p) + " and W_fc hidden size " + std::to_string(alignment.svd.U.rows()));
  }
  auto fit_component = [&](std::size_t comp) {
    const std::size_t d = h3_hat.cols();
    Matrix signal(p, p);
    for (std::size_t i = 0; i < p * p; ++i) {
      auto row = h3_hat.row(i);
      double dot = 0.0;
      for (std::size_t j = 0; j < d; ++j) dot += row[j] * alignment.svd.U(j, comp);
      signal.values()[i] = dot;
    }
    return fit_sum_frequency(signal, pair.k);
  };
  return {pair.k, pair.pair_index, fit_component(pair.first_component), fit_component(pair.first_component + 1)};
}

std::vector<PairFit> project_and_fit_all(const Matrix& h3_hat, std::size_t p, const Alignment& alignment) {
  std::vector<PairFit> out;
  for (const auto& pair : alignment.pairs) out.push_back(project_and_fit(h3_hat, p, alignment, pair));
  return out;
}

Verdict decide_verdict(const VerdictInputs& in, const VerdictOptions& options) {
  Verdict v;

  VerdictClause agree{"frequency_agreement", false, ""};
  if (in.frequency_sets.empty()) {
    agree.detail = "no frequency sets";
  } else if (in.frequency_sets.front().empty()) {
    agree.detail = "no significant frequencies in W_E";
  } else {
    agree.pass = std::all_of(in.frequency_sets.begin(), in.frequency_sets.end(),
                             [&](const auto& s) { return s == in.frequency_sets.front(); });
    std::ostringstream d;
    const char* names[] = {"W_E", "W_fc", "H1", "H2", "H3"};
    for (std::size_t i = 0; i < in.frequency_sets.size(); ++i) {
      d << (i ? " " : "") << (i < 5 ? names[i] : "?") << '=' << join(in.frequency_sets[i]);
    }
    agree.detail = d.str();
  }
  v.clauses.push_back(agree);

  VerdictClause fits{"fit_quality", false, ""};
  if (!in.alignment) {
    fits.detail = in.alignment_failure.empty() ? "no W_fc alignment" : in.alignment_failure;
  } else if (in.fits.empty()) {
    fits.detail = "no singular-vector pairs to fit";
  } else {
    double worst = 0.0;
    for (const auto& f : in.fits) worst = std::max(worst, f.rel_error());
    fits.pass = worst <= options.fit_bound;
    std::ostringstream d;
    d << "max rel_error " << worst << " (bound " << options.fit_bound << ")";
    fits.detail = d.str();
  }
  v.clauses.push_back(fits);

  VerdictClause ablation{"full_ablation", false, ""};
  if (!in.full_ablation_accuracy) {
    ablation.detail = in.alignment_failure.empty() ? "no assigned frequencies to ablate" : in.alignment_failure;
  } else {
    ablation.pass = *in.full_ablation_accuracy <= options.ablation_bound;
    std::ostringstream d;
    d << "accuracy " << *in.full_ablation_accuracy << " (bound " << options.ablation_bound << ")";
    ablation.detail = d.str();
  }
  v.clauses.push_back(ablation);

  v.pass = std::all_of(v.clauses.begin(), v.clauses.end(), [](const auto& c) { return c.pass; });
  return v;
}

Verdict fourier_multiplication_verdict(const Checkpoint& ckpt, const VerdictOptions& options) {
  const FourierBasis basis = build_basis(ckpt.hyper.p);
  const HiddenStacks stacks = hidden_state_stacks(ckpt.params, ckpt.hyper);
  const ModelSpectra spectra = model_spectra(ckpt.params, stacks, basis);
  const double t = options.significance_threshold;

  VerdictInputs in;
  in.frequency_sets = {significant_frequencies(spectra.W_E, t), significant_frequencies(spectra.W_fc, t),
                       significant_frequencies(spectra.H1, t), significant_frequencies(spectra.H2, t),
                       significant_frequencies(spectra.H3, t)};

  const AccuracyProbe probe(ckpt);
  const RankSweepResult sweep = rank_sweep(ckpt.params, probe, WeightMatrix::kUnembed);
  if (!sweep.minimal_full_accuracy_rank) {
    in.alignment_failure = "no truncation of W_fc reaches 100% accuracy";
    return decide_verdict(in, options);
  }
  in.alignment = assign_pairs(ckpt.params.W_fc, basis, *sweep.minimal_full_accuracy_rank);
  try {
    in.fits = project_and_fit_all(stacks.H3_hat, ckpt.hyper.p, *in.alignment);
  } catch (const DegenerateFitError& e) {
    in.alignment_failure = e.what();
    in.alignment.reset();
  }
  if (in.alignment) {
    const auto ks = in.alignment->assigned_frequencies();
    if (!ks.empty()) {
      in.full_ablation_accuracy = ablate_frequency(ckpt.params, probe, *in.alignment, ks).accuracy;
    }
  }
  return decide_verdict(in, options);
}

}  // namespace modgrok
