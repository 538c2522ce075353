#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "modgrok/fourier.hpp"
#include "modgrok/linalg.hpp"
#include "modgrok/svd_analysis.hpp"

namespace modgrok {

/// One consecutive pair of W_fc singular components and the frequency it carries.
struct FrequencyAssignment {
  std::size_t pair_index = 0;   // 1-based: components 2j−1 and 2j
  std::size_t first_component;  // 0-based index of the leading component
  std::size_t k = 0;            // argmax frequency of the pair's output-axis spectrum
  double energy_share = 0.0;    // share of the pair's spectral energy at k (DC included)
  Matrix pair_matrix;           // σ₁u₁v₁ᵀ + σ₂u₂v₂ᵀ, same shape as W_fc

  /// A pair counts as aligned only when one frequency holds at least half its energy.
  bool assigned() const { return energy_share >= 0.5; }
};

struct Alignment {
  SvdResult svd;  // of W_fc (d_h×p): U holds hidden-side vectors, V output-side
  std::size_t rank = 0;
  std::vector<FrequencyAssignment> pairs;
  /// Set when rank is odd: the trailing component left out of the pairing.
  std::optional<std::size_t> unpaired_component;

  std::vector<std::size_t> assigned_frequencies() const;
};

/// Pairs the leading `rank` components of w_fc as (1,2), (3,4), ... and assigns each pair
/// the frequency with the most energy in pair_matrix·Fᵀ.
Alignment assign_pairs(const Matrix& w_fc, const FourierBasis& basis, std::size_t rank);
/// Uses the W_fc minimal full-accuracy rank of the checkpoint. Throws DomainError when
/// the model never reaches full accuracy.
Alignment assign_pairs(const Checkpoint& ckpt, const FourierBasis& basis);

enum class AblationMode { kSingle, kCumulative };

struct AblationResult {
  std::vector<std::size_t> ablated_ks;
  AblationMode mode = AblationMode::kSingle;
  double accuracy = 0.0;       // full grid
  double accuracy_test = 0.0;  // held-out split
};

/// W_fc − Σ pair_matrix over pairs assigned to any of ks; other weights untouched.
/// Throws InputError if some k is not an assigned frequency.
AblationResult ablate_frequency(const ModelParams& params, const AccuracyProbe& probe, const Alignment& alignment,
                                const std::vector<std::size_t>& ks, AblationMode mode = AblationMode::kSingle);

/// Each assigned frequency on its own, in pair order.
std::vector<AblationResult> single_ablations(const ModelParams& params, const AccuracyProbe& probe,
                                             const Alignment& alignment);
/// Step i removes pairs 1..i (descending singular values).
std::vector<AblationResult> cumulative_ablation(const ModelParams& params, const AccuracyProbe& probe,
                                                const Alignment& alignment);

struct FitResult {
  std::size_t k = 0;
  double alpha = 0.0;
  double beta = 0.0;
  double rel_error = 0.0;
  double condition_number = 0.0;  // of the 2×2 normal-equations matrix
};

/// Least squares of signal[a][b] (p×p) against α·cos ω_k(a+b) + β·sin ω_k(a+b).
/// Throws DegenerateFitError for a zero signal.
FitResult fit_sum_frequency(const Matrix& signal, std::size_t k);

struct PairFit {
  std::size_t k = 0;
  std::size_t pair_index = 0;
  FitResult first;
  FitResult second;
  double rel_error() const { return std::max(first.rel_error, second.rel_error); }
};

/// s(a,b) = u·ĥ₃(a,b) for each hidden-side singular vector u of the pair, fitted at the pair's k.
PairFit project_and_fit(const Matrix& h3_hat, std::size_t p, const Alignment& alignment,
                        const FrequencyAssignment& pair);
std::vector<PairFit> project_and_fit_all(const Matrix& h3_hat, std::size_t p, const Alignment& alignment);

struct VerdictOptions {
  double significance_threshold = kDefaultSignificanceThreshold;
  double fit_bound = 5e-2;
  double ablation_bound = 0.02;
};

struct VerdictClause {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct Verdict {
  bool pass = false;
  std::vector<VerdictClause> clauses;  // frequency_agreement, fit_quality, full_ablation
};

/// Inputs gathered by the other analyses; the verdict itself is a pure function of these.
struct VerdictInputs {
  std::vector<std::vector<std::size_t>> frequency_sets;  // W_E, W_fc, H1, H2, H3
  std::optional<Alignment> alignment;                    // absent when W_fc never reaches full accuracy
  std::vector<PairFit> fits;
  std::optional<double> full_ablation_accuracy;
  std::string alignment_failure;  // why alignment or fits are missing
};

Verdict decide_verdict(const VerdictInputs& inputs, const VerdictOptions& options = {});
Verdict fourier_multiplication_verdict(const Checkpoint& ckpt, const VerdictOptions& options = {});

}  // namespace modgrok
