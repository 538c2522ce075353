#include "analysis.hpp"

#include <chrono>

#include "modgrok/errors.hpp"

namespace modgrok::cli {
namespace {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

json optional_json(const auto& v) { return v ? json(*v) : json(nullptr); }

const char* const kTensorNames[] = {"W_E", "W_fc", "H1", "H2", "H3"};

class Stage {
 public:
  Stage(const StageTimer& timer, std::string name) : timer_(timer), name_(std::move(name)), start_(Clock::now()) {}
  ~Stage() {
    if (timer_) timer_(name_, std::chrono::duration<double>(Clock::now() - start_).count());
  }

 private:
  const StageTimer& timer_;
  std::string name_;
  Clock::time_point start_;
};

}  // namespace

std::map<std::string, std::vector<std::size_t>> frequency_sets(const ModelSpectra& s, double threshold) {
  return {{"W_E", significant_frequencies(s.W_E, threshold)},
          {"W_fc", significant_frequencies(s.W_fc, threshold)},
          {"H1", significant_frequencies(s.H1, threshold)},
          {"H2", significant_frequencies(s.H2, threshold)},
          {"H3", significant_frequencies(s.H3, threshold)}};
}

std::optional<std::map<WeightMatrix, std::size_t>> minimal_ranks(const std::vector<RankSweepResult>& sweeps) {
  std::map<WeightMatrix, std::size_t> out;
  for (const auto& s : sweeps) {
    if (!s.minimal_full_accuracy_rank) return std::nullopt;
    out[parse_weight_name(s.matrix_name)] = *s.minimal_full_accuracy_rank;
  }
  return out;
}

FullAnalysis analyze_all(const Checkpoint& ckpt, const AnalysisOptions& options, const StageTimer& timer) {
  FullAnalysis a;
  const AccuracyProbe probe(ckpt);
  {
    Stage stage(timer, "fourier");
    a.basis = build_basis(ckpt.hyper.p);
    a.stacks = hidden_state_stacks(ckpt.params, ckpt.hyper);
    a.spectra = model_spectra(ckpt.params, a.stacks, a.basis);
    a.frequencies = frequency_sets(a.spectra, options.threshold);
  }
  {
    Stage stage(timer, "svd");
    for (WeightMatrix w : kAllWeightMatrices) a.sweeps.push_back(rank_sweep(ckpt.params, probe, w));
  }
  {
    Stage stage(timer, "complement");
    a.complement_ranks = minimal_ranks(a.sweeps);
    if (a.complement_ranks) a.complement_accuracy = complement_ablation(ckpt.params, probe, *a.complement_ranks);
  }

  VerdictInputs in;
  for (const char* name : kTensorNames) in.frequency_sets.push_back(a.frequencies.at(name));
  const auto& fc_sweep = a.sweeps[1];
  if (!fc_sweep.minimal_full_accuracy_rank) {
    in.alignment_failure = "no truncation of W_fc reaches 100% accuracy";
  } else {
    {
      Stage stage(timer, "align");
      a.alignment = assign_pairs(ckpt.params.W_fc, a.basis, *fc_sweep.minimal_full_accuracy_rank);
      a.single = single_ablations(ckpt.params, probe, *a.alignment);
      a.cumulative = cumulative_ablation(ckpt.params, probe, *a.alignment);
    }
    Stage stage(timer, "fit");
    try {
      a.fits = project_and_fit_all(a.stacks.H3_hat, ckpt.hyper.p, *a.alignment);
      in.alignment = a.alignment;
      in.fits = a.fits;
    } catch (const DegenerateFitError& e) {
      in.alignment_failure = e.what();
    }
    if (in.alignment && !a.cumulative.empty()) in.full_ablation_accuracy = a.cumulative.back().accuracy;
  }
  a.verdict = decide_verdict(in, options.verdict);
  return a;
}

json config_json(const Checkpoint& ckpt) {
  const TrainConfig& c = ckpt.config;
  return {{"p", c.p},
          {"d_h", c.d_h},
          {"train_frac", c.train_frac},
          {"lr", c.lr},
          {"weight_decay", c.weight_decay},
          {"decoupled_weight_decay", c.decoupled_weight_decay},
          {"epochs", c.epochs},
          {"seed", c.seed},
          {"log_every", c.log_every},
          {"early_stop_logs", optional_json(c.early_stop_logs)},
          {"epochs_completed", ckpt.epochs_completed},
          {"final_metrics",
           {{"train_loss", ckpt.final_metrics.train_loss},
            {"test_loss", ckpt.final_metrics.test_loss},
            {"train_acc", ckpt.final_metrics.train_acc},
            {"test_acc", ckpt.final_metrics.test_acc}}}};
}

json verdict_json(const Verdict& v, const FullAnalysis& a) {
  json clauses = json::array();
  for (const auto& c : v.clauses) clauses.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
  double worst_fit = 0.0;
  for (const auto& f : a.fits) worst_fit = std::max(worst_fit, f.rel_error());
  json details = {{"frequency_sets", a.frequencies},
                  {"max_fit_rel_error", a.fits.empty() ? json(nullptr) : json(worst_fit)},
                  {"full_ablation_accuracy", a.cumulative.empty() ? json(nullptr) : json(a.cumulative.back().accuracy)}};
  return {{"pass", v.pass}, {"clauses", clauses}, {"details", details}};
}

json report_json(const Checkpoint& ckpt, const FullAnalysis& a, const AnalysisOptions& options) {
  json ranks = json::object();
  for (const auto& s : a.sweeps) {
    ranks[s.matrix_name] = {{"minimal_rank", optional_json(s.minimal_full_accuracy_rank)},
                            {"energy_fraction", optional_json(s.energy_fraction_at_minimal)},
                            {"max_rank", s.sigma.size()},
                            {"baseline_accuracy_full", s.baseline.full},
                            {"baseline_accuracy_test", s.baseline.test}};
  }

  json complement = nullptr;
  if (a.complement_ranks && a.complement_accuracy) {
    json r = json::object();
    for (const auto& [w, rank] : *a.complement_ranks) r[std::string(weight_name(w))] = rank;
    complement = {{"ranks", r},
                  {"accuracy_full", a.complement_accuracy->full},
                  {"accuracy_test", a.complement_accuracy->test}};
  }

  json alignment = nullptr;
  if (a.alignment) {
    json pairs = json::array();
    for (const auto& p : a.alignment->pairs) {
      pairs.push_back({{"pair", p.pair_index},
                       {"components", {p.first_component + 1, p.first_component + 2}},
                       {"sigma", {a.alignment->svd.S[p.first_component], a.alignment->svd.S[p.first_component + 1]}},
                       {"k", p.k},
                       {"energy_share", p.energy_share},
                       {"assigned", p.assigned()}});
    }
    alignment = {{"rank", a.alignment->rank},
                 {"pairs", pairs},
                 {"unpaired_component", a.alignment->unpaired_component
                                            ? json(*a.alignment->unpaired_component + 1)
                                            : json(nullptr)},
                 {"assigned_frequencies", a.alignment->assigned_frequencies()}};
  }

  json single = json::array();
  for (const auto& r : a.single)
    single.push_back({{"k", r.ablated_ks.front()}, {"accuracy", r.accuracy}, {"accuracy_test", r.accuracy_test}});
  json cumulative = json::array();
  for (const auto& r : a.cumulative)
    cumulative.push_back({{"ks", r.ablated_ks}, {"accuracy", r.accuracy}, {"accuracy_test", r.accuracy_test}});

  json fits = json::array();
  for (const auto& f : a.fits) {
    fits.push_back({{"k", f.k},
                    {"pair", f.pair_index},
                    {"alpha", {f.first.alpha, f.second.alpha}},
                    {"beta", {f.first.beta, f.second.beta}},
                    {"rel_error", {f.first.rel_error, f.second.rel_error}},
                    {"condition_number", {f.first.condition_number, f.second.condition_number}}});
  }

  return {{"format", "modgrok-report"},
          {"format_version", 1},
          {"config", config_json(ckpt)},
          {"significance_threshold", options.threshold},
          {"frequency_sets", a.frequencies},
          {"num_frequencies", a.frequencies.at("W_E").size()},
          {"ranks", ranks},
          {"complement", complement},
          {"alignment", alignment},
          {"ablation", {{"single", single}, {"cumulative", cumulative}}},
          {"fits", fits},
          {"verdict", verdict_json(a.verdict, a)}};
}

}  // namespace modgrok::cli
