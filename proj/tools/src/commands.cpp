#include "commands.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "analysis.hpp"
#include "artifacts.hpp"
#include "modgrok/errors.hpp"
#include "plot.hpp"

namespace modgrok::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string join_ks(const std::vector<std::size_t>& ks) {
  std::string out = "{";
  for (std::size_t i = 0; i < ks.size(); ++i) out += (i ? "," : "") + std::to_string(ks[i]);
  return out + "}";
}

std::string pct(double v) {
  std::ostringstream s;
  s.precision(2);
  s << std::fixed << 100.0 * v << '%';
  return s.str();
}

std::string frac_tag(double f) {
  std::ostringstream s;
  s << f;
  return s.str();
}

struct TrainFlags {
  TrainConfig config;
  std::optional<std::size_t> early_stop;

  void add(CLI::App* app, bool with_frac_and_seed) {
    app->add_option("--p", config.p, "Modulus (analysis needs it odd)")->capture_default_str()->check(CLI::Range(2, 100000));
    app->add_option("--hidden", config.d_h, "Hidden and embedding size")->capture_default_str()->check(CLI::Range(2, 1 << 16));
    if (with_frac_and_seed) {
      app->add_option("--frac", config.train_frac, "Training fraction")
          ->capture_default_str()
          ->check(CLI::Range(0.0, 1.0));
      app->add_option("--seed", config.seed, "Seed for split and init")->capture_default_str();
    }
    app->add_option("--lr", config.lr, "Adam learning rate")->capture_default_str()->check(CLI::PositiveNumber);
    app->add_option("--wd", config.weight_decay, "Weight decay")->capture_default_str()->check(CLI::NonNegativeNumber);
    app->add_flag("--decoupled-wd", config.decoupled_weight_decay, "Apply decay to the weights (AdamW) instead of the gradient");
    app->add_option("--epochs", config.epochs, "Full-batch steps")
        ->capture_default_str()
        ->check(CLI::Range(std::size_t{1}, std::numeric_limits<std::size_t>::max()));
    app->add_option("--log-every", config.log_every, "Epochs between metric rows")
        ->capture_default_str()
        ->check(CLI::Range(std::size_t{1}, std::numeric_limits<std::size_t>::max()));
    app->add_option("--early-stop", early_stop, "Stop after this many consecutive perfect test logs");
  }

  TrainConfig resolved() const {
    TrainConfig c = config;
    c.early_stop_logs = early_stop;
    return c;
  }
};

// Prints roughly twenty progress lines per run.
ProgressFn progress_printer(const TrainConfig& c) {
  const std::size_t every = std::max<std::size_t>(c.log_every, c.epochs / 20);
  return [every](const MetricsRow& m) {
    if (m.epoch % every != 0) return;
    std::cerr << "epoch " << m.epoch << "  train_loss " << m.train_loss << "  test_loss " << m.test_loss
              << "  train_acc " << pct(m.train_acc) << "  test_acc " << pct(m.test_acc) << '\n';
  };
}

Checkpoint train_into(Manifest& manifest, const TrainConfig& config, bool quiet) {
  TrainConfig c = config;
  c.checkpoint_path = (manifest.out_dir() / "checkpoint.bin").string();
  const auto start = Clock::now();
  TrainResult r = train(c, quiet ? ProgressFn{} : progress_printer(c));
  manifest.time("train", seconds_since(start));
  manifest.record(c.checkpoint_path);
  manifest.emit("metrics.csv", [&] {
    std::ostringstream s;
    s << "epoch,train_loss,test_loss,train_acc,test_acc\n";
    s.precision(17);
    for (const auto& m : r.history)
      s << m.epoch << ',' << m.train_loss << ',' << m.test_loss << ',' << m.train_acc << ',' << m.test_acc << '\n';
    return s.str();
  }());
  manifest.set("checkpoint", c.checkpoint_path);
  manifest.set("config", config_json(r.checkpoint));
  return std::move(r.checkpoint);
}

void emit_fourier(Manifest& m, const ModelSpectra& s, const std::map<std::string, std::vector<std::size_t>>& sets) {
  m.emit("spectrum_W_E.csv", spectrum_csv(s.W_E));
  m.emit("spectrum_W_fc.csv", spectrum_csv(s.W_fc));
  m.emit("spectrum_H1.csv", spectrum_csv(s.H1));
  m.emit("spectrum_H2.csv", spectrum_csv(s.H2));
  m.emit("spectrum_H3.csv", spectrum_csv(s.H3));
  m.emit("magnitude_H2.csv", magnitude_csv(s.H2));
  m.emit("magnitude_H3.csv", magnitude_csv(s.H3));
  m.emit("frequencies.json", json(sets).dump(2) + '\n');
}

void print_sets(const std::map<std::string, std::vector<std::size_t>>& sets) {
  for (const char* name : {"W_E", "W_fc", "H1", "H2", "H3"}) {
    const auto& ks = sets.at(name);
    std::cout << name << ": " << (ks.empty() ? "no significant frequencies" : join_ks(ks)) << '\n';
  }
}

void print_sweep(const RankSweepResult& s) {
  std::cout << s.matrix_name << ": minimal rank ";
  if (s.minimal_full_accuracy_rank) {
    std::cout << *s.minimal_full_accuracy_rank << " (energy fraction " << *s.energy_fraction_at_minimal << ")\n";
  } else {
    std::cout << "none (no truncation reaches 100%)\n";
  }
}

Alignment align_from_sweep(const Checkpoint& ckpt, const AccuracyProbe& probe, const FourierBasis& basis,
                           RankSweepResult* sweep_out = nullptr) {
  RankSweepResult sweep = rank_sweep(ckpt.params, probe, WeightMatrix::kUnembed);
  if (!sweep.minimal_full_accuracy_rank) throw DomainError("no truncation of W_fc reaches 100% accuracy");
  Alignment a = assign_pairs(ckpt.params.W_fc, basis, *sweep.minimal_full_accuracy_rank);
  if (sweep_out) *sweep_out = std::move(sweep);
  return a;
}

int cmd_analyze(const std::string& which, const std::string& ckpt_path, const fs::path& out, double threshold,
                bool strict) {
  const auto start = Clock::now();
  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  Manifest m(out, "analyze " + which);
  m.set("checkpoint", ckpt_path);
  m.set("config", config_json(ckpt));
  m.time("load", seconds_since(start));
  AnalysisOptions options;
  options.threshold = threshold;
  options.verdict.significance_threshold = threshold;

  if (which == "all") {
    const FullAnalysis a = analyze_all(ckpt, options, [&](const std::string& s, double t) { m.time(s, t); });
    emit_fourier(m, a.spectra, a.frequencies);
    m.emit("rank_sweep.csv", rank_sweep_csv(a.sweeps));
    if (a.complement_ranks) m.emit("complement.csv", complement_csv(*a.complement_ranks, *a.complement_accuracy));
    if (a.alignment) {
      m.emit("alignment.csv", alignment_csv(*a.alignment));
      m.emit("freq_ablation.csv", ablation_csv(a.single, a.cumulative));
    }
    if (!a.fits.empty()) m.emit("fits.csv", fits_csv(a.fits));
    m.emit("verdict.json", verdict_json(a.verdict, a).dump(2) + '\n');
    m.emit("report.json", report_json(ckpt, a, options).dump(2) + '\n');
    m.write();

    print_sets(a.frequencies);
    for (const auto& s : a.sweeps) print_sweep(s);
    if (a.complement_accuracy) std::cout << "complement ablation accuracy: " << pct(a.complement_accuracy->full) << '\n';
    std::cout << "verdict: " << (a.verdict.pass ? "PASS" : "FAIL") << '\n';
    for (const auto& c : a.verdict.clauses) std::cout << "  " << c.name << ": " << (c.pass ? "pass" : "fail") << " (" << c.detail << ")\n";
    return (!a.verdict.pass && strict) ? kExitVerdictFail : kExitOk;
  }

  const FourierBasis basis = build_basis(ckpt.hyper.p);
  if (which == "fourier") {
    const auto t = Clock::now();
    const ModelSpectra s = model_spectra(ckpt.params, ckpt.hyper, basis);
    const auto sets = frequency_sets(s, threshold);
    m.time("fourier", seconds_since(t));
    emit_fourier(m, s, sets);
    m.write();
    print_sets(sets);
    return kExitOk;
  }

  const AccuracyProbe probe(ckpt);
  if (which == "svd") {
    const auto t = Clock::now();
    std::vector<RankSweepResult> sweeps;
    for (WeightMatrix w : kAllWeightMatrices) sweeps.push_back(rank_sweep(ckpt.params, probe, w));
    m.time("svd", seconds_since(t));
    m.emit("rank_sweep.csv", rank_sweep_csv(sweeps));
    m.write();
    for (const auto& s : sweeps) print_sweep(s);
    return kExitOk;
  }

  const auto t = Clock::now();
  const Alignment a = align_from_sweep(ckpt, probe, basis);
  m.time("align", seconds_since(t));
  m.emit("alignment.csv", alignment_csv(a));
  if (which == "fit") {
    const auto tf = Clock::now();
    const auto stacks = hidden_state_stacks(ckpt.params, ckpt.hyper);
    const auto fits = project_and_fit_all(stacks.H3_hat, ckpt.hyper.p, a);
    m.time("fit", seconds_since(tf));
    m.emit("fits.csv", fits_csv(fits));
    for (const auto& f : fits) std::cout << "k=" << f.k << " rel_error " << f.rel_error() << '\n';
  } else {
    for (const auto& p : a.pairs) {
      std::cout << "pair " << p.pair_index << ": k=" << p.k << " share " << p.energy_share
                << (p.assigned() ? "" : " (unassigned)") << '\n';
    }
  }
  m.write();
  return kExitOk;
}

std::map<WeightMatrix, std::size_t> parse_rank_list(const std::vector<std::string>& items) {
  std::map<WeightMatrix, std::size_t> out;
  for (const auto& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw InputError("--ranks entry '" + item + "' is not NAME=RANK");
    const WeightMatrix w = parse_weight_name(item.substr(0, eq));
    try {
      out[w] = std::stoul(item.substr(eq + 1));
    } catch (const std::exception&) {
      throw InputError("--ranks entry '" + item + "' has a non-numeric rank");
    }
  }
  return out;
}

int cmd_plot(const std::vector<std::string>& inputs, const fs::path& out, double threshold) {
  Manifest m(out, "plot");
  for (const auto& input : inputs) {
    std::ifstream in(input, std::ios::binary);
    if (!in) throw FormatError("cannot read " + input);
    std::ostringstream ss;
    ss << in.rdbuf();
    const CsvTable table = parse_csv(ss.str(), input);
    const std::string stem = fs::path(input).stem().string();
    const fs::path written = m.emit(stem + ".svg", render_svg(table, stem, threshold));
    std::cout << written.string() << '\n';
  }
  m.write();
  return kExitOk;
}

struct RunKey {
  double frac;
  std::uint64_t seed;
  auto operator<=>(const RunKey&) const = default;
};

int cmd_replicate(const TrainFlags& flags, const std::vector<double>& fracs, const std::vector<std::uint64_t>& seeds,
                  const fs::path& out, double threshold, bool strict) {
  for (double f : fracs) {
    if (f < 0.3 || f > 0.7) throw InputError("--fracs value " + frac_tag(f) + " outside [0.3, 0.7]");
  }
  std::vector<RunKey> runs;
  std::set<RunKey> seen;
  for (double f : fracs) {
    for (std::uint64_t s : seeds) {
      if (!seen.insert({f, s}).second) {
        std::cerr << "warning: duplicate run frac=" << frac_tag(f) << " seed=" << s << " skipped\n";
        continue;
      }
      runs.push_back({f, s});
    }
  }

  Manifest m(out, "replicate");
  AnalysisOptions options;
  options.threshold = threshold;
  options.verdict.significance_threshold = threshold;
  std::string summary = "frac,seed,test_acc,num_frequencies,rank_W_E,rank_W_fc,rank_W_ih,rank_W_hh,verdict,error\n";
  bool all_pass = true;
  for (const auto& run : runs) {
    const std::string tag = "frac" + frac_tag(run.frac) + "_seed" + std::to_string(run.seed);
    std::cerr << "== " << tag << '\n';
    std::string row = frac_tag(run.frac) + ',' + std::to_string(run.seed) + ',';
    try {
      TrainConfig c = flags.resolved();
      c.train_frac = run.frac;
      c.seed = run.seed;
      Manifest sub(out / tag, "replicate " + tag);
      const Checkpoint ckpt = train_into(sub, c, false);
      const FullAnalysis a = analyze_all(ckpt, options, [&](const std::string& s, double t) { sub.time(s, t); });
      sub.emit("report.json", report_json(ckpt, a, options).dump(2) + '\n');
      sub.write();
      m.record(out / tag / "report.json");
      m.time(tag, 0.0);
      row += std::to_string(ckpt.final_metrics.test_acc) + ',' + std::to_string(a.frequencies.at("W_E").size());
      for (const auto& s : a.sweeps) {
        row += ',' + (s.minimal_full_accuracy_rank ? std::to_string(*s.minimal_full_accuracy_rank) : std::string("NA"));
      }
      row += std::string(",") + (a.verdict.pass ? "PASS" : "FAIL") + ",\n";
      all_pass = all_pass && a.verdict.pass;
    } catch (const std::exception& e) {
      std::string msg = e.what();
      std::replace(msg.begin(), msg.end(), ',', ';');
      row += "NA,NA,NA,NA,NA,NA,ERROR," + msg + '\n';
      all_pass = false;
      std::cerr << "error in " << tag << ": " << e.what() << '\n';
    }
    summary += row;
  }
  m.emit("replicate.csv", summary);
  m.write();
  std::cout << summary;
  return (!all_pass && strict) ? kExitVerdictFail : kExitOk;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Train and dissect RNNs on modular addition"};
  app.set_config("--config", "", "TOML/INI file with option defaults (flags override it)");
  app.set_version_flag("--version", std::string(MODGROK_VERSION));
  app.require_subcommand(1);

  std::string out = "modgrok-out";
  double threshold = kDefaultSignificanceThreshold;
  bool strict = false;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out", out, "Output directory")->capture_default_str();
  };
  auto add_threshold = [&](CLI::App* sub) {
    sub->add_option("--threshold", threshold, "Significance threshold on non-DC energy share")
        ->capture_default_str()
        ->check(CLI::Range(0.0, 1.0));
  };

  TrainFlags train_flags;
  CLI::App* train_cmd = app.add_subcommand("train", "Train one model and write checkpoint.bin and metrics.csv");
  train_flags.add(train_cmd, true);
  add_common(train_cmd);
  bool quiet = false;
  train_cmd->add_flag("--quiet", quiet, "No progress output");

  std::string which;
  std::string ckpt_path;
  CLI::App* analyze_cmd = app.add_subcommand("analyze", "Spectral, low-rank and alignment analyses of a checkpoint");
  analyze_cmd->add_option("which", which, "fourier | svd | align | fit | all")
      ->required()
      ->check(CLI::IsMember({"fourier", "svd", "align", "fit", "all"}));
  analyze_cmd->add_option("--checkpoint", ckpt_path, "Checkpoint file")->required();
  add_common(analyze_cmd);
  add_threshold(analyze_cmd);
  analyze_cmd->add_flag("--strict", strict, "Exit 3 when the verdict fails");

  CLI::App* ablate_cmd = app.add_subcommand("ablate", "Ablation experiments");
  ablate_cmd->require_subcommand(1);
  ablate_cmd->add_option("--checkpoint", ckpt_path, "Checkpoint file")->required();
  add_common(ablate_cmd);
  CLI::App* ablate_freq = ablate_cmd->add_subcommand("freq", "Remove W_fc singular pairs by frequency");
  bool all_freqs = false;
  std::vector<std::size_t> ks;
  auto* all_opt = ablate_freq->add_flag("--all", all_freqs, "Single and cumulative ablation of every assigned frequency");
  auto* ks_opt = ablate_freq->add_option("--k", ks, "Frequencies to remove together")->delimiter(',');
  all_opt->excludes(ks_opt);
  CLI::App* ablate_rank = ablate_cmd->add_subcommand("rank", "Rank-r truncation sweep");
  std::string matrix = "W_fc";
  ablate_rank->add_option("--matrix", matrix, "W_E | W_fc | W_ih | W_hh | all")
      ->capture_default_str()
      ->check(CLI::IsMember({"W_E", "W_fc", "W_ih", "W_hh", "all"}));
  CLI::App* ablate_complement = ablate_cmd->add_subcommand("complement", "Keep only components beyond given ranks");
  bool auto_ranks = false;
  std::vector<std::string> rank_list;
  auto* auto_opt = ablate_complement->add_flag("--auto", auto_ranks, "Use each matrix's minimal full-accuracy rank");
  auto* ranks_opt = ablate_complement->add_option("--ranks", rank_list, "NAME=RANK,...")->delimiter(',');
  auto_opt->excludes(ranks_opt);

  CLI::App* plot_cmd = app.add_subcommand("plot", "Render CSV artifacts as SVG charts");
  std::vector<std::string> inputs;
  plot_cmd->add_option("csv", inputs, "CSV files written by train/analyze/ablate")->required()->check(CLI::ExistingFile);
  add_common(plot_cmd);
  add_threshold(plot_cmd);

  CLI::App* replicate_cmd = app.add_subcommand("replicate", "Train and analyze across training fractions and seeds");
  TrainFlags rep_flags;
  rep_flags.add(replicate_cmd, false);
  std::vector<double> fracs;
  std::vector<std::uint64_t> seeds{0};
  replicate_cmd->add_option("--fracs", fracs, "Training fractions in [0.3, 0.7]")->required()->delimiter(',');
  replicate_cmd->add_option("--seeds", seeds, "Seeds")->delimiter(',')->capture_default_str();
  add_common(replicate_cmd);
  add_threshold(replicate_cmd);
  replicate_cmd->add_flag("--strict", strict, "Exit 3 when any run fails");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*train_cmd) {
      const TrainConfig c = train_flags.resolved();
      c.validate();
      Manifest m(out, "train");
      const Checkpoint ckpt = train_into(m, c, quiet);
      m.write();
      std::cout << "epochs " << ckpt.epochs_completed << "  train_acc " << pct(ckpt.final_metrics.train_acc)
                << "  test_acc " << pct(ckpt.final_metrics.test_acc) << "  test_loss " << ckpt.final_metrics.test_loss
                << '\n'
                << "training pairs " << train_size(c.p * c.p, c.train_frac) << "\ncheckpoint "
                << (fs::path(out) / "checkpoint.bin").string() << '\n';
      return kExitOk;
    }
    if (*analyze_cmd) return cmd_analyze(which, ckpt_path, out, threshold, strict);
    if (*ablate_cmd) {
      const Checkpoint ckpt = load_checkpoint(ckpt_path);
      const AccuracyProbe probe(ckpt);
      Manifest m(out, "ablate");
      m.set("checkpoint", ckpt_path);
      const auto t = Clock::now();
      if (*ablate_freq) {
        if (!all_freqs && ks.empty()) throw InputError("ablate freq needs --all or --k");
        const FourierBasis basis = build_basis(ckpt.hyper.p);
        const Alignment a = align_from_sweep(ckpt, probe, basis);
        if (all_freqs) {
          const auto single = single_ablations(ckpt.params, probe, a);
          const auto cumulative = cumulative_ablation(ckpt.params, probe, a);
          m.emit("freq_ablation.csv", ablation_csv(single, cumulative));
          for (std::size_t i = 0; i < single.size(); ++i) {
            std::cout << "k=" << single[i].ablated_ks.front() << "  single " << pct(single[i].accuracy)
                      << "  cumulative " << pct(cumulative[i].accuracy) << '\n';
          }
        } else {
          const auto r = ablate_frequency(ckpt.params, probe, a, ks, AblationMode::kCumulative);
          m.emit("ablate_freq.csv", "ks,accuracy_full,accuracy_test\n" + [&] {
            std::string s;
            for (std::size_t i = 0; i < ks.size(); ++i) s += (i ? " " : "") + std::to_string(ks[i]);
            std::ostringstream o;
            o.precision(17);
            o << s << ',' << r.accuracy << ',' << r.accuracy_test << '\n';
            return o.str();
          }());
          std::cout << "accuracy after removing " << join_ks(ks) << ": " << pct(r.accuracy) << '\n';
        }
      } else if (*ablate_rank) {
        std::vector<RankSweepResult> sweeps;
        for (WeightMatrix w : kAllWeightMatrices) {
          if (matrix == "all" || weight_name(w) == matrix) sweeps.push_back(rank_sweep(ckpt.params, probe, w));
        }
        m.emit("rank_sweep" + (matrix == "all" ? std::string() : "_" + matrix) + ".csv", rank_sweep_csv(sweeps));
        for (const auto& s : sweeps) print_sweep(s);
      } else {
        std::map<WeightMatrix, std::size_t> ranks;
        if (auto_ranks) {
          std::vector<RankSweepResult> sweeps;
          for (WeightMatrix w : kAllWeightMatrices) sweeps.push_back(rank_sweep(ckpt.params, probe, w));
          const auto found = minimal_ranks(sweeps);
          if (!found) throw DomainError("--auto: some matrix never reaches 100% accuracy under truncation");
          ranks = *found;
        } else {
          if (rank_list.empty()) throw InputError("ablate complement needs --auto or --ranks");
          ranks = parse_rank_list(rank_list);
        }
        const AccuracyPair acc = complement_ablation(ckpt.params, probe, ranks);
        m.emit("complement.csv", complement_csv(ranks, acc));
        std::cout << "complement ablation accuracy: " << pct(acc.full) << " (test " << pct(acc.test) << ")\n";
      }
      m.time("ablate", seconds_since(t));
      m.write();
      return kExitOk;
    }
    if (*plot_cmd) return cmd_plot(inputs, out, threshold);
    if (*replicate_cmd) return cmd_replicate(rep_flags, fracs, seeds, out, threshold, strict);
  } catch (const InputError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const RangeError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const UnsupportedError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace modgrok::cli
