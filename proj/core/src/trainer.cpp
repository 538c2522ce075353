#include "modgrok/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <utility>

#include "modgrok/errors.hpp"

namespace modgrok {
namespace {

MetricsRow measure(const ModelParams& params, const Hyper& hyper, const Dataset& data, std::size_t epoch) {
  const Evaluation tr = evaluate(params, hyper, data.train.pairs, data.train.targets);
  const Evaluation te = evaluate(params, hyper, data.test.pairs, data.test.targets);
  return {epoch, tr.loss, te.loss, tr.accuracy, te.accuracy};
}

}  // namespace

LabeledPairs LabeledPairs::subset(std::span<const std::size_t> indices) const {
  LabeledPairs out;
  out.pairs.reserve(indices.size());
  out.targets.reserve(indices.size());
  for (std::size_t i : indices) {
    out.pairs.push_back(pairs.at(i));
    out.targets.push_back(targets.at(i));
  }
  return out;
}

LabeledPairs gen_dataset(std::size_t p) {
  if (p < 2) throw InputError("modulus p must be at least 2, got " + std::to_string(p));
  LabeledPairs out;
  out.pairs.reserve(p * p);
  out.targets.reserve(p * p);
  for (std::size_t a = 0; a < p; ++a) {
    for (std::size_t b = 0; b < p; ++b) {
      out.pairs.push_back({static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b)});
      out.targets.push_back(static_cast<std::uint32_t>((a + b) % p));
    }
  }
  return out;
}

std::size_t train_size(std::size_t n, double frac) {
  return static_cast<std::size_t>(std::llround(frac * static_cast<double>(n)));
}

Split split(std::size_t n, double frac, SeededRng& rng) {
  if (!(frac > 0.0 && frac < 1.0)) throw InputError("train fraction must lie in (0, 1), got " + std::to_string(frac));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.next_below(i));
    std::swap(order[i - 1], order[j]);
  }
  const std::size_t n_train = train_size(n, frac);
  Split s;
  s.train_idx.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.test_idx.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  std::sort(s.train_idx.begin(), s.train_idx.end());
  std::sort(s.test_idx.begin(), s.test_idx.end());
  return s;
}

Dataset make_dataset(std::size_t p, double frac, std::uint64_t seed) {
  Dataset d;
  d.all = gen_dataset(p);
  SeededRng rng(derive_seed(seed, SeedStream::kSplit));
  d.split = split(d.all.size(), frac, rng);
  d.train = d.all.subset(d.split.train_idx);
  d.test = d.all.subset(d.split.test_idx);
  return d;
}

void TrainConfig::validate() const {
  hyper().validate();
  if (!(train_frac > 0.0 && train_frac < 1.0)) throw InputError("train_frac must lie in (0, 1)");
  if (!(lr > 0.0) || !std::isfinite(lr)) throw InputError("lr must be positive");
  if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay)) throw InputError("weight_decay must be non-negative");
  if (epochs < 1) throw InputError("epochs must be at least 1");
  if (log_every < 1) throw InputError("log_every must be at least 1");
}

AdamState AdamState::zeros(const Hyper& hyper) {
  AdamState s;
  s.m = ModelParams::zeros(hyper);
  s.v = ModelParams::zeros(hyper);
  return s;
}

void adam_step(ModelParams& params, const Gradients& grads, AdamState& state, double lr, double weight_decay,
               bool decoupled) {
  auto w = tensors(params);
  auto g = tensors(grads);
  auto m = tensors(state.m);
  auto v = tensors(state.v);
  for (std::size_t k = 0; k < w.size(); ++k) {
    if (w[k].values.size() != g[k].values.size() || w[k].values.size() != m[k].values.size() ||
        w[k].values.size() != v[k].values.size()) {
      throw ShapeError("adam_step: size mismatch in tensor " + std::string(w[k].name));
    }
  }

  state.t += 1;
  const double t = static_cast<double>(state.t);
  const double bc1 = 1.0 - std::pow(state.beta1, t);
  const double bc2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t k = 0; k < w.size(); ++k) {
    auto wk = w[k].values;
    auto gk = g[k].values;
    auto mk = m[k].values;
    auto vk = v[k].values;
    for (std::size_t i = 0; i < wk.size(); ++i) {
      const double gi = decoupled ? gk[i] : gk[i] + weight_decay * wk[i];
      mk[i] = state.beta1 * mk[i] + (1.0 - state.beta1) * gi;
      vk[i] = state.beta2 * vk[i] + (1.0 - state.beta2) * gi * gi;
      const double m_hat = mk[i] / bc1;
      const double v_hat = vk[i] / bc2;
      wk[i] -= lr * m_hat / (std::sqrt(v_hat) + state.eps);
      if (decoupled) wk[i] -= lr * weight_decay * wk[i];
    }
  }
}

TrainResult train(const TrainConfig& config, const ProgressFn& progress) {
  config.validate();
  const Hyper hyper = config.hyper();
  const Dataset data = make_dataset(config.p, config.train_frac, config.seed);

  SeededRng init_rng(derive_seed(config.seed, SeedStream::kInit));
  ModelParams params = init_params(hyper, init_rng);
  AdamState adam = AdamState::zeros(hyper);

  TrainResult result;
  auto log = [&](std::size_t epoch) {
    result.history.push_back(measure(params, hyper, data, epoch));
    if (progress) progress(result.history.back());
  };

  log(0);
  std::size_t perfect_streak = 0;
  std::size_t epoch = 0;
  while (epoch < config.epochs) {
    LossAndGrads lg = loss_and_grads(params, hyper, data.train.pairs, data.train.targets);
    adam_step(params, lg.grads, adam, config.lr, config.weight_decay, config.decoupled_weight_decay);
    ++epoch;
    if (epoch % config.log_every == 0 || epoch == config.epochs) {
      log(epoch);
      if (config.early_stop_logs) {
        perfect_streak = result.history.back().test_acc == 1.0 ? perfect_streak + 1 : 0;
        if (perfect_streak >= *config.early_stop_logs) break;
      }
    }
  }
  if (!params.all_finite()) throw DomainError("training diverged: non-finite parameters");

  Checkpoint& ckpt = result.checkpoint;
  ckpt.hyper = hyper;
  ckpt.params = std::move(params);
  ckpt.config = config;
  ckpt.final_metrics = result.history.back();
  ckpt.epochs_completed = epoch;
  ckpt.history = result.history;
  if (!config.checkpoint_path.empty()) save_checkpoint(ckpt, config.checkpoint_path);
  return result;
}

void write_metrics_csv(std::span<const MetricsRow> history, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw PersistenceError("cannot open metrics file for writing: " + path);
  out.precision(17);
  out << "epoch,train_loss,test_loss,train_acc,test_acc\n";
  for (const auto& r : history) {
    out << r.epoch << ',' << r.train_loss << ',' << r.test_loss << ',' << r.train_acc << ',' << r.test_acc << '\n';
  }
  if (!out) throw PersistenceError("failed writing metrics file: " + path);
}

}  // namespace modgrok
