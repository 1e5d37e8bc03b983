#include "pima/train/trainer.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "pima/error.hpp"
#include "pima/eval/eval.hpp"

namespace pima::train {
namespace {

namespace fs = std::filesystem;

constexpr std::uint64_t kShuffleSalt = 0x5851f42d4c957f2dULL;

void append_field(std::string& out, const char* key, double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, ",\"%s\":%.17g", key, value);
  out += buf;
}

std::string checkpoint_name(std::size_t epoch) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "epoch-%04zu.bin", epoch);
  return buf;
}

void ensure_writable_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory " + dir.string() + ": " + ec.message());
  const fs::path probe = dir / ".write-probe";
  {
    std::ofstream out(probe);
    if (!out) throw Error("output directory is not writable: " + dir.string());
  }
  fs::remove(probe, ec);
}

// Lines of an existing log up to and including `last_epoch`.
std::string kept_log_prefix(const fs::path& log_path, std::size_t last_epoch) {
  std::ifstream in(log_path);
  if (!in) return {};
  std::string kept, line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception&) {
      throw ParseError(log_path.string() + ": malformed log line");
    }
    if (j.value("epoch", std::size_t{0}) <= last_epoch) kept += line + "\n";
  }
  return kept;
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("train: epochs must be at least 1");
  if (batch_size < 1) throw ConfigError("train: batch_size must be at least 1");
  if (checkpoint_every < 1) throw ConfigError("train: checkpoint_every must be at least 1");
  loss.validate();
  optimizer.validate();
  model.validate();
}

std::string EpochMetrics::to_json() const {
  std::string out = "{\"epoch\":" + std::to_string(epoch);
  append_field(out, "loss_total", loss_total);
  append_field(out, "loss_matching", loss_matching);
  append_field(out, "loss_classification", loss_classification);
  append_field(out, "train_f1_cor", train_f1_cor);
  append_field(out, "train_f1_mis", train_f1_mis);
  append_field(out, "train_f1_avg", train_f1_avg);
  if (test_f1_cor) {
    append_field(out, "test_f1_cor", *test_f1_cor);
    append_field(out, "test_f1_mis", *test_f1_mis);
    append_field(out, "test_f1_avg", *test_f1_avg);
  }
  return out + "}";
}

TrainState TrainState::fresh(const TrainConfig& config) {
  TrainState s{model::init_model(config.model, config.seed), {}, Rng(config.seed ^ kShuffleSalt), 0};
  s.optimizer = OptimizerState::for_parameters(s.model.named_parameters(), config.optimizer);
  return s;
}

TrainState TrainState::resume(const Checkpoint& checkpoint, const TrainConfig& config) {
  if (!(checkpoint.model == config.model)) throw ConfigError("resume: checkpoint model widths differ from the config");
  TrainState s{restore_model(checkpoint), checkpoint.optimizer, restore_rng(checkpoint),
               static_cast<std::size_t>(checkpoint.epoch)};
  s.optimizer.config = config.optimizer;
  return s;
}

Checkpoint TrainState::checkpoint(const TrainConfig& config) const {
  return make_checkpoint(model, optimizer, rng, epoch, config.loss, config.objective);
}

EpochMetrics train_epoch(TrainState& state, const std::vector<data::Prescription>& prescriptions,
                         std::span<const model::PreparedSample> samples, const TrainConfig& config) {
  if (samples.size() != prescriptions.size()) throw Error("train_epoch: samples and prescriptions differ in length");
  if (samples.empty()) throw Error("train_epoch: no training samples");
  const auto params = state.model.named_parameters();
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), state.rng);

  EpochMetrics metrics;
  metrics.epoch = state.epoch + 1;
  eval::ConfusionCounts counts;
  std::vector<std::vector<double>> grads(params.size());
  for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
    const std::size_t end = std::min(order.size(), start + config.batch_size);
    for (const auto& p : params) p.tensor.impl()->grad.assign(p.tensor.size(), 0.0);
    for (std::size_t b = start; b < end; ++b) {
      const std::size_t idx = order[b];
      const auto& sample = samples[idx];
      try {
        const auto r = model::forward(state.model, sample, config.loss, config.objective);
        backward(r.total);
        metrics.loss_total += r.total.item();
        metrics.loss_matching += r.matching.item();
        metrics.loss_classification += r.classification.item();
        const auto decisions = alignment::decide_matches(r.similarity, r.g.data(), config.loss.threshold);
        counts += eval::confusion_counts(decisions, prescriptions[idx]);
      } catch (const Error& e) {
        throw Error("training on prescription " + std::to_string(sample.id) + ": " + e.what());
      }
    }
    const double inv = 1.0 / static_cast<double>(end - start);
    for (std::size_t k = 0; k < params.size(); ++k) {
      const auto g = params[k].tensor.grad();
      grads[k].assign(g.begin(), g.end());
      for (double& v : grads[k]) v *= inv;
    }
    adamw_step(params, grads, state.optimizer);
  }
  const double n = static_cast<double>(samples.size());
  metrics.loss_total /= n;
  metrics.loss_matching /= n;
  metrics.loss_classification /= n;
  metrics.train_f1_cor = eval::f1(counts.cor.tp, counts.cor.fp, counts.cor.fn);
  metrics.train_f1_mis = eval::f1(counts.mis.tp, counts.mis.fp, counts.mis.fn);
  metrics.train_f1_avg = (metrics.train_f1_cor + metrics.train_f1_mis) / 2.0;
  ++state.epoch;
  return metrics;
}

FitResult fit(const TrainConfig& config, const std::vector<data::Prescription>& train, const FitOptions& options) {
  config.validate();
  const bool writes = !config.output_dir.empty();
  const fs::path log_path = config.output_dir / "log.jsonl";
  std::ofstream log;
  FitResult result{options.resume ? TrainState::resume(*options.resume, config) : TrainState::fresh(config), {}};
  if (result.state.epoch >= config.epochs) {
    throw ConfigError("resume: checkpoint is at epoch " + std::to_string(result.state.epoch) +
                      ", nothing left to run for " + std::to_string(config.epochs) + " epochs");
  }
  if (writes) {
    ensure_writable_dir(config.output_dir);
    ensure_writable_dir(config.output_dir / "checkpoints");
    const std::string prefix = options.resume ? kept_log_prefix(log_path, result.state.epoch) : std::string();
    log.open(log_path, std::ios::trunc);
    if (!log) throw Error("cannot write " + log_path.string());
    log << prefix;
  }
  const auto samples = model::prepare_samples(train);
  while (result.state.epoch < config.epochs) {
    EpochMetrics m = train_epoch(result.state, train, samples, config);
    if (options.monitor) {
      const auto report = eval::evaluate(result.state.model, *options.monitor, config.loss);
      m.test_f1_cor = report.f1_cor;
      m.test_f1_mis = report.f1_mis;
      m.test_f1_avg = report.f1_avg;
    }
    const std::string line = m.to_json();
    if (writes) {
      log << line << "\n";
      log.flush();
      if (m.epoch % config.checkpoint_every == 0) {
        save_checkpoint(config.output_dir / "checkpoints" / checkpoint_name(m.epoch), result.state.checkpoint(config));
      }
    }
    if (options.progress) *options.progress << line << "\n";
    result.log.push_back(std::move(m));
  }
  if (writes) save_checkpoint(config.output_dir / "checkpoint.bin", result.state.checkpoint(config));
  return result;
}

}  // namespace pima::train
