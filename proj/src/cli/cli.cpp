#include "pima/cli/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "pima/cli/config.hpp"
#include "pima/data/io.hpp"
#include "pima/error.hpp"
#include "pima/eval/eval.hpp"
#include "pima/graph/layout.hpp"
#include "pima/train/checkpoint.hpp"
#include "pima/train/trainer.hpp"

namespace pima::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct UsageError : Error {
  using Error::Error;
};

struct OutputExists : Error {
  using Error::Error;
};

void claim_output(const fs::path& path, bool force) {
  if (fs::exists(path) && !force) throw OutputExists(path.string() + " already exists (pass --force to overwrite)");
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed: " + path.string());
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

RunConfig base_config(const std::string& config_path) {
  return config_path.empty() ? RunConfig{} : load_run_config(config_path);
}

std::string config_footer() {
  return "\nConfig file (--config) keys and defaults:\n" + to_json(RunConfig{});
}

// generate ------------------------------------------------------------------

struct GenerateArgs {
  std::string config, out;
  std::optional<std::uint64_t> seed;
  std::optional<int> num_classes, num_prescriptions;
  bool force = false;
};

void cmd_generate(const GenerateArgs& a, std::ostream&, std::ostream& err) {
  RunConfig c = base_config(a.config);
  if (a.seed) c.data_seed = *a.seed;
  if (a.num_classes) c.data.num_classes = *a.num_classes;
  if (a.num_prescriptions) c.data.num_prescriptions = *a.num_prescriptions;
  claim_output(a.out, a.force);
  const data::Dataset ds = data::generate_dataset(c.data, c.data_seed);
  data::save_dataset(a.out, ds);
  err << "generated " << ds.prescriptions.size() << " prescriptions over " << ds.classes.size() << " classes in "
      << a.out << "\n";
}

// split ---------------------------------------------------------------------

struct SplitArgs {
  std::string config, data, out, scenario;
  std::uint64_t seed = 0;
  bool force = false;
};

void cmd_split(const SplitArgs& a, std::ostream&, std::ostream& err) {
  RunConfig c = base_config(a.config);
  if (!a.scenario.empty()) c.scenario = data::parse_scenario(a.scenario);
  claim_output(a.out, a.force);
  const data::Dataset ds = data::load_dataset(a.data);
  const data::SplitDataset split = data::make_split(ds, c.scenario, a.seed);
  data::save_split(a.out, split);
  err << "split " << data::to_string(c.scenario) << ": " << split.train.size() << " train, " << split.test.size()
      << " test prescriptions in " << a.out << "\n";
}

// train ---------------------------------------------------------------------

struct TrainArgs {
  std::string config, data, out, resume, objective;
  std::optional<std::size_t> epochs, batch_size, checkpoint_every;
  std::optional<std::uint64_t> seed;
  std::optional<double> lr, weight_decay;
  bool no_graph = false, monitor = false, force = false;
};

void cmd_train(const TrainArgs& a, std::ostream&, std::ostream& err) {
  RunConfig c = base_config(a.config);
  if (a.epochs) c.train.epochs = *a.epochs;
  if (a.batch_size) c.train.batch_size = *a.batch_size;
  if (a.checkpoint_every) c.train.checkpoint_every = *a.checkpoint_every;
  if (a.seed) c.train.seed = *a.seed;
  if (a.lr) c.train.optimizer.lr = *a.lr;
  if (a.weight_decay) c.train.optimizer.weight_decay = *a.weight_decay;
  if (!a.objective.empty()) c.train.objective = model::parse_objective(a.objective);
  if (a.no_graph) c.model.use_graph = false;
  claim_output(a.out, a.force);
  std::optional<train::Checkpoint> resume;
  if (!a.resume.empty()) resume = train::load_checkpoint(a.resume);

  const data::SplitDataset split = data::load_split(a.data);
  c.model.vocab_size = split.vocab.size();
  c.model.feature_width = static_cast<std::size_t>(split.config.feature_dim);
  train::TrainConfig tc = c.training();
  tc.output_dir = a.out;
  tc.validate();

  train::FitOptions options;
  options.resume = std::move(resume);
  options.progress = &err;
  if (a.monitor) options.monitor = &split.test;
  train::fit(tc, split.train, options);
  split.vocab.save(fs::path(a.out) / "vocab.tsv");
  write_text(fs::path(a.out) / "config.json", to_json(c));
}

// eval ----------------------------------------------------------------------

struct EvalArgs {
  std::string checkpoint, data, part = "test", report, csv;
  std::optional<double> threshold;
  bool force = false;
};

void check_compatible(const model::ModelConfig& m, const data::SplitDataset& split) {
  if (m.vocab_size != split.vocab.size()) {
    throw ShapeError("checkpoint vocabulary has " + std::to_string(m.vocab_size) + " tokens, split has " +
                     std::to_string(split.vocab.size()));
  }
  if (m.feature_width != static_cast<std::size_t>(split.config.feature_dim)) {
    throw ShapeError("checkpoint expects " + std::to_string(m.feature_width) + " pill features, split has " +
                     std::to_string(split.config.feature_dim));
  }
}

void cmd_eval(const EvalArgs& a, std::ostream&, std::ostream& err) {
  if (a.part != "test" && a.part != "train") throw UsageError("--split must be test or train");
  claim_output(a.report, a.force);
  if (!a.csv.empty()) claim_output(a.csv, a.force);
  const train::Checkpoint ck = train::load_checkpoint(a.checkpoint);
  const data::SplitDataset split = data::load_split(a.data);
  check_compatible(ck.model, split);
  alignment::LossConfig loss = ck.loss;
  if (a.threshold) loss.threshold = *a.threshold;
  const model::Model m = train::restore_model(ck);
  const eval::MatchReport report = eval::evaluate(m, a.part == "test" ? split.test : split.train, loss);
  write_text(a.report, report.to_json());
  if (!a.csv.empty()) write_text(a.csv, report.to_csv());
  err << std::setprecision(6) << "F1(Cor) " << report.f1_cor << "  F1(Mis) " << report.f1_mis << "  F1(Avg) "
      << report.f1_avg << "\n";
}

// match ---------------------------------------------------------------------

struct MatchArgs {
  std::string checkpoint, prescription, pills, vocab;
};

data::Prescription read_single_prescription(const fs::path& path) {
  const json j = read_json_file(path);
  const json* boxes = j.is_array() ? &j : (j.is_object() && j.contains("boxes") ? &j.at("boxes") : nullptr);
  if (!boxes || !boxes->is_array()) throw ParseError(path.string() + ": expected {\"boxes\": [...]}");
  data::Prescription p;
  p.id = j.is_object() ? j.value("id", 0) : 0;
  for (std::size_t i = 0; i < boxes->size(); ++i) {
    const json& b = (*boxes)[i];
    const std::string where = path.string() + ": boxes[" + std::to_string(i) + "]";
    if (!b.is_object() || !b.contains("bbox") || !b.contains("text")) throw ParseError(where + ": needs bbox and text");
    const auto& bb = b.at("bbox");
    if (!bb.is_array() || bb.size() != 4) throw ParseError(where + ".bbox: expected 4 numbers");
    graph::TextBox box;
    box.id = static_cast<int>(i);
    try {
      box.bbox = {bb[0].get<double>(), bb[1].get<double>(), bb[2].get<double>(), bb[3].get<double>()};
      box.text = b.at("text").get<std::string>();
    } catch (const json::exception& e) {
      throw ParseError(where + ": " + e.what());
    }
    if (!box.bbox.valid()) throw ParseError(where + ".bbox: requires x_min < x_max and y_min < y_max");
    p.boxes.push_back(std::move(box));
  }
  return p;
}

std::vector<encoders::PillFeatureRecord> read_pill_records(const fs::path& path) {
  const json j = read_json_file(path);
  const json* list = j.is_array() ? &j : (j.is_object() && j.contains("pills") ? &j.at("pills") : nullptr);
  if (!list || !list->is_array()) throw ParseError(path.string() + ": expected a list of {id, features}");
  std::vector<encoders::PillFeatureRecord> out;
  for (std::size_t i = 0; i < list->size(); ++i) {
    const json& q = (*list)[i];
    encoders::PillFeatureRecord r;
    try {
      const json& id = q.at("id");
      r.id = id.is_string() ? id.get<std::string>() : id.dump();
      r.features = q.at("features").get<std::vector<double>>();
    } catch (const json::exception& e) {
      throw ParseError(path.string() + ": pills[" + std::to_string(i) + "]: " + e.what());
    }
    out.push_back(std::move(r));
  }
  if (out.empty()) throw ParseError(path.string() + ": no pills");
  return out;
}

void cmd_match(const MatchArgs& a, std::ostream& out, std::ostream&) {
  const train::Checkpoint ck = train::load_checkpoint(a.checkpoint);
  const fs::path vocab_path = a.vocab.empty() ? fs::path(a.checkpoint).parent_path() / "vocab.tsv" : fs::path(a.vocab);
  const encoders::Vocabulary vocab = encoders::Vocabulary::load(vocab_path);
  if (vocab.size() != ck.model.vocab_size) {
    throw ShapeError("vocabulary " + vocab_path.string() + " has " + std::to_string(vocab.size()) +
                     " tokens, checkpoint expects " + std::to_string(ck.model.vocab_size));
  }
  data::Prescription p = read_single_prescription(a.prescription);
  const auto records = read_pill_records(a.pills);
  for (std::size_t i = 0; i < records.size(); ++i) {
    data::Pill pill;
    pill.id = static_cast<int>(i);
    pill.features = encoders::ingest_pill_features(records[i], ck.model.feature_width);
    p.pills.push_back(std::move(pill));
  }
  std::vector<data::Prescription> one{std::move(p)};
  data::tokenize_boxes(one, vocab);
  const model::Model m = train::restore_model(ck);
  const auto decisions = model::predict(m, model::prepare_sample(one.front()), ck.loss);
  out << std::fixed << std::setprecision(4);
  for (const auto& d : decisions) {
    out << "pill " << records[d.pill].id << ": ";
    if (d.box) {
      out << "box " << *d.box << " " << json(one.front().boxes[static_cast<std::size_t>(*d.box)].text).dump()
          << " (similarity " << d.max_similarity << ")\n";
    } else if (d.best_box >= 0) {
      out << "not in prescription (best box " << d.best_box << ", similarity " << d.max_similarity << ")\n";
    } else {
      out << "not in prescription (no boxes)\n";
    }
  }
}

// inspect-graph -------------------------------------------------------------

struct InspectArgs {
  std::string data;
  int sample = 0;
};

void cmd_inspect_graph(const InspectArgs& a, std::ostream& out, std::ostream&) {
  const json meta = read_json_file(fs::path(a.data) / "meta.json");
  const std::string format = meta.is_object() ? meta.value("format", "") : "";
  std::optional<data::Prescription> found;
  if (format == "pima-dataset") {
    const data::Dataset ds = data::load_dataset(a.data);
    found = ds.prescription(a.sample);
  } else if (format == "pima-split") {
    const data::SplitDataset s = data::load_split(a.data);
    for (const auto* part : {&s.train, &s.test}) {
      for (const auto& p : *part) {
        if (p.id == a.sample) found = p;
      }
    }
    if (!found) throw Error("no prescription with id " + std::to_string(a.sample) + " in " + a.data);
  } else {
    throw ParseError(a.data + ": not a dataset or split directory");
  }
  const auto& p = *found;
  const graph::LayoutGraph g = graph::build_layout_graph(std::span<const graph::TextBox>(p.boxes));
  out << "prescription " << p.id << ": " << g.num_nodes() << " nodes, " << g.edges().size() << " edges\n";
  out << "edges\n";
  for (const auto& [i, j] : g.edges()) out << i << " " << j << "\n";
  out << "degrees\n";
  for (std::size_t v = 0; v < g.num_nodes(); ++v) {
    out << v << " " << g.degree(static_cast<int>(v)) << " " << json(p.boxes[v].text).dump() << "\n";
  }
}

std::string one_line(std::string s) {
  for (char& ch : s) {
    if (ch == '\n' || ch == '\r') ch = ' ';
  }
  return s;
}

int report_error(std::ostream& err, const char* kind, const std::string& message, int code) {
  err << "error: " << kind << ": " << one_line(message) << "\n";
  return code;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Pill-prescription matching: synthetic data, training and evaluation", "pima"};
  app.require_subcommand(1);
  app.footer(config_footer());
  app.set_help_all_flag("--help-all", "Print help for every command");

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Generate a synthetic prescription dataset");
  generate->add_option("--config", gen.config, "JSON run config");
  generate->add_option("--out", gen.out, "Output dataset directory")->required();
  generate->add_option("--seed", gen.seed, "Generator seed (overrides data.seed; default 0)");
  generate->add_option("--num-classes", gen.num_classes, "Number of pill classes (default 40)");
  generate->add_option("--num-prescriptions", gen.num_prescriptions, "Number of prescriptions (default 200)");
  generate->add_flag("--force", gen.force, "Overwrite an existing output");

  SplitArgs sp;
  auto* split = app.add_subcommand("split", "Split a dataset for one evaluation scenario");
  split->add_option("--config", sp.config, "JSON run config");
  split->add_option("--data", sp.data, "Dataset directory")->required();
  split->add_option("--scenario", sp.scenario, "1-1, 1-2, 1-3, 2-1 or 2-2 (default: config scenario, else 1-1)")
      ->check(CLI::IsMember({"1-1", "1-2", "1-3", "2-1", "2-2"}));
  split->add_option("--seed", sp.seed, "Split seed")->capture_default_str();
  split->add_option("--out", sp.out, "Output split directory")->required();
  split->add_flag("--force", sp.force, "Overwrite an existing output");

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train a model on the train part of a split");
  train_cmd->add_option("--config", tr.config, "JSON run config");
  train_cmd->add_option("--data", tr.data, "Split directory")->required();
  train_cmd->add_option("--out", tr.out, "Output run directory")->required();
  train_cmd->add_option("--epochs", tr.epochs, "Epochs (default 200)");
  train_cmd->add_option("--batch-size", tr.batch_size, "Prescriptions per optimizer step (default 4)");
  train_cmd->add_option("--lr", tr.lr, "Learning rate (default 0.001)");
  train_cmd->add_option("--weight-decay", tr.weight_decay, "Decoupled weight decay (default 0.01)");
  train_cmd->add_option("--seed", tr.seed, "Initialization and shuffle seed (default 0)");
  train_cmd->add_option("--objective", tr.objective, "Matching term: pima or clip (default pima)")
      ->check(CLI::IsMember({"pima", "clip"}));
  train_cmd->add_option("--checkpoint-every", tr.checkpoint_every, "Epochs between checkpoints (default 10)");
  train_cmd->add_flag("--no-graph", tr.no_graph, "Disable the pseudo-classifier (every box weighted 1)");
  train_cmd->add_flag("--monitor", tr.monitor, "Evaluate the test part after every epoch");
  train_cmd->add_option("--resume", tr.resume, "Continue from a checkpoint");
  train_cmd->add_flag("--force", tr.force, "Write into an existing output directory");
  train_cmd->footer(config_footer());

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a split");
  eval_cmd->add_option("--checkpoint", ev.checkpoint, "Checkpoint file")->required();
  eval_cmd->add_option("--data", ev.data, "Split directory")->required();
  eval_cmd->add_option("--split", ev.part, "Which part to evaluate: test or train")->capture_default_str();
  eval_cmd->add_option("--report", ev.report, "Output JSON report")->required();
  eval_cmd->add_option("--csv", ev.csv, "Optional per-pill CSV");
  eval_cmd->add_option("--threshold", ev.threshold, "Match threshold (default: the checkpoint's, 0.8)");
  eval_cmd->add_flag("--force", ev.force, "Overwrite existing outputs");

  MatchArgs ma;
  auto* match = app.add_subcommand("match", "Match pills against one prescription");
  match->add_option("--checkpoint", ma.checkpoint, "Checkpoint file")->required();
  match->add_option("--prescription", ma.prescription, "JSON {\"boxes\": [{\"bbox\", \"text\"}]}")->required();
  match->add_option("--pills", ma.pills, "JSON [{\"id\", \"features\"}]")->required();
  match->add_option("--vocab", ma.vocab, "Vocabulary TSV (default: vocab.tsv next to the checkpoint)");

  InspectArgs in;
  auto* inspect = app.add_subcommand("inspect-graph", "Print the layout graph of one prescription");
  inspect->add_option("--data", in.data, "Dataset or split directory")->required();
  inspect->add_option("--sample", in.sample, "Prescription id")->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    return report_error(err, "usage", e.what(), kUsageError);
  }
  for (auto* sub : app.get_subcommands()) {
    if (sub->get_help_ptr() && sub->get_help_ptr()->count() > 0) {
      out << sub->help();
      return kOk;
    }
  }

  try {
    if (generate->parsed()) cmd_generate(gen, out, err);
    else if (split->parsed()) cmd_split(sp, out, err);
    else if (train_cmd->parsed()) cmd_train(tr, out, err);
    else if (eval_cmd->parsed()) cmd_eval(ev, out, err);
    else if (match->parsed()) cmd_match(ma, out, err);
    else if (inspect->parsed()) cmd_inspect_graph(in, out, err);
  } catch (const UsageError& e) {
    return report_error(err, "usage", e.what(), kUsageError);
  } catch (const ConfigError& e) {
    return report_error(err, "config", e.what(), kUsageError);
  } catch (const OutputExists& e) {
    return report_error(err, "exists", e.what(), kRuntimeError);
  } catch (const ParseError& e) {
    return report_error(err, "parse", e.what(), kRuntimeError);
  } catch (const ShapeError& e) {
    return report_error(err, "shape", e.what(), kRuntimeError);
  } catch (const NumericError& e) {
    return report_error(err, "numeric", e.what(), kRuntimeError);
  } catch (const Error& e) {
    return report_error(err, "runtime", e.what(), kRuntimeError);
  } catch (const std::exception& e) {
    return report_error(err, "runtime", e.what(), kRuntimeError);
  }
  return kOk;
}

}  // namespace pima::cli
