#include "pima/data/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "pima/error.hpp"

namespace pima::data {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr int kFormatVersion = 1;

void append_number(std::string& out, double v) {
  char buf[32];
  const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
  out.append(buf, static_cast<std::size_t>(n));
}

void append_numbers(std::string& out, std::span<const double> values) {
  out += '[';
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    append_number(out, values[i]);
  }
  out += ']';
}

// Field access with line/field context in the error.
class RecordReader {
 public:
  RecordReader(std::string source, std::size_t line) : source_(std::move(source)), line_(line) {}

  [[noreturn]] void fail(const std::string& field, const std::string& what) const {
    throw ParseError(source_ + ":" + std::to_string(line_) + ": field '" + field + "': " + what);
  }

  const json& get(const json& obj, const char* key, const std::string& path) const {
    if (!obj.is_object()) fail(path, "expected an object");
    const auto it = obj.find(key);
    if (it == obj.end()) fail(path + key, "missing");
    return *it;
  }
  int integer(const json& obj, const char* key, const std::string& path) const {
    const json& v = get(obj, key, path);
    if (!v.is_number_integer()) fail(path + key, "expected an integer");
    return v.get<int>();
  }
  double number(const json& v, const std::string& field) const {
    if (!v.is_number()) fail(field, "expected a number");
    return v.get<double>();
  }
  bool boolean(const json& obj, const char* key, const std::string& path) const {
    const json& v = get(obj, key, path);
    if (!v.is_boolean()) fail(path + key, "expected true/false");
    return v.get<bool>();
  }
  std::string string(const json& obj, const char* key, const std::string& path) const {
    const json& v = get(obj, key, path);
    if (!v.is_string()) fail(path + key, "expected a string");
    return v.get<std::string>();
  }
  const json& array(const json& obj, const char* key, const std::string& path) const {
    const json& v = get(obj, key, path);
    if (!v.is_array()) fail(path + key, "expected an array");
    return v;
  }
  std::vector<double> numbers(const json& obj, const char* key, const std::string& path) const {
    const json& arr = array(obj, key, path);
    std::vector<double> out;
    out.reserve(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i) out.push_back(number(arr[i], path + key + "[" + std::to_string(i) + "]"));
    return out;
  }

 private:
  std::string source_;
  std::size_t line_;
};

Prescription parse_prescription(const json& j, const RecordReader& r) {
  Prescription p;
  p.id = r.integer(j, "id", "");
  const json& boxes = r.array(j, "boxes", "");
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const std::string path = "boxes[" + std::to_string(i) + "].";
    const json& b = boxes[i];
    graph::TextBox box;
    box.id = r.integer(b, "id", path);
    const auto bbox = r.numbers(b, "bbox", path);
    if (bbox.size() != 4) r.fail(path + "bbox", "expected 4 numbers");
    box.bbox = {bbox[0], bbox[1], bbox[2], bbox[3]};
    if (!box.bbox.valid()) r.fail(path + "bbox", "requires x_min < x_max and y_min < y_max");
    box.text = r.string(b, "text", path);
    box.is_pill_name = r.boolean(b, "y", path);
    const json& cls = r.get(b, "class", path);
    if (cls.is_number_integer()) {
      box.pill_class = cls.get<int>();
    } else if (!cls.is_null()) {
      r.fail(path + "class", "expected an integer or null");
    }
    if (box.is_pill_name != box.pill_class.has_value()) r.fail(path + "class", "must be set exactly when y is true");
    if (box.id != static_cast<int>(i)) r.fail(path + "id", "box ids must be 0..N-1 in order");
    p.boxes.push_back(std::move(box));
  }
  const json& pills = r.array(j, "pills", "");
  for (std::size_t i = 0; i < pills.size(); ++i) {
    const std::string path = "pills[" + std::to_string(i) + "].";
    const json& q = pills[i];
    Pill pill;
    pill.id = r.integer(q, "id", path);
    pill.features = r.numbers(q, "features", path);
    pill.pill_class = r.integer(q, "class", path);
    pill.prescribed = r.boolean(q, "prescribed", path);
    p.pills.push_back(std::move(pill));
  }
  return p;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
  if (!out) throw Error("write failed: " + path.string());
}

json config_to_json(const GeneratorConfig& c) {
  return json{{"num_classes", c.num_classes},         {"num_prescriptions", c.num_prescriptions},
              {"min_pills", c.min_pills},             {"max_pills", c.max_pills},
              {"min_distractors", c.min_distractors}, {"max_distractors", c.max_distractors},
              {"feature_dim", c.feature_dim},         {"noise_sigma", c.noise_sigma},
              {"row_spacing", c.row_spacing},         {"jitter", c.jitter}};
}

GeneratorConfig config_from_json(const json& j) {
  GeneratorConfig c;
  c.num_classes = j.at("num_classes").get<int>();
  c.num_prescriptions = j.at("num_prescriptions").get<int>();
  c.min_pills = j.at("min_pills").get<int>();
  c.max_pills = j.at("max_pills").get<int>();
  c.min_distractors = j.at("min_distractors").get<int>();
  c.max_distractors = j.at("max_distractors").get<int>();
  c.feature_dim = j.at("feature_dim").get<int>();
  c.noise_sigma = j.at("noise_sigma").get<double>();
  c.row_spacing = j.at("row_spacing").get<double>();
  c.jitter = j.at("jitter").get<double>();
  return c;
}

json classes_to_json(const std::vector<PillClass>& classes) {
  json arr = json::array();
  for (const auto& pc : classes) arr.push_back({{"id", pc.id}, {"names", pc.name_forms}, {"prototype", pc.prototype}});
  return arr;
}

std::vector<PillClass> classes_from_json(const json& arr) {
  std::vector<PillClass> classes;
  for (const auto& j : arr) {
    PillClass pc;
    pc.id = j.at("id").get<int>();
    pc.name_forms = j.at("names").get<std::vector<std::string>>();
    pc.prototype = j.at("prototype").get<std::vector<double>>();
    if (pc.id != static_cast<int>(classes.size())) throw ParseError("meta.json: class ids must be 0..C-1 in order");
    classes.push_back(std::move(pc));
  }
  return classes;
}

json load_meta(const fs::path& dir, const char* kind) {
  const fs::path path = dir / "meta.json";
  json meta;
  try {
    meta = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  if (!meta.is_object() || meta.value("format", "") != kind) {
    throw ParseError(path.string() + ": not a " + std::string(kind) + " directory");
  }
  if (meta.value("version", 0) != kFormatVersion) throw ParseError(path.string() + ": unsupported version");
  return meta;
}

void check_counts(const std::vector<Prescription>& ps, const GeneratorConfig& cfg, const fs::path& path) {
  for (const auto& p : ps) {
    const auto issues = validate_prescription(p, static_cast<std::size_t>(cfg.feature_dim));
    if (!issues.empty()) throw ParseError(path.string() + ": " + issues.front());
  }
}

}  // namespace

std::string to_json_line(const Prescription& p) {
  std::string out = "{\"id\":" + std::to_string(p.id) + ",\"boxes\":[";
  for (std::size_t i = 0; i < p.boxes.size(); ++i) {
    const auto& b = p.boxes[i];
    if (i) out += ',';
    out += "{\"id\":" + std::to_string(b.id) + ",\"bbox\":";
    const double bbox[4] = {b.bbox.x_min, b.bbox.y_min, b.bbox.x_max, b.bbox.y_max};
    append_numbers(out, bbox);
    out += ",\"text\":" + json(b.text).dump();
    out += std::string(",\"y\":") + (b.is_pill_name ? "true" : "false");
    out += ",\"class\":" + (b.pill_class ? std::to_string(*b.pill_class) : std::string("null")) + "}";
  }
  out += "],\"pills\":[";
  for (std::size_t i = 0; i < p.pills.size(); ++i) {
    const auto& pill = p.pills[i];
    if (i) out += ',';
    out += "{\"id\":" + std::to_string(pill.id) + ",\"features\":";
    append_numbers(out, pill.features);
    out += ",\"class\":" + std::to_string(pill.pill_class);
    out += std::string(",\"prescribed\":") + (pill.prescribed ? "true" : "false") + "}";
  }
  out += "]}";
  return out;
}

void write_prescriptions(const fs::path& path, const std::vector<Prescription>& prescriptions) {
  std::string content;
  for (const auto& p : prescriptions) {
    content += to_json_line(p);
    content += '\n';
  }
  write_file(path, content);
}

std::vector<Prescription> read_prescriptions(const fs::path& path, const encoders::Vocabulary& vocab) {
  const std::string content = read_file(path);
  std::vector<Prescription> out;
  std::istringstream in(content);
  std::string line;
  std::size_t line_no = 0;
  const std::string source = path.filename().string();
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    RecordReader reader(source, line_no);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(source + ":" + std::to_string(line_no) + ": malformed record: " + e.what());
    }
    out.push_back(parse_prescription(j, reader));
  }
  if (out.empty()) throw ParseError(source + ": empty dataset");
  tokenize_boxes(out, vocab);
  return out;
}

void save_dataset(const fs::path& dir, const Dataset& dataset) {
  fs::create_directories(dir);
  nlohmann::ordered_json meta;
  meta["format"] = "pima-dataset";
  meta["version"] = kFormatVersion;
  meta["seed"] = dataset.seed;
  meta["config"] = config_to_json(dataset.config);
  meta["classes"] = classes_to_json(dataset.classes);
  write_file(dir / "meta.json", meta.dump(1) + "\n");
  write_prescriptions(dir / "prescriptions.jsonl", dataset.prescriptions);
  dataset.vocab.save(dir / "vocab.tsv");
}

Dataset load_dataset(const fs::path& dir) {
  const json meta = load_meta(dir, "pima-dataset");
  Dataset ds;
  try {
    ds.seed = meta.at("seed").get<std::uint64_t>();
    ds.config = config_from_json(meta.at("config"));
    ds.classes = classes_from_json(meta.at("classes"));
  } catch (const json::exception& e) {
    throw ParseError((dir / "meta.json").string() + ": " + e.what());
  }
  ds.vocab = encoders::Vocabulary::load(dir / "vocab.tsv");
  ds.prescriptions = read_prescriptions(dir / "prescriptions.jsonl", ds.vocab);
  check_counts(ds.prescriptions, ds.config, dir / "prescriptions.jsonl");
  return ds;
}

void save_split(const fs::path& dir, const SplitDataset& split) {
  fs::create_directories(dir);
  nlohmann::ordered_json meta;
  meta["format"] = "pima-split";
  meta["version"] = kFormatVersion;
  meta["scenario"] = std::string(to_string(split.split.scenario));
  meta["dataset_seed"] = split.dataset_seed;
  meta["split_seed"] = split.split_seed;
  meta["mismatch_fraction"] = split.split.mismatch_fraction;
  meta["train_ids"] = split.split.train_ids;
  meta["test_ids"] = split.split.test_ids;
  meta["config"] = config_to_json(split.config);
  meta["classes"] = classes_to_json(split.classes);
  write_file(dir / "meta.json", meta.dump(1) + "\n");
  write_prescriptions(dir / "train.jsonl", split.train);
  write_prescriptions(dir / "test.jsonl", split.test);
  split.vocab.save(dir / "vocab.tsv");
}

SplitDataset load_split(const fs::path& dir) {
  const json meta = load_meta(dir, "pima-split");
  SplitDataset s;
  try {
    s.split.scenario = parse_scenario(meta.at("scenario").get<std::string>());
    s.dataset_seed = meta.at("dataset_seed").get<std::uint64_t>();
    s.split_seed = meta.at("split_seed").get<std::uint64_t>();
    s.split.mismatch_fraction = meta.at("mismatch_fraction").get<double>();
    s.split.train_ids = meta.at("train_ids").get<std::vector<int>>();
    s.split.test_ids = meta.at("test_ids").get<std::vector<int>>();
    s.config = config_from_json(meta.at("config"));
    s.classes = classes_from_json(meta.at("classes"));
  } catch (const json::exception& e) {
    throw ParseError((dir / "meta.json").string() + ": " + e.what());
  }
  s.vocab = encoders::Vocabulary::load(dir / "vocab.tsv");
  s.train = read_prescriptions(dir / "train.jsonl", s.vocab);
  s.test = read_prescriptions(dir / "test.jsonl", s.vocab);
  check_counts(s.train, s.config, dir / "train.jsonl");
  check_counts(s.test, s.config, dir / "test.jsonl");
  return s;
}

}  // namespace pima::data
