#include "pima/data/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <optional>
#include <random>
#include <set>

#include "pima/error.hpp"

namespace pima::data {
namespace {

using Rng = std::mt19937_64;

constexpr std::array kOnsets{"b", "c", "d", "f", "g", "l", "m", "n", "p", "r", "s", "t", "v", "z", "k", "pr", "tr", "cl"};
constexpr std::array kVowels{"a", "e", "i", "o", "u", "y"};
constexpr std::array kSuffixes{"ol", "ine", "ex", "am", "ide", "arin", "ax", "one", "ium", "cin"};
constexpr std::array kDoses{"5mg", "10mg", "20mg", "25mg", "50mg", "100mg", "250mg", "500mg", "1g"};
constexpr std::array kForms{"tablet", "capsule", "tab", "cap"};
constexpr std::array kHospitals{"central general hospital", "city medical center", "national heart institute",
                                "district clinic", "university hospital outpatient"};
constexpr std::array kDiagnoses{"hypertension", "type 2 diabetes", "acute bronchitis", "gastritis",
                                "migraine", "allergic rhinitis", "hyperlipidemia", "insomnia"};
constexpr std::array kPatients{"nguyen van an", "tran thi binh", "le minh chau", "pham duc dung",
                               "hoang thu ha", "vu quoc khanh"};
constexpr std::array kTimes{"morning", "noon", "evening", "bedtime"};
constexpr std::array kNotes{"follow up in 7 days", "return if symptoms persist", "avoid alcohol",
                            "drink plenty of water", "keep out of reach of children"};

template <typename T, std::size_t N>
const char* pick(const std::array<T, N>& items, Rng& rng) {
  return items[std::uniform_int_distribution<std::size_t>(0, N - 1)(rng)];
}

int uniform_int(int lo, int hi, Rng& rng) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

double jitter(double amount, Rng& rng) {
  return amount > 0.0 ? std::uniform_real_distribution<double>(-amount, amount)(rng) : 0.0;
}

std::string make_stem(Rng& rng, std::set<std::string>& used) {
  for (;;) {
    std::string word;
    const int syllables = uniform_int(2, 3, rng);
    for (int s = 0; s < syllables; ++s) {
      word += pick(kOnsets, rng);
      word += pick(kVowels, rng);
    }
    word += pick(kSuffixes, rng);
    if (used.insert(word).second) return word;
  }
}

std::vector<PillClass> make_classes(const GeneratorConfig& cfg, Rng& rng) {
  std::set<std::string> used;
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<PillClass> classes;
  for (int c = 0; c < cfg.num_classes; ++c) {
    PillClass pc;
    pc.id = c;
    const std::string generic = make_stem(rng, used);
    const std::string brand = make_stem(rng, used);
    const std::string dose = pick(kDoses, rng);
    const std::string form = pick(kForms, rng);
    pc.name_forms = {generic + " " + dose, brand + " " + dose, generic, generic + " " + dose + " " + form};
    pc.prototype.resize(static_cast<std::size_t>(cfg.feature_dim));
    for (double& v : pc.prototype) v = normal(rng);
    classes.push_back(std::move(pc));
  }
  return classes;
}

// Class sets: first a partition of all classes (so every class can be covered
// exactly once), then uniformly random sets.
std::vector<std::vector<int>> make_class_sets(const GeneratorConfig& cfg, Rng& rng) {
  std::vector<int> all(static_cast<std::size_t>(cfg.num_classes));
  std::iota(all.begin(), all.end(), 0);

  std::vector<std::vector<int>> sets;
  std::vector<int> order = all;
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t pos = 0;
  while (pos < order.size() && static_cast<int>(sets.size()) < cfg.num_prescriptions) {
    const int remaining = static_cast<int>(order.size() - pos);
    if (remaining < cfg.min_pills) break;  // leftover classes only appear in random sets
    int take = remaining;
    if (remaining > cfg.max_pills) {
      const int hi = std::min(cfg.max_pills, remaining - cfg.min_pills);
      take = hi >= cfg.min_pills ? uniform_int(cfg.min_pills, hi, rng) : cfg.max_pills;
    }
    sets.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(pos),
                      order.begin() + static_cast<std::ptrdiff_t>(pos + static_cast<std::size_t>(take)));
    pos += static_cast<std::size_t>(take);
  }
  while (static_cast<int>(sets.size()) < cfg.num_prescriptions) {
    std::vector<int> pool = all;
    std::shuffle(pool.begin(), pool.end(), rng);
    pool.resize(static_cast<std::size_t>(uniform_int(cfg.min_pills, cfg.max_pills, rng)));
    sets.push_back(std::move(pool));
  }
  for (auto& s : sets) std::sort(s.begin(), s.end());
  std::shuffle(sets.begin(), sets.end(), rng);
  return sets;
}

enum class Slot { Header, Patient, Diagnosis, Quantity, Instruction, Date, Signature, Note };

class LayoutBuilder {
 public:
  LayoutBuilder(const GeneratorConfig& cfg, Rng& rng) : cfg_(cfg), rng_(rng) {}

  void add(std::string text, double x0, double x1, bool on_row, std::optional<int> cls = std::nullopt) {
    graph::TextBox box;
    box.id = static_cast<int>(boxes_.size());
    const double dx = jitter(cfg_.jitter, rng_);
    const double dy = on_row ? jitter(0.25 * cfg_.jitter, rng_) : jitter(0.5 * cfg_.jitter, rng_);
    box.bbox = {x0 + dx, y_ + dy, x1 + dx, y_ + dy + 4.0};
    box.text = std::move(text);
    box.is_pill_name = cls.has_value();
    box.pill_class = cls;
    boxes_.push_back(std::move(box));
  }
  void next_line() { y_ += cfg_.row_spacing; }
  std::vector<graph::TextBox> take() { return std::move(boxes_); }

 private:
  const GeneratorConfig& cfg_;
  Rng& rng_;
  double y_ = 2.0;
  std::vector<graph::TextBox> boxes_;
};

std::string quantity_text(Rng& rng) {
  const int n = uniform_int(1, 6, rng) * 10;
  return uniform_int(0, 1, rng) == 0 ? "qty " + std::to_string(n) + " tablets" : "sl " + std::to_string(n) + " vien";
}

std::string instruction_text(Rng& rng) {
  return "take " + std::to_string(uniform_int(1, 3, rng)) + " " + pick(kTimes, rng) + " after meal";
}

Prescription make_prescription(const GeneratorConfig& cfg, const std::vector<PillClass>& classes,
                               const std::vector<int>& class_set, Rng& rng) {
  Prescription p;
  const int m = static_cast<int>(class_set.size());
  const int distractors = uniform_int(cfg.min_distractors, cfg.max_distractors, rng);

  // Distractor slots in priority order; the first `distractors` are used.
  std::vector<std::pair<Slot, int>> slots{{Slot::Header, 0}, {Slot::Diagnosis, 0}};
  for (int r = 0; r < m; ++r) slots.emplace_back(Slot::Quantity, r);
  slots.emplace_back(Slot::Date, 0);
  for (int r = 0; r < m; ++r) slots.emplace_back(Slot::Instruction, r);
  slots.emplace_back(Slot::Patient, 0);
  slots.emplace_back(Slot::Signature, 0);
  while (static_cast<int>(slots.size()) < distractors) slots.emplace_back(Slot::Note, static_cast<int>(slots.size()));
  slots.resize(static_cast<std::size_t>(distractors));
  auto has = [&](Slot s, int row = 0) { return std::find(slots.begin(), slots.end(), std::pair{s, row}) != slots.end(); };

  LayoutBuilder layout(cfg, rng);
  if (has(Slot::Header)) {
    layout.add(pick(kHospitals, rng), 10.0, 90.0, false);
    layout.next_line();
  }
  if (has(Slot::Patient)) {
    layout.add("patient " + std::string(pick(kPatients, rng)) + " age " + std::to_string(uniform_int(18, 90, rng)),
               5.0, 60.0, false);
    layout.next_line();
  }
  if (has(Slot::Diagnosis)) {
    layout.add("diagnosis " + std::string(pick(kDiagnoses, rng)), 5.0, 70.0, false);
    layout.next_line();
  }
  std::vector<int> row_classes = class_set;
  std::shuffle(row_classes.begin(), row_classes.end(), rng);
  for (int r = 0; r < m; ++r) {
    const PillClass& pc = classes[static_cast<std::size_t>(row_classes[static_cast<std::size_t>(r)])];
    const std::string& name = pc.name_forms[static_cast<std::size_t>(
        uniform_int(0, static_cast<int>(pc.name_forms.size()) - 1, rng))];
    const double width = std::min(50.0, 4.0 + 1.2 * static_cast<double>(name.size()));
    layout.add(std::to_string(r + 1) + ". " + name, 5.0, 5.0 + width, true, pc.id);
    if (has(Slot::Quantity, r)) layout.add(quantity_text(rng), 62.0, 80.0, true);
    layout.next_line();
    if (has(Slot::Instruction, r)) {
      layout.add(instruction_text(rng), 9.0, 50.0, false);
      layout.next_line();
    }
  }
  std::size_t notes = 0;
  for (const auto& s : slots) notes += s.first == Slot::Note ? 1 : 0;
  for (std::size_t n = 0; n < notes; ++n) {
    layout.add("note " + std::string(pick(kNotes, rng)), 5.0, 50.0, false);
    layout.next_line();
  }
  if (has(Slot::Date)) {
    layout.add("date " + std::to_string(uniform_int(1, 28, rng)) + " " + std::to_string(uniform_int(1, 12, rng)) +
                   " 2022",
               55.0, 90.0, false);
    layout.next_line();
  }
  if (has(Slot::Signature)) layout.add("doctor signature", 60.0, 90.0, false);
  p.boxes = layout.take();

  std::normal_distribution<double> noise(0.0, 1.0);
  for (int i = 0; i < m; ++i) {
    const PillClass& pc = classes[static_cast<std::size_t>(class_set[static_cast<std::size_t>(i)])];
    Pill pill;
    pill.pill_class = pc.id;
    pill.features = pc.prototype;
    if (cfg.noise_sigma > 0.0) {
      for (double& v : pill.features) v += cfg.noise_sigma * noise(rng);
    }
    p.pills.push_back(std::move(pill));
  }
  std::shuffle(p.pills.begin(), p.pills.end(), rng);
  for (std::size_t i = 0; i < p.pills.size(); ++i) p.pills[i].id = static_cast<int>(i);
  return p;
}

}  // namespace

alignment::CorrespondenceSets Prescription::correspondence() const {
  alignment::CorrespondenceSets sets(pills.size());
  for (std::size_t i = 0; i < pills.size(); ++i) {
    if (!pills[i].prescribed) continue;
    for (const auto& box : boxes) {
      if (box.pill_class && *box.pill_class == pills[i].pill_class) sets[i].push_back(box.id);
    }
  }
  return sets;
}

std::vector<int> Prescription::labels() const {
  std::vector<int> y;
  y.reserve(boxes.size());
  for (const auto& box : boxes) y.push_back(box.is_pill_name ? 1 : 0);
  return y;
}

std::vector<int> Prescription::named_classes() const {
  std::vector<int> out;
  for (const auto& box : boxes) {
    if (box.pill_class) out.push_back(*box.pill_class);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

void GeneratorConfig::validate() const {
  if (num_classes < 2) throw ConfigError("data.num_classes must be >= 2");
  if (num_prescriptions < 1) throw ConfigError("data.num_prescriptions must be >= 1");
  if (min_pills < 1 || min_pills > max_pills) throw ConfigError("data.min_pills/max_pills: invalid range");
  if (max_pills > num_classes) throw ConfigError("data.max_pills exceeds data.num_classes");
  if (min_distractors < 0 || min_distractors > max_distractors) {
    throw ConfigError("data.min_distractors/max_distractors: invalid range");
  }
  if (feature_dim < 1) throw ConfigError("data.feature_dim must be >= 1");
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) throw ConfigError("data.noise_sigma must be >= 0");
  if (!(row_spacing > 4.0)) throw ConfigError("data.row_spacing must exceed the box height 4");
  if (!(jitter >= 0.0 && jitter < 2.0)) throw ConfigError("data.jitter must be in [0, 2)");
}

const Prescription& Dataset::prescription(int id) const {
  for (const auto& p : prescriptions) {
    if (p.id == id) return p;
  }
  throw Error("dataset: no prescription with id " + std::to_string(id));
}

const PillClass& Dataset::pill_class(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= classes.size()) {
    throw Error("dataset: no class with id " + std::to_string(id));
  }
  return classes[static_cast<std::size_t>(id)];
}

Dataset generate_dataset(const GeneratorConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  Dataset ds;
  ds.config = config;
  ds.seed = seed;
  ds.classes = make_classes(config, rng);
  const auto sets = make_class_sets(config, rng);
  for (std::size_t i = 0; i < sets.size(); ++i) {
    Prescription p = make_prescription(config, ds.classes, sets[i], rng);
    p.id = static_cast<int>(i);
    ds.prescriptions.push_back(std::move(p));
  }
  for (const auto& pc : ds.classes) {
    for (const auto& form : pc.name_forms) {
      for (const auto& w : encoders::split_words(form)) ds.vocab.add(w);
    }
  }
  for (const auto& p : ds.prescriptions) {
    for (const auto& box : p.boxes) {
      for (const auto& w : encoders::split_words(box.text)) ds.vocab.add(w);
    }
  }
  tokenize_boxes(ds.prescriptions, ds.vocab);
  return ds;
}

void tokenize_boxes(std::span<Prescription> prescriptions, const encoders::Vocabulary& vocab) {
  for (auto& p : prescriptions) {
    for (auto& box : p.boxes) box.tokens = encoders::tokenize(box.text, vocab);
  }
}

std::vector<std::string> validate_prescription(const Prescription& p, std::size_t feature_dim) {
  std::vector<std::string> issues;
  const std::string where = "prescription " + std::to_string(p.id) + ": ";
  if (p.boxes.empty()) issues.push_back(where + "no boxes");
  for (std::size_t i = 0; i < p.boxes.size(); ++i) {
    const auto& b = p.boxes[i];
    if (b.id != static_cast<int>(i)) issues.push_back(where + "box ids must be 0..N-1");
    if (!b.bbox.valid()) issues.push_back(where + "box " + std::to_string(b.id) + " has an invalid bbox");
    if (b.is_pill_name != b.pill_class.has_value()) {
      issues.push_back(where + "box " + std::to_string(b.id) + " label/class mismatch");
    }
  }
  const auto named = p.named_classes();
  for (const auto& pill : p.pills) {
    if (pill.features.size() != feature_dim) {
      issues.push_back(where + "pill " + std::to_string(pill.id) + " has feature width " +
                       std::to_string(pill.features.size()));
    }
    for (double v : pill.features) {
      if (!std::isfinite(v)) {
        issues.push_back(where + "pill " + std::to_string(pill.id) + " has non-finite features");
        break;
      }
    }
    const bool named_here = std::binary_search(named.begin(), named.end(), pill.pill_class);
    if (pill.prescribed && !named_here) {
      issues.push_back(where + "prescribed pill " + std::to_string(pill.id) + " has no name box");
    }
    if (!pill.prescribed && named_here) {
      issues.push_back(where + "foreign pill " + std::to_string(pill.id) + " is named in the prescription");
    }
  }
  return issues;
}

}  // namespace pima::data
