#include "pima/data/split.hpp"

#include <algorithm>
#include <array>
#include <optional>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "pima/error.hpp"

namespace pima::data {
namespace {

using Rng = std::mt19937_64;

// Bitset over class ids.
class ClassSet {
 public:
  explicit ClassSet(std::size_t universe = 0) : words_((universe + 63) / 64, 0) {}
  void insert(int c) { words_[static_cast<std::size_t>(c) / 64] |= std::uint64_t{1} << (c % 64); }
  bool contains(int c) const { return (words_[static_cast<std::size_t>(c) / 64] >> (c % 64)) & 1U; }
  bool intersects(const ClassSet& o) const {
    for (std::size_t i = 0; i < words_.size(); ++i) {
      if (words_[i] & o.words_[i]) return true;
    }
    return false;
  }
  void unite(const ClassSet& o) {
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] |= o.words_[i];
  }

 private:
  std::vector<std::uint64_t> words_;
};

std::vector<int> pill_classes(const Prescription& p) {
  std::vector<int> out;
  for (const auto& pill : p.pills) out.push_back(pill.pill_class);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::size_t universe_size(const Dataset& ds) {
  std::size_t n = ds.classes.size();
  for (const auto& p : ds.prescriptions) {
    for (const auto& pill : p.pills) n = std::max(n, static_cast<std::size_t>(pill.pill_class) + 1);
  }
  return n;
}

std::vector<ClassSet> class_sets(const Dataset& ds, std::vector<std::vector<int>>& lists) {
  const std::size_t universe = universe_size(ds);
  std::vector<ClassSet> sets;
  for (const auto& p : ds.prescriptions) {
    lists.push_back(pill_classes(p));
    ClassSet s(universe);
    for (int c : lists.back()) s.insert(c);
    sets.push_back(std::move(s));
  }
  return sets;
}

ScenarioSplit stratified(const Dataset& ds, Scenario scenario, std::uint64_t seed) {
  std::vector<std::vector<int>> labels;
  for (const auto& p : ds.prescriptions) labels.push_back(pill_classes(p));
  const auto assignment = iterative_stratification(labels, kStratifiedTrainFraction, seed);
  ScenarioSplit split;
  split.scenario = scenario;
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    (assignment[i] == 0 ? split.train_ids : split.test_ids).push_back(ds.prescriptions[i].id);
  }
  return split;
}

ScenarioSplit disjoint_train(const Dataset& ds, std::uint64_t seed) {
  std::vector<std::vector<int>> lists;
  const auto sets = class_sets(ds, lists);
  std::vector<std::size_t> order(ds.prescriptions.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return lists[a].size() < lists[b].size(); });

  ClassSet used(universe_size(ds));
  std::vector<bool> in_train(ds.prescriptions.size(), false);
  for (std::size_t idx : order) {
    if (sets[idx].intersects(used)) continue;
    used.unite(sets[idx]);
    in_train[idx] = true;
  }
  ScenarioSplit split;
  split.scenario = Scenario::S1_2;
  for (std::size_t i = 0; i < in_train.size(); ++i) {
    (in_train[i] ? split.train_ids : split.test_ids).push_back(ds.prescriptions[i].id);
  }
  if (split.train_ids.size() < 2) {
    throw ConfigError("split 1-2: no two prescriptions have disjoint class sets");
  }
  return split;
}

// Exact cover of the classes by prescriptions (Algorithm X, bounded search).
class ExactCover {
 public:
  ExactCover(const std::vector<std::vector<int>>& rows, std::size_t universe, std::vector<int> columns, Rng& rng)
      : rows_(rows), columns_(std::move(columns)), universe_(universe) {
    for (std::size_t r = 0; r < rows_.size(); ++r) {
      ClassSet s(universe);
      for (int c : rows_[r]) s.insert(c);
      sets_.push_back(std::move(s));
      order_.push_back(r);
    }
    std::shuffle(order_.begin(), order_.end(), rng);
  }

  std::optional<std::vector<std::size_t>> solve() {
    std::vector<std::size_t> chosen;
    if (search(ClassSet(universe_), order_, chosen)) return chosen;
    return std::nullopt;
  }

  bool exhausted() const { return budget_ == 0; }

 private:
  bool search(const ClassSet& covered, const std::vector<std::size_t>& available, std::vector<std::size_t>& chosen) {
    if (budget_ == 0) return false;
    --budget_;
    int best_column = -1;
    std::size_t best_count = SIZE_MAX;
    for (int c : columns_) {
      if (covered.contains(c)) continue;
      std::size_t count = 0;
      for (std::size_t r : available) count += sets_[r].contains(c) ? 1 : 0;
      if (count < best_count) {
        best_count = count;
        best_column = c;
      }
    }
    if (best_column < 0) return true;
    if (best_count == 0) return false;
    for (std::size_t r : available) {
      if (!sets_[r].contains(best_column)) continue;
      ClassSet next = covered;
      next.unite(sets_[r]);
      std::vector<std::size_t> rest;
      for (std::size_t q : available) {
        if (q != r && !sets_[q].intersects(sets_[r])) rest.push_back(q);
      }
      chosen.push_back(r);
      if (search(next, rest, chosen)) return true;
      chosen.pop_back();
      if (budget_ == 0) return false;
    }
    return false;
  }

  const std::vector<std::vector<int>>& rows_;
  std::vector<int> columns_;
  std::size_t universe_;
  std::vector<ClassSet> sets_;
  std::vector<std::size_t> order_;
  std::size_t budget_ = 2'000'000;
};

ScenarioSplit once_per_class(const Dataset& ds, std::uint64_t seed) {
  std::vector<std::vector<int>> lists;
  class_sets(ds, lists);
  std::set<int> present;
  for (const auto& l : lists) present.insert(l.begin(), l.end());
  Rng rng(seed);
  ExactCover cover(lists, universe_size(ds), {present.begin(), present.end()}, rng);
  const auto solution = cover.solve();
  if (!solution) {
    throw ConfigError(cover.exhausted() ? "split 1-3: search budget exhausted looking for a once-per-class training set"
                                        : "split 1-3: no set of prescriptions covers every class exactly once");
  }
  std::vector<bool> in_train(ds.prescriptions.size(), false);
  for (std::size_t r : *solution) in_train[r] = true;
  ScenarioSplit split;
  split.scenario = Scenario::S1_3;
  for (std::size_t i = 0; i < in_train.size(); ++i) {
    (in_train[i] ? split.train_ids : split.test_ids).push_back(ds.prescriptions[i].id);
  }
  return split;
}

double distance(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

}  // namespace

std::string_view to_string(Scenario s) {
  switch (s) {
    case Scenario::S1_1: return "1-1";
    case Scenario::S1_2: return "1-2";
    case Scenario::S1_3: return "1-3";
    case Scenario::S2_1: return "2-1";
    case Scenario::S2_2: return "2-2";
  }
  return "?";
}

Scenario parse_scenario(std::string_view text) {
  for (Scenario s : {Scenario::S1_1, Scenario::S1_2, Scenario::S1_3, Scenario::S2_1, Scenario::S2_2}) {
    if (to_string(s) == text) return s;
  }
  throw ConfigError("unknown scenario '" + std::string(text) + "' (expected 1-1, 1-2, 1-3, 2-1 or 2-2)");
}

std::vector<int> iterative_stratification(std::span<const std::vector<int>> labels, double fraction,
                                          std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw ConfigError("stratification fraction must be in (0, 1)");
  Rng rng(seed);
  const std::array<double, 2> ratio{fraction, 1.0 - fraction};

  std::map<int, double> label_count;
  for (const auto& ls : labels)
    for (int l : ls) label_count[l] += 1.0;

  std::array<double, 2> desired{};
  std::array<std::map<int, double>, 2> desired_label;
  for (std::size_t j = 0; j < 2; ++j) {
    desired[j] = ratio[j] * static_cast<double>(labels.size());
    for (const auto& [l, n] : label_count) desired_label[j][l] = ratio[j] * n;
  }

  std::vector<std::size_t> remaining(labels.size());
  std::iota(remaining.begin(), remaining.end(), std::size_t{0});
  std::shuffle(remaining.begin(), remaining.end(), rng);
  std::vector<int> assignment(labels.size(), -1);

  auto assign = [&](std::size_t e, std::size_t j) {
    assignment[e] = static_cast<int>(j);
    desired[j] -= 1.0;
    for (int l : labels[e]) desired_label[j][l] -= 1.0;
  };
  auto pick_subset = [&](auto&& primary) {
    std::array<std::size_t, 2> best{};
    std::size_t n_best = 0;
    for (std::size_t j = 0; j < 2; ++j) {
      if (n_best == 0) {
        best[n_best++] = j;
        continue;
      }
      const auto a = std::pair{primary(j), desired[j]};
      const auto b = std::pair{primary(best[0]), desired[best[0]]};
      if (a > b) {
        n_best = 0;
        best[n_best++] = j;
      } else if (a == b) {
        best[n_best++] = j;
      }
    }
    return n_best == 1 ? best[0] : best[std::uniform_int_distribution<std::size_t>(0, n_best - 1)(rng)];
  };

  while (!remaining.empty()) {
    // Rarest label among the unassigned examples.
    std::map<int, std::size_t> counts;
    for (std::size_t e : remaining)
      for (int l : labels[e]) ++counts[l];
    if (counts.empty()) {
      for (std::size_t e : remaining) assign(e, pick_subset([](std::size_t) { return 0.0; }));
      break;
    }
    const auto rarest = std::min_element(counts.begin(), counts.end(), [](const auto& a, const auto& b) {
      return a.second < b.second;
    })->first;
    std::vector<std::size_t> keep;
    for (std::size_t e : remaining) {
      if (std::find(labels[e].begin(), labels[e].end(), rarest) == labels[e].end()) {
        keep.push_back(e);
        continue;
      }
      assign(e, pick_subset([&](std::size_t j) { return desired_label[j][rarest]; }));
    }
    remaining = std::move(keep);
  }
  return assignment;
}

ScenarioSplit split_scenario(const Dataset& dataset, Scenario scenario, std::uint64_t seed) {
  if (dataset.prescriptions.size() < 2) throw ConfigError("split: need at least two prescriptions");
  ScenarioSplit split;
  switch (scenario) {
    case Scenario::S1_1:
    case Scenario::S2_1:
    case Scenario::S2_2:
      split = stratified(dataset, scenario, seed);
      break;
    case Scenario::S1_2:
      split = disjoint_train(dataset, seed);
      break;
    case Scenario::S1_3:
      split = once_per_class(dataset, seed);
      break;
  }
  if (scenario == Scenario::S2_1 || scenario == Scenario::S2_2) split.mismatch_fraction = kMismatchFraction;
  if (split.train_ids.empty() || split.test_ids.empty()) {
    throw ConfigError("split " + std::string(to_string(scenario)) + ": train or test set is empty");
  }
  return split;
}

std::vector<Prescription> inject_mismatches(std::vector<Prescription> test, std::span<const PillClass> classes,
                                            double noise_sigma, double fraction, MismatchMode mode,
                                            std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw ConfigError("inject_mismatches: fraction must be in (0, 1)");
  std::vector<double> pairwise;
  for (std::size_t a = 0; a < classes.size(); ++a)
    for (std::size_t b = a + 1; b < classes.size(); ++b)
      pairwise.push_back(distance(classes[a].prototype, classes[b].prototype));
  std::sort(pairwise.begin(), pairwise.end());
  double median = 0.0;
  if (!pairwise.empty()) {
    const std::size_t n = pairwise.size();
    median = n % 2 == 1 ? pairwise[n / 2] : 0.5 * (pairwise[n / 2 - 1] + pairwise[n / 2]);
  }
  auto proto = [&](int id) -> const std::vector<double>& {
    if (id < 0 || static_cast<std::size_t>(id) >= classes.size()) {
      throw Error("inject_mismatches: unknown class " + std::to_string(id));
    }
    return classes[static_cast<std::size_t>(id)].prototype;
  };

  Rng rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (Prescription& p : test) {
    const std::size_t m = p.pills.size();
    const auto k = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(m) + 0.5));
    std::vector<std::size_t> idx(m);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(std::min(k, m));
    std::sort(idx.begin(), idx.end());

    std::set<int> present;
    for (int c : p.named_classes()) present.insert(c);
    for (const auto& pill : p.pills) present.insert(pill.pill_class);
    std::vector<int> foreign;
    for (const auto& pc : classes) {
      if (!present.contains(pc.id)) foreign.push_back(pc.id);
    }
    if (foreign.empty() && !idx.empty()) {
      throw ConfigError("inject_mismatches: prescription " + std::to_string(p.id) + " has no foreign class available");
    }
    for (std::size_t i : idx) {
      Pill& pill = p.pills[i];
      const auto& base = proto(pill.pill_class);
      int replacement = -1;
      if (mode == MismatchMode::Near) {
        double best = INFINITY;
        for (int f : foreign) {
          const double d = distance(base, proto(f));
          if (d < best) {
            best = d;
            replacement = f;
          }
        }
      } else {
        std::vector<int> far;
        for (int f : foreign) {
          if (distance(base, proto(f)) > median) far.push_back(f);
        }
        if (far.empty()) {
          throw ConfigError("inject_mismatches: prescription " + std::to_string(p.id) +
                            " has no foreign class beyond the median prototype distance");
        }
        replacement = far[std::uniform_int_distribution<std::size_t>(0, far.size() - 1)(rng)];
      }
      pill.pill_class = replacement;
      pill.prescribed = false;
      pill.features = proto(replacement);
      if (noise_sigma > 0.0) {
        for (double& v : pill.features) v += noise_sigma * noise(rng);
      }
    }
  }
  return test;
}

SplitDataset make_split(const Dataset& dataset, Scenario scenario, std::uint64_t seed) {
  SplitDataset out;
  out.config = dataset.config;
  out.dataset_seed = dataset.seed;
  out.split_seed = seed;
  out.classes = dataset.classes;
  out.vocab = dataset.vocab;
  out.split = split_scenario(dataset, scenario, seed);
  for (int id : out.split.train_ids) out.train.push_back(dataset.prescription(id));
  for (int id : out.split.test_ids) out.test.push_back(dataset.prescription(id));
  if (scenario == Scenario::S2_1 || scenario == Scenario::S2_2) {
    const auto mode = scenario == Scenario::S2_1 ? MismatchMode::Near : MismatchMode::Far;
    out.test = inject_mismatches(std::move(out.test), dataset.classes, dataset.config.noise_sigma,
                                 out.split.mismatch_fraction, mode, seed ^ 0x9e3779b97f4a7c15ULL);
  }
  return out;
}

}  // namespace pima::data
