#include <doctest.h>

#include <random>

#include "pima/data/dataset.hpp"
#include "pima/error.hpp"
#include "pima/eval/eval.hpp"
#include "pima/model/model.hpp"
#include "support.hpp"

using namespace pima;
using alignment::MatchDecision;
using eval::Outcome;

namespace {

// Two boxes naming classes 7 and 8 plus one distractor.
data::Prescription small_prescription(std::vector<std::pair<int, bool>> pills) {
  data::Prescription p;
  p.id = 3;
  for (int i = 0; i < 3; ++i) {
    graph::TextBox b;
    b.id = i;
    b.bbox = {0, 6.0 * i, 10, 6.0 * i + 4};
    b.text = "box";
    b.tokens = {2};
    if (i < 2) {
      b.is_pill_name = true;
      b.pill_class = 7 + i;
    }
    p.boxes.push_back(b);
  }
  for (std::size_t i = 0; i < pills.size(); ++i) {
    data::Pill q;
    q.id = static_cast<int>(i);
    q.pill_class = pills[i].first;
    q.prescribed = pills[i].second;
    q.features = {0.0};
    p.pills.push_back(q);
  }
  return p;
}

MatchDecision decide(std::size_t pill, std::optional<int> box) { return {pill, box, box.value_or(0), 0.9}; }

}  // namespace

TEST_CASE("f1 examples") {
  CHECK(eval::f1(1, 0, 0) == 1.0);
  CHECK(eval::f1(0, 1, 1) == 0.0);
  CHECK(eval::f1(3, 1, 2) == doctest::Approx(6.0 / 9.0));
  CHECK(eval::f1(0, 0, 0) == 1.0);
}

TEST_CASE("all prescribed pills matched correctly") {
  const auto p = small_prescription({{7, true}, {8, true}});
  const std::vector<MatchDecision> d{decide(0, 0), decide(1, 1)};
  const auto report = eval::build_report({p}, {d});
  CHECK(report.counts.cor.tp == 2);
  CHECK(report.counts.mis == eval::TaskCounts{0, 0, 0, 2});
  CHECK(report.f1_cor == 1.0);
  CHECK(report.f1_mis == 1.0);
  CHECK(report.f1_avg == 1.0);
}

TEST_CASE("inverted decisions on two pills fail both tasks") {
  const auto p = small_prescription({{7, true}, {9, false}});
  const std::vector<MatchDecision> d{decide(0, std::nullopt), decide(1, 1)};
  const auto report = eval::build_report({p}, {d});
  CHECK(report.f1_cor == 0.0);
  CHECK(report.f1_mis == 0.0);
  CHECK(report.f1_avg == 0.0);
}

TEST_CASE("confusion counts match a hand-enumerated table") {
  const auto p = small_prescription({{7, true}, {8, true}, {7, true}, {9, false}, {10, false}});
  // correct, wrong box (distractor), missed, false match, rejected
  const std::vector<MatchDecision> d{decide(0, 0), decide(1, 2), decide(2, std::nullopt), decide(3, 1),
                                     decide(4, std::nullopt)};
  const auto c = eval::confusion_counts(d, p);
  CHECK(c.cor == eval::TaskCounts{1, 2, 2, 1});
  CHECK(c.mis == eval::TaskCounts{1, 1, 1, 2});
  for (std::size_t i = 0; i < eval::kOutcomeCount; ++i) CHECK(c.outcomes[i] == 1);
  CHECK(c.pills == 5);
}

TEST_CASE("random cases agree with per-pill enumeration and sum to the pill count") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const int m = testing::uniform_int(1, 6, rng);
    std::vector<std::pair<int, bool>> pills;
    for (int i = 0; i < m; ++i) {
      const bool prescribed = testing::uniform_int(0, 1, rng) == 1;
      pills.push_back({prescribed ? 7 + testing::uniform_int(0, 1, rng) : 20, prescribed});
    }
    const auto p = small_prescription(pills);
    std::vector<MatchDecision> d;
    std::size_t tp = 0, fp = 0, fn = 0, mtp = 0, mfp = 0, mfn = 0;
    for (int i = 0; i < m; ++i) {
      const int choice = testing::uniform_int(-1, 2, rng);
      const std::optional<int> box = choice < 0 ? std::nullopt : std::optional<int>(choice);
      d.push_back(decide(static_cast<std::size_t>(i), box));
      const bool prescribed = pills[static_cast<std::size_t>(i)].second;
      const bool right = box && *box < 2 && 7 + *box == pills[static_cast<std::size_t>(i)].first;
      if (prescribed && right) ++tp;
      if (box && !right) ++fp;
      if (prescribed && !right) ++fn;
      if (!prescribed && !box) ++mtp;
      if (prescribed && !box) ++mfp;
      if (!prescribed && box) ++mfn;
    }
    const auto c = eval::confusion_counts(d, p);
    CHECK(c.cor.tp == tp);
    CHECK(c.cor.fp == fp);
    CHECK(c.cor.fn == fn);
    CHECK(c.mis.tp == mtp);
    CHECK(c.mis.fp == mfp);
    CHECK(c.mis.fn == mfn);
    CHECK(c.mis.tp + c.mis.fp + c.mis.fn + c.mis.tn == static_cast<std::size_t>(m));
    const std::size_t wrong = c.outcomes[static_cast<std::size_t>(Outcome::WrongBox)];
    CHECK(c.cor.tp + c.cor.fn + (c.cor.fp - wrong) + c.cor.tn == static_cast<std::size_t>(m));
    std::size_t total = 0;
    for (auto n : c.outcomes) total += n;
    CHECK(total == static_cast<std::size_t>(m));
    auto report = eval::build_report({p}, {d});
    CHECK(report.f1_avg == (report.f1_cor + report.f1_mis) / 2.0);
    CHECK(report.f1_cor >= 0.0);
    CHECK(report.f1_cor <= 1.0);
  }
}

TEST_CASE("decisions must cover known pills exactly once") {
  const auto p = small_prescription({{7, true}, {8, true}});
  CHECK_THROWS_AS(eval::confusion_counts(std::vector<MatchDecision>{decide(0, 0), decide(5, 0)}, p), Error);
  CHECK_THROWS_AS(eval::confusion_counts(std::vector<MatchDecision>{decide(0, 0)}, p), Error);
  CHECK_THROWS_AS(eval::confusion_counts(std::vector<MatchDecision>{decide(0, 0), decide(0, 1)}, p), Error);
}

TEST_CASE("evaluate is deterministic and parallel equals serial") {
  const data::Dataset ds = data::generate_dataset({20, 24, 2, 4, 4, 6}, 3);
  model::ModelConfig cfg;
  cfg.vocab_size = ds.vocab.size();
  cfg.projection_hidden = 32;
  const model::Model m = model::init_model(cfg, 1);
  const auto serial = eval::evaluate(m, ds.prescriptions, {}, eval::Execution::Serial);
  const auto parallel = eval::evaluate(m, ds.prescriptions, {}, eval::Execution::Parallel);
  CHECK(serial.to_json() == parallel.to_json());
  CHECK(serial.to_csv() == parallel.to_csv());
  CHECK(serial.counts.pills > 0);
  // An untrained model is far from perfect matching on its own data.
  CHECK(serial.f1_cor < 0.3);
}

TEST_CASE("evaluate rejects a feature width mismatch") {
  const data::Dataset ds = data::generate_dataset({20, 4, 2, 4, 4, 6, 8}, 3);
  model::ModelConfig cfg;
  cfg.vocab_size = ds.vocab.size();
  cfg.projection_hidden = 16;
  const model::Model m = model::init_model(cfg, 1);
  CHECK_THROWS_AS(eval::evaluate(m, ds.prescriptions, {}), ShapeError);
}

TEST_CASE("report serialization") {
  const auto p = small_prescription({{7, true}, {9, false}});
  const auto report = eval::build_report({p}, {{decide(0, 0), decide(1, std::nullopt)}});
  const std::string json = report.to_json();
  CHECK(json.find("\"f1_avg\": 1.0") != std::string::npos);
  CHECK(json.find("\"rejected\"") != std::string::npos);
  const std::string csv = report.to_csv();
  CHECK(csv.rfind("prescription,pill,box,max_similarity,outcome\n", 0) == 0);
  CHECK(csv.find("3,1,,0.90000000000000002,rejected") != std::string::npos);
}
