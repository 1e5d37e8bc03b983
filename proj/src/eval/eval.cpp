#include "pima/eval/eval.hpp"

#include <cstdio>
#include <exception>

#include <json.hpp>

#include "pima/error.hpp"

namespace pima::eval {

double f1(std::size_t tp, std::size_t fp, std::size_t fn) {
  const std::size_t denom = 2 * tp + fp + fn;
  if (denom == 0) return 1.0;
  return static_cast<double>(2 * tp) / static_cast<double>(denom);
}

std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::Correct: return "correct";
    case Outcome::WrongBox: return "wrong_box";
    case Outcome::Missed: return "missed";
    case Outcome::FalseMatch: return "false_match";
    case Outcome::Rejected: return "rejected";
  }
  return "?";
}

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& o) {
  for (auto [mine, theirs] : {std::pair{&cor, &o.cor}, std::pair{&mis, &o.mis}}) {
    mine->tp += theirs->tp;
    mine->fp += theirs->fp;
    mine->fn += theirs->fn;
    mine->tn += theirs->tn;
  }
  for (std::size_t i = 0; i < kOutcomeCount; ++i) outcomes[i] += o.outcomes[i];
  pills += o.pills;
  return *this;
}

Outcome classify_outcome(const alignment::MatchDecision& d, const data::Prescription& p) {
  if (d.pill >= p.pills.size()) {
    throw Error("prescription " + std::to_string(p.id) + ": unknown pill index " + std::to_string(d.pill));
  }
  const data::Pill& pill = p.pills[d.pill];
  if (!d.box) return pill.prescribed ? Outcome::Missed : Outcome::Rejected;
  if (*d.box < 0 || static_cast<std::size_t>(*d.box) >= p.boxes.size()) {
    throw Error("prescription " + std::to_string(p.id) + ": unknown box " + std::to_string(*d.box));
  }
  if (!pill.prescribed) return Outcome::FalseMatch;
  const auto& cls = p.boxes[static_cast<std::size_t>(*d.box)].pill_class;
  return cls && *cls == pill.pill_class ? Outcome::Correct : Outcome::WrongBox;
}

ConfusionCounts confusion_counts(std::span<const alignment::MatchDecision> decisions, const data::Prescription& p) {
  ConfusionCounts c;
  std::vector<bool> seen(p.pills.size(), false);
  for (const auto& d : decisions) {
    const Outcome o = classify_outcome(d, p);
    if (seen[d.pill]) {
      throw Error("prescription " + std::to_string(p.id) + ": pill index " + std::to_string(d.pill) +
                  " decided twice");
    }
    seen[d.pill] = true;
    ++c.outcomes[static_cast<std::size_t>(o)];
    switch (o) {
      case Outcome::Correct: ++c.cor.tp; ++c.mis.tn; break;
      case Outcome::WrongBox: ++c.cor.fp; ++c.cor.fn; ++c.mis.tn; break;
      case Outcome::Missed: ++c.cor.fn; ++c.mis.fp; break;
      case Outcome::FalseMatch: ++c.cor.fp; ++c.mis.fn; break;
      case Outcome::Rejected: ++c.cor.tn; ++c.mis.tp; break;
    }
  }
  for (std::size_t i = 0; i < seen.size(); ++i) {
    if (!seen[i]) throw Error("prescription " + std::to_string(p.id) + ": no decision for pill index " + std::to_string(i));
  }
  c.pills = p.pills.size();
  return c;
}

void MatchReport::finalize() {
  f1_cor = f1(counts.cor.tp, counts.cor.fp, counts.cor.fn);
  f1_mis = f1(counts.mis.tp, counts.mis.fp, counts.mis.fn);
  f1_avg = (f1_cor + f1_mis) / 2.0;
}

std::string MatchReport::to_json() const {
  using nlohmann::ordered_json;
  auto task = [](const TaskCounts& t) { return ordered_json{{"tp", t.tp}, {"fp", t.fp}, {"fn", t.fn}, {"tn", t.tn}}; };
  ordered_json outcomes;
  for (std::size_t i = 0; i < kOutcomeCount; ++i) outcomes[std::string(to_string(static_cast<Outcome>(i)))] = counts.outcomes[i];
  ordered_json j;
  j["f1_cor"] = f1_cor;
  j["f1_mis"] = f1_mis;
  j["f1_avg"] = f1_avg;
  j["pills"] = counts.pills;
  j["counts"] = {{"cor", task(counts.cor)}, {"mis", task(counts.mis)}, {"outcomes", outcomes}};
  ordered_json list = ordered_json::array();
  for (const auto& pr : prescriptions) {
    ordered_json pills = ordered_json::array();
    for (const auto& d : pr.pills) {
      pills.push_back({{"pill", d.pill_id},
                       {"box", d.box ? ordered_json(*d.box) : ordered_json(nullptr)},
                       {"max_similarity", d.max_similarity},
                       {"outcome", std::string(to_string(d.outcome))}});
    }
    list.push_back({{"prescription", pr.prescription_id}, {"pills", std::move(pills)}});
  }
  j["prescriptions"] = std::move(list);
  return j.dump(1) + "\n";
}

std::string MatchReport::to_csv() const {
  std::string out = "prescription,pill,box,max_similarity,outcome\n";
  char buf[64];
  for (const auto& pr : prescriptions) {
    for (const auto& d : pr.pills) {
      std::snprintf(buf, sizeof buf, "%.17g", d.max_similarity);
      out += std::to_string(pr.prescription_id) + "," + std::to_string(d.pill_id) + "," +
             (d.box ? std::to_string(*d.box) : std::string()) + "," + buf + "," + std::string(to_string(d.outcome)) +
             "\n";
    }
  }
  return out;
}

MatchReport build_report(const std::vector<data::Prescription>& prescriptions,
                         const std::vector<std::vector<alignment::MatchDecision>>& decisions) {
  if (decisions.size() != prescriptions.size()) throw Error("build_report: decision count mismatch");
  MatchReport report;
  for (std::size_t k = 0; k < prescriptions.size(); ++k) {
    const auto& p = prescriptions[k];
    report.counts += confusion_counts(decisions[k], p);
    PrescriptionReport pr;
    pr.prescription_id = p.id;
    for (const auto& d : decisions[k]) {
      pr.pills.push_back({p.pills[d.pill].id, d.box, d.max_similarity, classify_outcome(d, p)});
    }
    report.prescriptions.push_back(std::move(pr));
  }
  report.finalize();
  return report;
}

MatchReport evaluate(const model::Model& model, const std::vector<data::Prescription>& prescriptions,
                     const alignment::LossConfig& loss, Execution execution) {
  loss.validate();
  const auto n = static_cast<std::ptrdiff_t>(prescriptions.size());
  std::vector<std::vector<alignment::MatchDecision>> decisions(prescriptions.size());
  std::vector<std::exception_ptr> failures(prescriptions.size());
  auto run_one = [&](std::ptrdiff_t k) {
    const auto idx = static_cast<std::size_t>(k);
    try {
      decisions[idx] = model::predict(model, model::prepare_sample(prescriptions[idx]), loss);
    } catch (...) {
      failures[idx] = std::current_exception();
    }
  };
  if (execution == Execution::Parallel) {
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t k = 0; k < n; ++k) run_one(k);
  } else {
    for (std::ptrdiff_t k = 0; k < n; ++k) run_one(k);
  }
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
  return build_report(prescriptions, decisions);
}

}  // namespace pima::eval
