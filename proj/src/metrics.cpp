#include "selftrain/metrics.hpp"

#include <algorithm>

#include "selftrain/error.hpp"

namespace selftrain {

double compute_ngpt(double perf_delta, long long traj_delta) {
  if (traj_delta <= 0) throw Error(Errc::zero_traj_delta, "trajectory delta must be positive");
  return perf_delta / static_cast<double>(traj_delta);
}

Confusion& Confusion::operator+=(const Confusion& o) {
  tp += o.tp;
  fp += o.fp;
  fn += o.fn;
  tn += o.tn;
  return *this;
}

Confusion keystep_confusion(const std::set<int>& predicted, const std::set<int>& truth, int universe_size) {
  Confusion c;
  for (int i = 0; i < universe_size; ++i) {
    bool p = predicted.contains(i), t = truth.contains(i);
    if (p && t) ++c.tp;
    else if (p) ++c.fp;
    else if (t) ++c.fn;
    else ++c.tn;
  }
  return c;
}

KeyStepMetrics keystep_metrics(const Confusion& c) {
  auto ratio = [](double num, double den) { return den > 0 ? num / den : 0.0; };
  KeyStepMetrics m;
  double total = static_cast<double>(c.tp + c.fp + c.fn + c.tn);
  m.accuracy = ratio(static_cast<double>(c.tp + c.tn), total);
  m.precision = ratio(static_cast<double>(c.tp), static_cast<double>(c.tp + c.fp));
  m.recall = ratio(static_cast<double>(c.tp), static_cast<double>(c.tp + c.fn));
  m.f1 = ratio(2 * m.precision * m.recall, m.precision + m.recall);
  return m;
}

KeyStepMetrics keystep_metrics(const std::set<int>& predicted, const std::set<int>& truth, int universe_size) {
  return keystep_metrics(keystep_confusion(predicted, truth, universe_size));
}

SynthesisMetrics synthesis_metrics(const std::vector<SynthesisAttemptLog>& logs) {
  if (logs.empty()) throw Error(Errc::empty_logs, "no synthesis attempt logs");
  SynthesisMetrics m;
  double successes = 0, first = 0, positions = 0;
  for (const auto& log : logs) {
    if (!log.success_position) continue;
    ++successes;
    if (*log.success_position == 1) ++first;
    positions += *log.success_position;
  }
  double n = static_cast<double>(logs.size());
  m.osr = successes / n;
  m.ftsr = first / n;
  if (successes > 0) m.esp = positions / successes;
  return m;
}

std::optional<Judgment> judgment_from(std::string_view s) {
  if (s == "intent1") return Judgment::intent1;
  if (s == "intent2") return Judgment::intent2;
  if (s == "undecided") return Judgment::undecided;
  return std::nullopt;
}

double intent_preference_ratio(const std::vector<Judgment>& judgments) {
  if (judgments.empty()) throw Error(Errc::empty_judgments, "no preference judgments");
  auto n = std::count(judgments.begin(), judgments.end(), Judgment::intent2);
  return static_cast<double>(n) / static_cast<double>(judgments.size());
}

}  // namespace selftrain
