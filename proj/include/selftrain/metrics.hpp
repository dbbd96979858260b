#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "selftrain/abstraction.hpp"

namespace selftrain {

/// Normalized gain per trajectory: perf_delta / traj_delta.
/// Throws Error(zero_traj_delta) unless traj_delta > 0.
double compute_ngpt(double perf_delta, long long traj_delta);

struct Confusion {
  std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
  Confusion& operator+=(const Confusion& o);
};

struct KeyStepMetrics {
  double accuracy = 0, precision = 0, recall = 0, f1 = 0;
};

/// Per-step membership counts over indices [0, universe_size).
Confusion keystep_confusion(const std::set<int>& predicted, const std::set<int>& truth, int universe_size);
/// Precision, recall and F1 are 0 when their denominator is 0; accuracy is 0
/// for an empty universe.
KeyStepMetrics keystep_metrics(const Confusion& c);
KeyStepMetrics keystep_metrics(const std::set<int>& predicted, const std::set<int>& truth, int universe_size);

struct SynthesisMetrics {
  double osr = 0;
  double ftsr = 0;
  std::optional<double> esp;  // mean success position over successful logs
};

/// Throws Error(empty_logs).
SynthesisMetrics synthesis_metrics(const std::vector<SynthesisAttemptLog>& logs);

enum class Judgment { intent1, intent2, undecided };
std::optional<Judgment> judgment_from(std::string_view s);

/// Share of judgments preferring the refined intent. Throws
/// Error(empty_judgments).
double intent_preference_ratio(const std::vector<Judgment>& judgments);

}  // namespace selftrain
