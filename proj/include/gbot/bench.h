#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gbot/metrics.h"
#include "gbot/scene_sim.h"
#include "gbot/tracker.h"

namespace gbot {

class SnapshotStore;

enum class Method { kIndependent, kGbot, kGbotReinit };

Method ParseMethod(std::string_view name);  // throws std::invalid_argument
const char *MethodName(Method method);
std::vector<std::string> MethodNames();
TrackerConfig MethodConfig(Method method);

struct Sequence {
  BuiltinAsset asset;
  SequenceScript script;
  std::vector<GroundTruthFrame> ground_truth;
  std::vector<ObservationFrame> observations;
};

Sequence GenerateSequence(std::string_view asset_name,
                          const ScriptOptions &options);

inline constexpr const char *kScriptFile = "script.json";
inline constexpr const char *kGroundTruthFile = "ground_truth.jsonl";
inline constexpr const char *kObservationsFile = "observations.jsonl";

// Writes the three stage files into `dir` (created if needed).
void SaveSequence(const Sequence &seq, const std::filesystem::path &dir);
// Throws std::runtime_error naming the missing file.
Sequence LoadSequence(const std::filesystem::path &dir);

// Runs the tracker frame by frame; publishes every report when `store` is
// given. fps > 0 paces the loop to that rate.
std::vector<TrackReport> TrackSequence(const Sequence &seq, Method method,
                                       SnapshotStore *store = nullptr,
                                       double fps = 0.0);

struct RunSummary {
  std::string asset;
  std::string condition;
  std::string method;
  std::uint64_t seed = 0;
  std::size_t frames = 0;
  double add_s = 0.0;  // score x 100
  double e_trans_cm = 0.0;
  std::optional<double> e_rot_deg;
  double ms_per_frame = 0.0;
  std::size_t transitions = 0;
  std::size_t reinits = 0;
};

// Scores frames [first_frame, end).
RunSummary Summarize(const Sequence &seq, const std::vector<TrackReport> &reports,
                     Method method, std::size_t first_frame = 0);

std::string SummaryToJson(const RunSummary &summary);
RunSummary SummaryFromJson(std::string_view text);  // throws SchemaError

// One row per (asset, condition, method) plus a "Mean Overall" row per
// method. Identical duplicates collapse; conflicting ones throw
// std::invalid_argument.
std::vector<RunSummary> BuildReportRows(std::vector<RunSummary> runs);
std::string RenderMarkdown(const std::vector<RunSummary> &rows);
std::string RenderCsv(const std::vector<RunSummary> &rows);

inline constexpr const char *kMeanOverall = "Mean Overall";

}  // namespace gbot
