#include "gbot/bench.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <tuple>

#include <spdlog/spdlog.h>

#include "json.hpp"

#include "gbot/pose_api.h"
#include "gbot/serialization.h"

namespace gbot {

using nlohmann::json;

Method ParseMethod(std::string_view name) {
  if (name == "independent") return Method::kIndependent;
  if (name == "gbot") return Method::kGbot;
  if (name == "gbot-reinit") return Method::kGbotReinit;
  throw std::invalid_argument("unknown method '" + std::string(name) +
                              "' (expected independent|gbot|gbot-reinit)");
}

const char *MethodName(Method method) {
  switch (method) {
    case Method::kIndependent:
      return "independent";
    case Method::kGbot:
      return "gbot";
    case Method::kGbotReinit:
      return "gbot-reinit";
  }
  return "gbot";
}

std::vector<std::string> MethodNames() {
  return {"independent", "gbot", "gbot-reinit"};
}

TrackerConfig MethodConfig(Method method) {
  TrackerConfig c;
  c.use_links = method != Method::kIndependent;
  c.reinit_enabled = method == Method::kGbotReinit;
  return c;
}

Sequence GenerateSequence(std::string_view asset_name,
                          const ScriptOptions &options) {
  Sequence seq;
  seq.asset = MakeBuiltinAsset(asset_name);
  seq.script = MakeDefaultScript(seq.asset, options);
  seq.ground_truth = GenerateGroundTruth(seq.script, seq.asset.graph);
  seq.observations = GenerateObservations(seq.ground_truth, seq.asset.models,
                                          CameraIntrinsics{}, seq.script);
  return seq;
}

namespace {

std::ofstream OpenOut(const std::filesystem::path &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::ifstream OpenIn(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return in;
}

}  // namespace

void SaveSequence(const Sequence &seq, const std::filesystem::path &dir) {
  std::filesystem::create_directories(dir);
  OpenOut(dir / kScriptFile) << ScriptToJson(seq.script);
  std::ofstream gt = OpenOut(dir / kGroundTruthFile);
  WriteGroundTruth(gt, seq.ground_truth);
  std::ofstream obs = OpenOut(dir / kObservationsFile);
  WriteObservations(obs, seq.observations);
}

Sequence LoadSequence(const std::filesystem::path &dir) {
  Sequence seq;
  {
    std::ifstream in = OpenIn(dir / kScriptFile);
    std::stringstream text;
    text << in.rdbuf();
    seq.script = ParseScript(text.str());
  }
  seq.asset = MakeBuiltinAsset(seq.script.asset);
  seq.script.Validate(seq.asset.graph);
  {
    std::ifstream in = OpenIn(dir / kGroundTruthFile);
    seq.ground_truth = ReadGroundTruth(in);
  }
  {
    std::ifstream in = OpenIn(dir / kObservationsFile);
    seq.observations = ReadObservations(in);
  }
  if (seq.ground_truth.size() != seq.script.n_frames ||
      seq.observations.size() != seq.script.n_frames) {
    throw std::runtime_error("sequence files in " + dir.string() +
                             " disagree on the frame count");
  }
  return seq;
}

std::vector<TrackReport> TrackSequence(const Sequence &seq, Method method,
                                       SnapshotStore *store, double fps) {
  using Clock = std::chrono::steady_clock;
  const auto period = fps > 0.0 ? std::chrono::duration_cast<Clock::duration>(
                                      std::chrono::duration<double>(1.0 / fps))
                                : Clock::duration::zero();
  Clock::time_point next = Clock::now();
  ReportSink sink = [&](const TrackReport &report) {
    if (store != nullptr) store->Publish(report);
    if (period > Clock::duration::zero()) {
      next += period;
      std::this_thread::sleep_until(next);
    }
  };
  return RunSequence(seq.observations, seq.asset.graph, seq.asset.models,
                     CameraIntrinsics{}, MethodConfig(method), {}, sink);
}

RunSummary Summarize(const Sequence &seq, const std::vector<TrackReport> &reports,
                     Method method, std::size_t first_frame) {
  std::vector<PoseMap> predicted;
  predicted.reserve(reports.size());
  RunSummary s;
  double runtime = 0.0;
  for (const TrackReport &r : reports) {
    predicted.push_back(r.poses);
    runtime += r.runtime_ms;
    for (const TrackEvent &e : r.events) {
      if (e.type == EventType::kTransition) ++s.transitions;
      if (e.type == EventType::kReinit) ++s.reinits;
    }
  }
  const SequenceEvaluation eval = EvaluateSequence(
      seq.ground_truth, predicted, seq.asset.models, first_frame);
  s.asset = seq.script.asset;
  s.condition = ConditionName(seq.script.condition);
  s.method = MethodName(method);
  s.seed = seq.script.seed;
  s.frames = reports.size();
  s.add_s = 100.0 * eval.score;
  s.e_trans_cm = 100.0 * eval.mean_trans_m;
  s.e_rot_deg = eval.mean_rot_deg;
  s.ms_per_frame = reports.empty() ? 0.0 : runtime / reports.size();
  return s;
}

std::string SummaryToJson(const RunSummary &s) {
  json j;
  j["asset"] = s.asset;
  j["condition"] = s.condition;
  j["method"] = s.method;
  j["seed"] = s.seed;
  j["frames"] = s.frames;
  j["add_s"] = s.add_s;
  j["e_trans_cm"] = s.e_trans_cm;
  j["e_rot_deg"] = s.e_rot_deg ? json(*s.e_rot_deg) : json(nullptr);
  j["ms_per_frame"] = s.ms_per_frame;
  j["transitions"] = s.transitions;
  j["reinits"] = s.reinits;
  return j.dump(2) + "\n";
}

RunSummary SummaryFromJson(std::string_view text) {
  RunSummary s;
  try {
    const json j = json::parse(text);
    s.asset = j.at("asset").get<std::string>();
    s.condition = j.at("condition").get<std::string>();
    s.method = j.at("method").get<std::string>();
    s.seed = j.at("seed").get<std::uint64_t>();
    s.frames = j.at("frames").get<std::size_t>();
    s.add_s = j.at("add_s").get<double>();
    s.e_trans_cm = j.at("e_trans_cm").get<double>();
    if (!j.at("e_rot_deg").is_null()) s.e_rot_deg = j["e_rot_deg"].get<double>();
    s.ms_per_frame = j.at("ms_per_frame").get<double>();
    s.transitions = j.value("transitions", std::size_t{0});
    s.reinits = j.value("reinits", std::size_t{0});
  } catch (const json::exception &e) {
    throw SchemaError("summary", e.what());
  }
  return s;
}

namespace {

bool SameValues(const RunSummary &a, const RunSummary &b) {
  return a.add_s == b.add_s && a.e_trans_cm == b.e_trans_cm &&
         a.e_rot_deg == b.e_rot_deg && a.ms_per_frame == b.ms_per_frame &&
         a.frames == b.frames && a.seed == b.seed;
}

std::string Fixed(double v, int digits) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(digits);
  out << v;
  return out.str();
}

std::string RotText(const std::optional<double> &v) {
  return v ? Fixed(*v, 1) : "-";
}

}  // namespace

std::vector<RunSummary> BuildReportRows(std::vector<RunSummary> runs) {
  if (runs.empty()) throw std::invalid_argument("report: no runs given");
  std::map<std::tuple<std::string, std::string, std::string>, RunSummary> rows;
  for (RunSummary &r : runs) {
    auto key = std::make_tuple(r.asset, r.condition, r.method);
    auto it = rows.find(key);
    if (it != rows.end()) {
      if (!SameValues(it->second, r)) {
        throw std::invalid_argument("report: conflicting results for " +
                                    r.asset + "/" + r.condition + "/" +
                                    r.method);
      }
      continue;
    }
    rows.emplace(std::move(key), std::move(r));
  }
  std::vector<RunSummary> out;
  for (auto &[key, row] : rows) out.push_back(row);

  // Mean over the rows of each method, methods in name order.
  std::vector<std::string> methods;
  for (const RunSummary &r : out) {
    if (std::find(methods.begin(), methods.end(), r.method) == methods.end()) {
      methods.push_back(r.method);
    }
  }
  std::sort(methods.begin(), methods.end());
  const std::size_t n_rows = out.size();
  for (const std::string &m : methods) {
    RunSummary mean;
    mean.asset = kMeanOverall;
    mean.method = m;
    std::size_t n = 0, n_rot = 0;
    double rot = 0.0;
    for (std::size_t i = 0; i < n_rows; ++i) {
      const RunSummary &r = out[i];
      if (r.method != m) continue;
      ++n;
      mean.frames += r.frames;
      mean.add_s += r.add_s;
      mean.e_trans_cm += r.e_trans_cm;
      mean.ms_per_frame += r.ms_per_frame;
      mean.transitions += r.transitions;
      mean.reinits += r.reinits;
      if (r.e_rot_deg) {
        rot += *r.e_rot_deg;
        ++n_rot;
      }
    }
    mean.add_s /= n;
    mean.e_trans_cm /= n;
    mean.ms_per_frame /= n;
    if (n_rot > 0) mean.e_rot_deg = rot / n_rot;
    out.push_back(std::move(mean));
  }
  return out;
}

std::string RenderMarkdown(const std::vector<RunSummary> &rows) {
  std::ostringstream out;
  out << "| asset | condition | method | ADD(S) | e_trans_cm | e_rot_deg | "
         "ms_per_frame |\n";
  out << "|---|---|---|---:|---:|---:|---:|\n";
  for (const RunSummary &r : rows) {
    out << "| " << r.asset << " | " << r.condition << " | " << r.method
        << " | " << Fixed(r.add_s, 1) << " | " << Fixed(r.e_trans_cm, 1)
        << " | " << RotText(r.e_rot_deg) << " | " << Fixed(r.ms_per_frame, 2)
        << " |\n";
  }
  return out.str();
}

std::string RenderCsv(const std::vector<RunSummary> &rows) {
  std::ostringstream out;
  out << "asset,condition,method,ADD(S),e_trans_cm,e_rot_deg,ms_per_frame\n";
  for (const RunSummary &r : rows) {
    out << r.asset << ',' << r.condition << ',' << r.method << ','
        << Fixed(r.add_s, 3) << ',' << Fixed(r.e_trans_cm, 3) << ','
        << (r.e_rot_deg ? Fixed(*r.e_rot_deg, 3) : "") << ','
        << Fixed(r.ms_per_frame, 3) << '\n';
  }
  return out.str();
}

}  // namespace gbot
