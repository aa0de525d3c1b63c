// gbot: generate synthetic assembly sequences, track them, and tabulate
// results.
//
//   gbot generate --asset hobby_corner_clamp --condition hand --frames 300 \
//                 --seed 7 --out data/clamp_hand
//   gbot track --data data/clamp_hand --method gbot [--serve 127.0.0.1:8080]
//   gbot report data/*/summary_*.json

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"

#include "gbot/bench.h"
#include "gbot/pose_api.h"
#include "gbot/serialization.h"

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void SetupLogging() {
  auto logger = spdlog::stderr_color_mt("gbot");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char *level = std::getenv("GBOT_LOG")) {
    spdlog::set_level(spdlog::level::from_str(level));
  }
}

struct GenerateArgs {
  std::string asset;
  std::string condition = "normal";
  std::size_t frames = 300;
  std::uint64_t seed = 0;
  std::size_t roster_occlusion = 0;
  std::string out = ".";
};

struct TrackArgs {
  std::string data;
  std::string method = "gbot";
  std::string serve;
  std::string out;
  double fps = 0.0;
  bool no_timing = false;
};

struct ReportArgs {
  std::vector<std::string> files;
  std::string csv;
  std::string markdown;
};

int RunGenerate(const GenerateArgs &args) {
  gbot::ScriptOptions options;
  options.n_frames = args.frames;
  options.seed = args.seed;
  options.roster_occlusion_frames = args.roster_occlusion;
  try {
    options.condition = gbot::ParseCondition(args.condition);
    gbot::MakeBuiltinAsset(args.asset);
  } catch (const std::invalid_argument &e) {
    throw UsageError(e.what());
  }
  gbot::Sequence seq;
  try {
    seq = gbot::GenerateSequence(args.asset, options);
  } catch (const gbot::ScriptError &e) {
    throw UsageError(e.what());
  }
  gbot::SaveSequence(seq, args.out);
  std::cout << "wrote " << args.frames << " frames of " << args.asset << " ("
            << args.condition << ") to " << args.out << "\n";
  return 0;
}

int RunTrack(const TrackArgs &args) {
  gbot::Method method;
  try {
    method = gbot::ParseMethod(args.method);
  } catch (const std::invalid_argument &e) {
    throw UsageError(e.what());
  }
  for (const char *name : {gbot::kScriptFile, gbot::kGroundTruthFile,
                           gbot::kObservationsFile}) {
    if (!std::filesystem::exists(std::filesystem::path(args.data) / name)) {
      throw UsageError("missing " + (std::filesystem::path(args.data) / name).string());
    }
  }
  const gbot::Sequence seq = gbot::LoadSequence(args.data);

  gbot::SnapshotStore store;
  std::unique_ptr<gbot::PoseServer> server;
  if (!args.serve.empty()) {
    std::pair<std::string, int> addr;
    try {
      addr = gbot::ParseServeAddress(args.serve);
    } catch (const std::invalid_argument &e) {
      throw UsageError(e.what());
    }
    server = std::make_unique<gbot::PoseServer>(store);
    server->Start(addr.first, addr.second);
  }

  const std::vector<gbot::TrackReport> reports = gbot::TrackSequence(
      seq, method, server ? &store : nullptr, args.fps);
  if (server) server->Stop();

  std::vector<gbot::TrackReport> written = reports;
  if (args.no_timing) {
    for (gbot::TrackReport &r : written) r.runtime_ms = 0.0;
  }
  const std::filesystem::path out = args.out.empty() ? args.data : args.out;
  std::filesystem::create_directories(out);
  const std::string tag = gbot::MethodName(method);
  {
    std::ofstream f(out / ("track_" + tag + ".jsonl"), std::ios::binary);
    if (!f) throw std::runtime_error("cannot write to " + out.string());
    gbot::WriteReports(f, written, !args.no_timing);
  }
  const gbot::RunSummary summary = gbot::Summarize(seq, written, method);
  {
    std::ofstream f(out / ("summary_" + tag + ".json"), std::ios::binary);
    f << gbot::SummaryToJson(summary);
  }
  std::cout << summary.asset << " " << summary.condition << " " << tag
            << ": ADD(S) " << summary.add_s << ", e_trans " << summary.e_trans_cm
            << " cm, transitions " << summary.transitions << ", reinits "
            << summary.reinits << "\n";
  return 0;
}

int RunReport(const ReportArgs &args) {
  if (args.files.empty()) throw UsageError("report: no summary files given");
  std::vector<gbot::RunSummary> runs;
  for (const std::string &path : args.files) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot read " + path);
    std::stringstream text;
    text << in.rdbuf();
    runs.push_back(gbot::SummaryFromJson(text.str()));
  }
  const std::vector<gbot::RunSummary> rows = gbot::BuildReportRows(runs);
  const std::string md = gbot::RenderMarkdown(rows);
  if (!args.markdown.empty()) {
    std::ofstream(args.markdown, std::ios::binary) << md;
  }
  if (!args.csv.empty()) {
    std::ofstream(args.csv, std::ios::binary) << gbot::RenderCsv(rows);
  }
  std::cout << md;
  return 0;
}

}  // namespace

int main(int argc, char **argv) {
  SetupLogging();
  CLI::App app{"Graph-based multi-object pose tracking benchmark"};
  app.require_subcommand(1);

  GenerateArgs gen;
  CLI::App *generate = app.add_subcommand("generate", "Generate a sequence");
  generate->add_option("--asset", gen.asset, "Builtin asset")
      ->required()
      ->check(CLI::IsMember(gbot::BuiltinAssetNames()));
  generate->add_option("--condition", gen.condition, "normal|dynamic|blur|hand")
      ->check(CLI::IsMember({"normal", "dynamic", "blur", "hand"}));
  generate->add_option("--frames", gen.frames, "Sequence length")
      ->check(CLI::PositiveNumber);
  generate->add_option("--seed", gen.seed, "Noise seed");
  generate->add_option("--roster-occlusion", gen.roster_occlusion,
                       "Hide every part for N frames during the closing phase");
  generate->add_option("--out", gen.out, "Output directory");

  TrackArgs track;
  CLI::App *track_cmd = app.add_subcommand("track", "Track a generated sequence");
  track_cmd->add_option("--data", track.data, "Sequence directory")->required();
  track_cmd->add_option("--method", track.method, "independent|gbot|gbot-reinit")
      ->check(CLI::IsMember(gbot::MethodNames()));
  track_cmd->add_option("--serve", track.serve, "Publish poses on ADDR:PORT");
  track_cmd->add_option("--out", track.out, "Output directory (default: --data)");
  track_cmd->add_option("--fps", track.fps, "Pace tracking to this frame rate");
  track_cmd->add_flag("--no-timing", track.no_timing,
                      "Write runtime_ms as 0 for reproducible output");

  ReportArgs report;
  CLI::App *report_cmd = app.add_subcommand("report", "Tabulate run summaries");
  report_cmd->add_option("files", report.files, "summary_*.json files");
  report_cmd->add_option("--csv", report.csv, "Also write CSV here");
  report_cmd->add_option("--markdown", report.markdown, "Also write Markdown here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*generate) return RunGenerate(gen);
    if (*track_cmd) return RunTrack(track);
    if (*report_cmd) return RunReport(report);
  } catch (const UsageError &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
