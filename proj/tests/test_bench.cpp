#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"

#include "gbot/bench.h"
#include "gbot/serialization.h"

using namespace gbot;
namespace fs = std::filesystem;

namespace {

RunSummary Run(const std::string &asset, const std::string &cond, const std::string &method,
               double add_s, std::optional<double> rot = 2.0) {
  RunSummary r;
  r.asset = asset;
  r.condition = cond;
  r.method = method;
  r.frames = 100;
  r.add_s = add_s;
  r.e_trans_cm = add_s / 50.0;
  r.e_rot_deg = rot;
  r.ms_per_frame = 1.5;
  return r;
}

std::string Slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path ScratchDir(const std::string &name) {
  const fs::path dir = fs::temp_directory_path() / ("gbot_test_bench_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int Cli(const std::string &args) {
  const std::string cmd = std::string(GBOT_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("methods") {
  for (const std::string &name : MethodNames()) {
    CHECK(MethodName(ParseMethod(name)) == name);
  }
  CHECK_THROWS_AS(ParseMethod("gbot_reinit"), std::invalid_argument);
  CHECK(MethodConfig(Method::kGbotReinit).reinit_enabled);
  CHECK_FALSE(MethodConfig(Method::kGbot).reinit_enabled);
  CHECK_FALSE(MethodConfig(Method::kIndependent).use_links);
}

TEST_CASE("report rows") {
  const std::vector<RunSummary> runs{
      Run("clamp", "hand", "gbot", 80), Run("clamp", "hand", "independent", 60),
      Run("chuck", "hand", "gbot", 70, std::nullopt), Run("clamp", "hand", "gbot", 80)};
  const auto rows = BuildReportRows(runs);
  REQUIRE(rows.size() == 5);  // one duplicate collapsed, two mean rows
  const RunSummary &mean_gbot = rows[3];
  CHECK(mean_gbot.asset == kMeanOverall);
  CHECK(mean_gbot.method == "gbot");
  CHECK(mean_gbot.add_s == doctest::Approx(75.0));
  REQUIRE(mean_gbot.e_rot_deg.has_value());
  CHECK(*mean_gbot.e_rot_deg == 2.0);  // the symmetric-only row does not count
  CHECK(rows[4].method == "independent");
  CHECK(rows[4].add_s == 60.0);

  std::vector<RunSummary> conflict = runs;
  conflict.push_back(Run("clamp", "hand", "gbot", 81));
  CHECK_THROWS_AS(BuildReportRows(conflict), std::invalid_argument);
  CHECK_THROWS_AS(BuildReportRows({}), std::invalid_argument);

  const std::string md = RenderMarkdown(rows);
  CHECK(md.find("| asset | condition | method | ADD(S) |") == 0);
  CHECK(md.find("| chuck | hand | gbot | 70.0 | 1.4 | - | 1.50 |") != std::string::npos);
  CHECK(md.find("| Mean Overall |") != std::string::npos);
  const std::string csv = RenderCsv(rows);
  CHECK(csv.find("chuck,hand,gbot,70.000,1.400,,1.500\n") != std::string::npos);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 6);
}

TEST_CASE("summary json round trip") {
  RunSummary r = Run("clamp", "blur", "gbot-reinit", 55.5);
  r.seed = 77;
  r.transitions = 2;
  r.reinits = 4;
  const RunSummary back = SummaryFromJson(SummaryToJson(r));
  CHECK(back.asset == r.asset);
  CHECK(back.method == r.method);
  CHECK(back.seed == 77);
  CHECK(back.add_s == r.add_s);
  CHECK(back.e_rot_deg == r.e_rot_deg);
  CHECK(back.reinits == 4);
  r.e_rot_deg.reset();
  CHECK_FALSE(SummaryFromJson(SummaryToJson(r)).e_rot_deg.has_value());
  CHECK_THROWS_AS(SummaryFromJson("{}"), SchemaError);
}

TEST_CASE("noiseless tracking scores near 100") {
  Sequence seq;
  seq.asset = MakeBuiltinAsset("hobby_corner_clamp");
  ScriptOptions opt;
  opt.n_frames = 120;
  seq.script = MakeDefaultScript(seq.asset, opt);
  seq.ground_truth = GenerateGroundTruth(seq.script, seq.asset.graph);
  for (const GroundTruthFrame &g : seq.ground_truth) {
    ObservationFrame frame;
    for (const ObjectModel &m : seq.asset.models) {
      frame.push_back(SimulateObservation(m, g.poses.at(m.id), CameraIntrinsics{},
                                          NoiseProfile{}, g.frame_index));
    }
    seq.observations.push_back(std::move(frame));
  }
  for (Method method : {Method::kIndependent, Method::kGbot}) {
    const auto reports = TrackSequence(seq, method);
    const RunSummary s = Summarize(seq, reports, method);
    CHECK(s.frames == 120);
    CHECK(s.add_s > 99.0);
    CHECK(s.transitions == seq.asset.graph.states.size() - 1);
  }
}

TEST_CASE("sequence files round trip") {
  ScriptOptions opt;
  opt.n_frames = 60;
  opt.condition = Condition::kDynamic;
  opt.seed = 3;
  const Sequence seq = GenerateSequence("hobby_corner_clamp", opt);
  const fs::path dir = ScratchDir("files");
  SaveSequence(seq, dir);
  const Sequence back = LoadSequence(dir);
  CHECK(back.asset.name == seq.asset.name);
  CHECK(back.observations.size() == 60);
  CHECK(back.ground_truth.size() == 60);
  fs::remove(dir / kObservationsFile);
  CHECK_THROWS_AS(LoadSequence(dir), std::runtime_error);
  fs::remove_all(dir);
}

TEST_CASE("cli exit codes and determinism") {
  const fs::path dir = ScratchDir("cli");
  const std::string a = (dir / "a").string(), b = (dir / "b").string();
  const std::string gen = "generate --asset hobby_corner_clamp --condition hand --frames 80 --seed 4 --out ";
  REQUIRE(Cli(gen + a) == 0);
  REQUIRE(Cli(gen + b) == 0);
  for (const char *f : {kScriptFile, kGroundTruthFile, kObservationsFile}) {
    CHECK(Slurp(fs::path(a) / f) == Slurp(fs::path(b) / f));
  }

  CHECK(Cli("generate --asset hobby_corner_clamp --condition fog --out " + a) == 2);
  CHECK(Cli("generate --asset gearbox --out " + a) == 2);
  CHECK(Cli("generate --asset hobby_corner_clamp --frames 10 --out " + a) == 2);
  CHECK(Cli("track --data " + a + " --method gbot_reinit") == 2);
  CHECK(Cli("track --data " + (dir / "missing").string()) == 2);
  CHECK(Cli("track --data " + a + " --serve nonsense") == 2);
  CHECK(Cli("report") == 2);
  CHECK(Cli("frobnicate") == 2);
  CHECK(Cli("") == 2);

  REQUIRE(Cli("track --data " + a + " --method gbot --no-timing") == 0);
  REQUIRE(Cli("track --data " + b + " --method gbot --no-timing") == 0);
  CHECK(Slurp(fs::path(a) / "track_gbot.jsonl") == Slurp(fs::path(b) / "track_gbot.jsonl"));
  CHECK(fs::exists(fs::path(a) / "summary_gbot.json"));

  const std::string md = (dir / "table.md").string();
  CHECK(Cli("report " + (fs::path(a) / "summary_gbot.json").string() + " --markdown " + md) == 0);
  CHECK(Slurp(md).find(kMeanOverall) != std::string::npos);

  // A corrupt summary is a runtime failure.
  std::ofstream(dir / "bad.json") << "{";
  CHECK(Cli("report " + (dir / "bad.json").string()) == 1);
  fs::remove_all(dir);
}
