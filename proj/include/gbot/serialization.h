#pragma once

// JSON and JSON-lines encodings shared by the CLI stages and the pose API.
// Poses are {"t": [x, y, z], "q": [w, x, y, z]}; units are meters.

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "gbot/geom.h"
#include "gbot/scene_sim.h"
#include "gbot/tracker.h"

namespace gbot {

nlohmann::json PoseToJson(const RigidTransform &pose);
// Throws SchemaError naming `field` on malformed input.
RigidTransform PoseFromJson(const nlohmann::json &j, const std::string &field);

std::string ScriptToJson(const SequenceScript &script);
SequenceScript ParseScript(std::string_view text);

std::string GroundTruthToJsonLine(const GroundTruthFrame &frame);
GroundTruthFrame ParseGroundTruthLine(std::string_view line);
void WriteGroundTruth(std::ostream &out,
                      const std::vector<GroundTruthFrame> &frames);
std::vector<GroundTruthFrame> ReadGroundTruth(std::istream &in);

std::string ObservationsToJsonLine(const ObservationFrame &frame,
                                   std::size_t frame_index);
ObservationFrame ParseObservationsLine(std::string_view line);
void WriteObservations(std::ostream &out,
                       const std::vector<ObservationFrame> &frames);
std::vector<ObservationFrame> ReadObservations(std::istream &in);

// include_timing=false writes runtime_ms as 0 so that outputs are
// reproducible byte for byte.
nlohmann::json ReportToJson(const TrackReport &report, bool include_timing);
TrackReport ReportFromJson(const nlohmann::json &j);
void WriteReports(std::ostream &out, const std::vector<TrackReport> &reports,
                  bool include_timing);
std::vector<TrackReport> ReadReports(std::istream &in);

}  // namespace gbot
