#pragma once

// JSON Lines interchange for tracklets, tracks and selection logs.
//
//   {"id":7,"class":"car","frames":[{"t":3,"box":[x,y,w,h],
//     "mask":{"size":[H,W],"counts":[...]}}]}
//
// Tracks add "members":[ids]; frames may carry "foot":[x,z] and "src":tracklet_id.

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "trackmine/track_model.hpp"
#include "trackmine/tracklet_merge.hpp"

namespace trackmine {

// Calls fn for each non-blank line, with Parse errors annotated by line number.
void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(const nlohmann::json&)>& fn);

nlohmann::json to_json(const MaskRLE& m);
MaskRLE mask_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TrackFrame& f);
TrackFrame frame_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Tracklet& t);
Tracklet tracklet_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Track& t);
Track track_from_json(const nlohmann::json& j);

std::vector<Tracklet> read_tracklets(const std::filesystem::path& path);
std::vector<Track> read_tracks(const std::filesystem::path& path);
SelectionLog read_selection(const std::filesystem::path& path);

std::string tracklets_to_jsonl(const std::vector<Tracklet>& tracklets);
std::string tracks_to_jsonl(const std::vector<Track>& tracks);
std::string selection_to_jsonl(const SelectionLog& log);

}  // namespace trackmine
