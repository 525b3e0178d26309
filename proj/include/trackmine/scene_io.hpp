#pragma once

// On-disk scene descriptors for anchor selection.
//
//   scene.json   {"frame":12,"size":[H,W],"free_space":"free.json","depth":"depth.pgm",
//                 "anchors":"anchors.csv"}
//   free.json    RLE mask, same JSON form as track masks
//   depth.pgm    binary PGM (P5), maxval 65535, big-endian millimetres, 0 = no depth
//   anchors.csv  x,y,w,h per line, optional header
//
// Relative paths resolve against the directory holding scene.json.

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "trackmine/anchor_select.hpp"

namespace trackmine {

std::string encode_pgm16(const DepthMap& depth);
DepthMap parse_pgm16(const std::string& bytes);

std::string encode_anchors_csv(const std::vector<Box>& anchors);
std::vector<Box> parse_anchors_csv(const std::string& text);

// Boxes of the tracks observed at `frame`.
std::vector<SceneTrack> scene_tracks_at(const std::vector<Track>& tracks, FrameIndex frame);

// Reads scene.json and the files it references; tracks are attached for its frame.
SceneFrame load_scene(const std::filesystem::path& scene_json, const std::vector<Track>& tracks);

nlohmann::json to_json(const AnchorDecision& d);
std::string decisions_to_jsonl(const std::vector<AnchorDecision>& decisions);

}  // namespace trackmine
