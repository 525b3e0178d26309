#pragma once

// Seeded generators for test and demo data, written in the same formats the
// pipeline reads. A spec and its seed fix every output byte.

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "trackmine/anchor_select.hpp"
#include "trackmine/embedding_io.hpp"
#include "trackmine/track_model.hpp"
#include "trackmine/tracklet_merge.hpp"

namespace trackmine {

// Objects drift sideways in horizontal bands. Each object is covered by consecutive
// tracklets that are selected in turn; neighbouring tracklets overlap in time and
// their masks in the shared frames have IoU close to handoff_iou.
struct HandoffSpec {
  std::uint64_t seed = 1;
  std::size_t objects = 5;
  std::size_t tracklets_per_object = 2;  // 1..3
  double handoff_iou = 0.9;
  std::size_t segment_frames = 10;       // frames each tracklet is the selected one
  std::size_t overlap_frames = 4;        // extension past each handoff
  std::size_t distractors_per_object = 0;  // short tracklets that are never selected
  std::uint32_t height = 240;
  std::uint32_t width = 640;
  std::size_t bands = 4;
  std::vector<std::string> classes{"car", "person", "bicycle"};
  // Crop embeddings (key "<tracklet>:<t>") grouped by class; 0 disables them.
  std::size_t crop_dim = 0;
  double crop_separation = 10.0;
  double crop_noise = 1.0;
};

struct TruthRow {
  TrackletId tracklet = 0;
  std::size_t object = 0;
  std::string class_label;
};

struct HandoffData {
  std::vector<Tracklet> tracklets;
  SelectionLog selection;
  std::vector<TruthRow> truth;
  EmbeddingSet crops;
  // Smallest mask IoU over all handoff frames, or 1 with a single tracklet per object.
  double min_handoff_iou = 1.0;
  double max_handoff_iou = 0.0;
};

HandoffData gen_handoff(const HandoffSpec& spec);

// Horizontal shift of two equal w-wide rectangles that gives IoU r.
std::int64_t handoff_shift(std::int64_t w, double r);

// Class centres spaced `spacing` apart (adjacent ones) on a circle in the first two
// coordinates, or on a line when dim == 1.
std::vector<std::vector<double>> class_centres(std::size_t classes, std::size_t dim, double spacing);

struct BlobsSpec {
  std::uint64_t seed = 1;
  std::size_t classes = 3;
  std::size_t per_class = 100;
  std::size_t dim = 2;
  double separation = 10.0;  // centre spacing in units of sigma
  double sigma = 1.0;
  double outlier_fraction = 0.0;  // extra uniform points, relative to the inlier count
};

struct BlobsData {
  EmbeddingSet features;
  std::vector<std::pair<std::string, std::string>> labels;  // id, "class<k>" or "outlier"
};

BlobsData gen_blobs(const BlobsSpec& spec);

// Image layout, top to bottom: a far band (a wall beyond range, or near background),
// then a potential-objects band between two tall-structure columns, then ground.
struct SceneSpec {
  std::uint64_t seed = 1;
  FrameIndex frame = 0;
  std::uint32_t height = 96;
  std::uint32_t width = 160;
  std::uint32_t far_rows = 24;
  std::uint32_t ground_row = 60;
  std::uint32_t structure_cols = 16;
  bool far_wall = true;
  std::size_t known_objects = 1;
  std::size_t unknown_objects = 1;
  std::size_t anchors = 1000;
  AnchorConfig config;  // thresholds the expected decisions assume
};

struct SceneData {
  SceneFrame frame;
  std::vector<Track> tracks;
  // Decisions under the full cascade, derived from the region layout.
  std::vector<AnchorDecision> expected;
};

SceneData gen_scene(const SceneSpec& spec);

// File writers; the directory is created if needed. Returns the written paths.
std::vector<std::filesystem::path> write_handoff(const HandoffData& data, const std::filesystem::path& dir);
std::vector<std::filesystem::path> write_blobs(const BlobsData& data, const std::filesystem::path& dir);
std::vector<std::filesystem::path> write_scene(const SceneData& data, const std::filesystem::path& dir);

std::string encode_truth_csv(const std::vector<TruthRow>& rows);

}  // namespace trackmine
