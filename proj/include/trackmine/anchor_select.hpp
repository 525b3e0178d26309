#pragma once

// Training-role decisions for detector anchor boxes in one frame, from mined tracks,
// a free-space mask and a depth map; plus the person + bicycle -> cyclist track merge.
//
// A pixel (row r, col c) belongs to a box when its centre (c + 0.5, r + 0.5) lies
// inside the half-open box.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "trackmine/track_model.hpp"

namespace trackmine {

inline constexpr std::uint16_t kNoDepth = 0;

// Range per pixel in millimetres, row-major; kNoDepth marks invalid pixels.
struct DepthMap {
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  std::vector<std::uint16_t> mm;

  DepthMap() = default;
  DepthMap(std::uint32_t h, std::uint32_t w, std::uint16_t fill = kNoDepth)
      : height(h), width(w), mm(std::size_t{h} * w, fill) {}

  std::uint16_t at(std::uint32_t row, std::uint32_t col) const { return mm[std::size_t{row} * width + col]; }
  void set(std::uint32_t row, std::uint32_t col, std::uint16_t v) { mm[std::size_t{row} * width + col] = v; }

  friend bool operator==(const DepthMap&, const DepthMap&) = default;
};

struct SceneTrack {
  TrackId id = 0;
  Box box;
  std::string class_label{kUnknownClass};

  friend bool operator==(const SceneTrack&, const SceneTrack&) = default;
};

struct SceneFrame {
  FrameIndex frame = 0;
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  std::vector<Box> anchors;
  std::vector<SceneTrack> tracks;
  BitMask free_space;  // ground and tall structures
  DepthMap depth;
};

// Throws SizeMismatch when the mask or depth map does not match the image size.
void validate(const SceneFrame& frame);

struct AnchorConfig {
  double pos_iou = 0.5;
  double neg_area_fraction = 0.9;
  double far_pixel_fraction = 0.5;
  double far_distance_m = 30.0;
  double unknown_ignore_iou = 0.3;
};

void validate(const AnchorConfig& cfg);

// negatives1: unknown tracks are not ignored and negatives need no free space.
// negatives2: unknown tracks are not ignored.
enum class AnchorVariant { Full, Negatives1, Negatives2 };

AnchorVariant parse_variant(const std::string& name);
const char* to_string(AnchorVariant v);

enum class AnchorOutcome { Positive, Negative, Ignore, ExcludedFar };
enum class AnchorRule { Far, KnownTrack, UnknownTrack, FreeSpace, Fallback };

const char* to_string(AnchorOutcome o);
const char* to_string(AnchorRule r);

struct AnchorDecision {
  std::size_t anchor = 0;
  AnchorOutcome outcome = AnchorOutcome::Ignore;
  std::string class_label;  // set for Positive only
  AnchorRule rule = AnchorRule::Fallback;

  friend bool operator==(const AnchorDecision&, const AnchorDecision&) = default;
};

struct PixelRect {
  std::uint32_t row0 = 0, row1 = 0;  // [row0, row1)
  std::uint32_t col0 = 0, col1 = 0;

  std::size_t count() const { return std::size_t{row1 - row0} * (col1 - col0); }
};

// Pixels covered by the box. Throws OutOfBounds if the box leaves the image.
PixelRect pixel_rect(const Box& box, std::uint32_t height, std::uint32_t width);

// Share of the box's pixels that are invalid or beyond far_distance_m; 0 for a box
// covering no pixel centre.
double far_fraction(const Box& anchor, const DepthMap& depth, double far_distance_m);

double mask_containment(const Box& anchor, const BitMask& free_space);

AnchorDecision classify_anchor(std::size_t index, const SceneFrame& frame, const AnchorConfig& cfg,
                               AnchorVariant variant = AnchorVariant::Full);

struct AnchorSummary {
  std::size_t positive = 0;
  std::size_t negative = 0;
  std::size_t ignore = 0;
  std::size_t excluded_far = 0;
};

struct AnchorSelection {
  std::vector<AnchorDecision> decisions;  // by anchor index
  AnchorSummary summary;
};

AnchorSelection select_anchors(const SceneFrame& frame, const AnchorConfig& cfg,
                               AnchorVariant variant = AnchorVariant::Full);

// Pairs person and bicycle tracks whose footpoints are closer than max_dist_m in a
// strict majority of their co-visible frames, greedily by ascending mean distance.
// Each pair becomes one "cyclist" track with the smaller id, placed where the earlier
// of the two was; shared frames get the union box and mask and the mean footpoint.
// Throws MissingPositions when a person or bicycle frame lacks a footpoint.
TrackCollection merge_cyclists(const TrackCollection& tracks, double max_dist_m = 1.0);

}  // namespace trackmine
