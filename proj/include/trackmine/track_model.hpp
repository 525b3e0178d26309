#pragma once

// Geometry shared by every stage: boxes, run-length encoded masks, tracklets and tracks.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace trackmine {

inline constexpr std::string_view kUnknownClass = "unknown";

using TrackletId = std::int64_t;
using TrackId = std::int64_t;
using FrameIndex = std::int64_t;

// Axis-aligned box, half-open [x, x+w) x [y, y+h) in continuous pixel coordinates.
struct Box {
  double x = 0;
  double y = 0;
  double w = 0;
  double h = 0;

  double right() const { return x + w; }
  double bottom() const { return y + h; }
  double area() const { return w * h; }

  friend bool operator==(const Box&, const Box&) = default;
};

bool is_valid(const Box& b);

// Smallest box covering both.
Box box_union(const Box& a, const Box& b);

// Standard IoU; 0 for non-overlapping boxes.
double box_iou(const Box& a, const Box& b);

// Column-major run lengths starting with a run of zeros (which may be empty).
struct MaskRLE {
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  std::vector<std::uint32_t> counts;

  std::uint64_t pixel_count() const { return std::uint64_t{height} * width; }
  // Number of foreground pixels.
  std::uint64_t area() const;

  friend bool operator==(const MaskRLE&, const MaskRLE&) = default;
};

// Throws SizeMismatch when the runs do not cover height x width exactly.
void validate(const MaskRLE& m);

// Dense binary mask, row-major, one byte (0/1) per pixel.
struct BitMask {
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  std::vector<std::uint8_t> pixels;

  BitMask() = default;
  BitMask(std::uint32_t h, std::uint32_t w) : height(h), width(w), pixels(std::size_t{h} * w, 0) {}

  bool at(std::uint32_t row, std::uint32_t col) const {
    return pixels[std::size_t{row} * width + col] != 0;
  }
  void set(std::uint32_t row, std::uint32_t col, bool v) {
    pixels[std::size_t{row} * width + col] = v ? 1 : 0;
  }
  const std::uint8_t* row_ptr(std::uint32_t row) const {
    return pixels.data() + std::size_t{row} * width;
  }
  std::size_t count() const;

  friend bool operator==(const BitMask&, const BitMask&) = default;
};

BitMask decode_rle(const MaskRLE& m);

// Canonical encoding: no zero-length runs except possibly the leading one.
MaskRLE encode_rle(const BitMask& m);

// |A ∩ B| / |A ∪ B| computed on the runs directly; 0 when both masks are empty.
double mask_iou(const MaskRLE& a, const MaskRLE& b);

// Pixel-wise OR of two equally sized masks.
MaskRLE mask_union(const MaskRLE& a, const MaskRLE& b);

// Filled rectangle [col0, col0+w) x [row0, row0+h), clipped to the image.
MaskRLE rect_mask(std::uint32_t height, std::uint32_t width, std::int64_t col0, std::int64_t row0,
                  std::int64_t w, std::int64_t h);

// Ground-plane footpoint in meters.
struct GroundPoint {
  double x = 0;
  double z = 0;

  friend bool operator==(const GroundPoint&, const GroundPoint&) = default;
};

struct TrackFrame {
  FrameIndex t = 0;
  Box box;
  MaskRLE mask;
  std::optional<GroundPoint> foot;
  // Tracklet that supplied this frame (tracks only).
  std::optional<TrackletId> source;

  friend bool operator==(const TrackFrame&, const TrackFrame&) = default;
};

struct Tracklet {
  TrackletId id = 0;
  std::vector<TrackFrame> frames;
  std::string class_label{kUnknownClass};

  std::size_t length() const { return frames.size(); }
  FrameIndex first_frame() const { return frames.front().t; }
  FrameIndex last_frame() const { return frames.back().t; }
  // nullptr if the tracklet has no observation at t.
  const TrackFrame* at(FrameIndex t) const;

  friend bool operator==(const Tracklet&, const Tracklet&) = default;
};

struct Track {
  TrackId id = 0;
  std::vector<TrackletId> member_tracklet_ids;
  std::vector<TrackFrame> frames;
  std::string class_label{kUnknownClass};

  const TrackFrame* at(FrameIndex t) const;

  friend bool operator==(const Track&, const Track&) = default;
};

struct Provenance {
  std::string dataset;
  std::int64_t frame_count = 0;
  std::int64_t proposals_per_frame = 0;

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct TrackCollection {
  std::vector<Track> tracks;
  Provenance provenance;

  friend bool operator==(const TrackCollection&, const TrackCollection&) = default;
};

bool is_known_class(std::string_view label);

// Invariant checks; throw InconsistentInputs (or SizeMismatch for masks).
void validate(const Tracklet& t);
void validate(const Track& t);
void validate(const TrackCollection& c);

}  // namespace trackmine
