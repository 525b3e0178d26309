#include "trackmine/track_model.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "trackmine/error.hpp"

namespace trackmine {
namespace {

// Walks the runs of an RLE mask; value alternates 0,1,0,... starting at zero.
class RunCursor {
 public:
  explicit RunCursor(const MaskRLE& m) : counts_(m.counts) { skip_empty(); }

  bool done() const { return index_ >= counts_.size(); }
  bool value() const { return (index_ & 1U) != 0; }
  std::uint64_t remaining() const { return remaining_; }

  void advance(std::uint64_t n) {
    remaining_ -= n;
    if (remaining_ == 0) {
      ++index_;
      skip_empty();
    }
  }

 private:
  void skip_empty() {
    while (index_ < counts_.size() && counts_[index_] == 0) ++index_;
    remaining_ = index_ < counts_.size() ? counts_[index_] : 0;
  }

  const std::vector<std::uint32_t>& counts_;
  std::size_t index_ = 0;
  std::uint64_t remaining_ = 0;
};

// Appends runs while keeping the canonical alternating form.
class RunBuilder {
 public:
  void push(bool value, std::uint64_t n) {
    if (n == 0) return;
    if (counts_.empty() && value) counts_.push_back(0);
    const bool last_value = !counts_.empty() && ((counts_.size() - 1) & 1U) != 0;
    if (!counts_.empty() && last_value == value) {
      counts_.back() += static_cast<std::uint32_t>(n);
    } else {
      counts_.push_back(static_cast<std::uint32_t>(n));
    }
  }
  std::vector<std::uint32_t> take() { return std::move(counts_); }

 private:
  std::vector<std::uint32_t> counts_;
};

void require_same_size(const MaskRLE& a, const MaskRLE& b) {
  if (a.height != b.height || a.width != b.width) {
    throw Error(ErrorKind::SizeMismatch, "mask sizes differ: " + std::to_string(a.height) + "x" +
                                             std::to_string(a.width) + " vs " +
                                             std::to_string(b.height) + "x" +
                                             std::to_string(b.width));
  }
}

template <typename Frames>
const TrackFrame* find_frame(const Frames& frames, FrameIndex t) {
  auto it = std::lower_bound(frames.begin(), frames.end(), t,
                             [](const TrackFrame& f, FrameIndex v) { return f.t < v; });
  return (it != frames.end() && it->t == t) ? &*it : nullptr;
}

void validate_frames(const std::vector<TrackFrame>& frames, std::int64_t id, const char* what) {
  if (frames.empty()) {
    throw Error(ErrorKind::InconsistentInputs, std::string(what) + " " + std::to_string(id) +
                                                   " has no frames");
  }
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (i > 0 && frames[i].t <= frames[i - 1].t) {
      throw Error(ErrorKind::InconsistentInputs,
                  std::string(what) + " " + std::to_string(id) + ": frame indices not increasing");
    }
    if (!is_valid(frames[i].box)) {
      throw Error(ErrorKind::InconsistentInputs,
                  std::string(what) + " " + std::to_string(id) + ": invalid box at frame " +
                      std::to_string(frames[i].t));
    }
    validate(frames[i].mask);
  }
}

}  // namespace

bool is_valid(const Box& b) {
  return std::isfinite(b.x) && std::isfinite(b.y) && std::isfinite(b.w) && std::isfinite(b.h) &&
         b.w > 0 && b.h > 0;
}

Box box_union(const Box& a, const Box& b) {
  const double x0 = std::min(a.x, b.x);
  const double y0 = std::min(a.y, b.y);
  return {x0, y0, std::max(a.right(), b.right()) - x0, std::max(a.bottom(), b.bottom()) - y0};
}

double box_iou(const Box& a, const Box& b) {
  const double iw = std::min(a.right(), b.right()) - std::max(a.x, b.x);
  const double ih = std::min(a.bottom(), b.bottom()) - std::max(a.y, b.y);
  if (iw <= 0 || ih <= 0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return uni > 0 ? inter / uni : 0.0;
}

std::uint64_t MaskRLE::area() const {
  std::uint64_t s = 0;
  for (std::size_t i = 1; i < counts.size(); i += 2) s += counts[i];
  return s;
}

void validate(const MaskRLE& m) {
  std::uint64_t s = 0;
  for (auto c : m.counts) s += c;
  if (s != m.pixel_count()) {
    throw Error(ErrorKind::SizeMismatch, "RLE counts sum to " + std::to_string(s) + ", expected " +
                                             std::to_string(m.pixel_count()));
  }
}

std::size_t BitMask::count() const {
  return static_cast<std::size_t>(std::count_if(pixels.begin(), pixels.end(),
                                                [](std::uint8_t v) { return v != 0; }));
}

BitMask decode_rle(const MaskRLE& m) {
  validate(m);
  BitMask out(m.height, m.width);
  std::uint64_t pos = 0;
  bool value = false;
  for (auto c : m.counts) {
    if (value) {
      for (std::uint64_t k = pos; k < pos + c; ++k) {
        const auto col = static_cast<std::uint32_t>(k / m.height);
        const auto row = static_cast<std::uint32_t>(k % m.height);
        out.set(row, col, true);
      }
    }
    pos += c;
    value = !value;
  }
  return out;
}

MaskRLE encode_rle(const BitMask& m) {
  RunBuilder runs;
  for (std::uint32_t col = 0; col < m.width; ++col) {
    for (std::uint32_t row = 0; row < m.height; ++row) runs.push(m.at(row, col), 1);
  }
  MaskRLE out{m.height, m.width, runs.take()};
  if (out.counts.empty()) out.counts.push_back(0);
  return out;
}

double mask_iou(const MaskRLE& a, const MaskRLE& b) {
  require_same_size(a, b);
  validate(a);
  validate(b);
  std::uint64_t inter = 0;
  std::uint64_t uni = 0;
  RunCursor ca(a);
  RunCursor cb(b);
  while (!ca.done() && !cb.done()) {
    const std::uint64_t step = std::min(ca.remaining(), cb.remaining());
    if (ca.value() && cb.value()) inter += step;
    if (ca.value() || cb.value()) uni += step;
    ca.advance(step);
    cb.advance(step);
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

MaskRLE mask_union(const MaskRLE& a, const MaskRLE& b) {
  require_same_size(a, b);
  validate(a);
  validate(b);
  RunBuilder runs;
  RunCursor ca(a);
  RunCursor cb(b);
  while (!ca.done() && !cb.done()) {
    const std::uint64_t step = std::min(ca.remaining(), cb.remaining());
    runs.push(ca.value() || cb.value(), step);
    ca.advance(step);
    cb.advance(step);
  }
  MaskRLE out{a.height, a.width, runs.take()};
  if (out.counts.empty()) out.counts.push_back(0);
  return out;
}

MaskRLE rect_mask(std::uint32_t height, std::uint32_t width, std::int64_t col0, std::int64_t row0,
                  std::int64_t w, std::int64_t h) {
  const std::int64_t c0 = std::clamp<std::int64_t>(col0, 0, width);
  const std::int64_t c1 = std::clamp<std::int64_t>(col0 + w, 0, width);
  const std::int64_t r0 = std::clamp<std::int64_t>(row0, 0, height);
  const std::int64_t r1 = std::clamp<std::int64_t>(row0 + h, 0, height);
  RunBuilder runs;
  if (c1 <= c0 || r1 <= r0) {
    runs.push(false, std::uint64_t{height} * width);
  } else {
    runs.push(false, static_cast<std::uint64_t>(c0) * height);
    for (std::int64_t c = c0; c < c1; ++c) {
      runs.push(false, static_cast<std::uint64_t>(r0));
      runs.push(true, static_cast<std::uint64_t>(r1 - r0));
      runs.push(false, static_cast<std::uint64_t>(height - r1));
    }
    runs.push(false, static_cast<std::uint64_t>(width - c1) * height);
  }
  MaskRLE out{height, width, runs.take()};
  if (out.counts.empty()) out.counts.push_back(0);
  return out;
}

const TrackFrame* Tracklet::at(FrameIndex t) const { return find_frame(frames, t); }

const TrackFrame* Track::at(FrameIndex t) const { return find_frame(frames, t); }

bool is_known_class(std::string_view label) { return !label.empty() && label != kUnknownClass; }

void validate(const Tracklet& t) { validate_frames(t.frames, t.id, "tracklet"); }

void validate(const Track& t) { validate_frames(t.frames, t.id, "track"); }

void validate(const TrackCollection& c) {
  std::unordered_set<TrackId> ids;
  for (const auto& t : c.tracks) {
    if (!ids.insert(t.id).second) {
      throw Error(ErrorKind::InconsistentInputs, "duplicate track id " + std::to_string(t.id));
    }
    validate(t);
  }
}

}  // namespace trackmine
