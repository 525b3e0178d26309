#include "trackmine/anchor_select.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "trackmine/error.hpp"
#include "trackmine/parallel.hpp"
#include "trackmine/simd/kernels.hpp"

namespace trackmine {

void validate(const SceneFrame& f) {
  if (f.free_space.height != f.height || f.free_space.width != f.width ||
      f.free_space.pixels.size() != std::size_t{f.height} * f.width) {
    throw Error(ErrorKind::SizeMismatch, "free-space mask does not match the image size");
  }
  if (f.depth.height != f.height || f.depth.width != f.width ||
      f.depth.mm.size() != std::size_t{f.height} * f.width) {
    throw Error(ErrorKind::SizeMismatch, "depth map does not match the image size");
  }
  for (const auto& t : f.tracks) {
    if (!is_valid(t.box)) throw Error(ErrorKind::InconsistentInputs, "invalid track box");
  }
}

void validate(const AnchorConfig& c) {
  auto frac = [](double v, const char* name) {
    if (!(v > 0.0 && v <= 1.0)) throw Error(ErrorKind::Usage, std::string(name) + " must be in (0,1]");
  };
  frac(c.pos_iou, "pos_iou");
  frac(c.neg_area_fraction, "neg_area_fraction");
  frac(c.far_pixel_fraction, "far_pixel_fraction");
  frac(c.unknown_ignore_iou, "unknown_ignore_iou");
  if (!(c.far_distance_m > 0.0)) throw Error(ErrorKind::Usage, "far distance must be positive");
}

AnchorVariant parse_variant(const std::string& name) {
  if (name == "full") return AnchorVariant::Full;
  if (name == "negatives1") return AnchorVariant::Negatives1;
  if (name == "negatives2") return AnchorVariant::Negatives2;
  throw Error(ErrorKind::Usage, "unknown anchor variant '" + name + "'");
}

const char* to_string(AnchorVariant v) {
  switch (v) {
    case AnchorVariant::Full: return "full";
    case AnchorVariant::Negatives1: return "negatives1";
    case AnchorVariant::Negatives2: return "negatives2";
  }
  return "?";
}

const char* to_string(AnchorOutcome o) {
  switch (o) {
    case AnchorOutcome::Positive: return "positive";
    case AnchorOutcome::Negative: return "negative";
    case AnchorOutcome::Ignore: return "ignore";
    case AnchorOutcome::ExcludedFar: return "excluded_far";
  }
  return "?";
}

const char* to_string(AnchorRule r) {
  switch (r) {
    case AnchorRule::Far: return "far";
    case AnchorRule::KnownTrack: return "known_track";
    case AnchorRule::UnknownTrack: return "unknown_track";
    case AnchorRule::FreeSpace: return "free_space";
    case AnchorRule::Fallback: return "fallback";
  }
  return "?";
}

PixelRect pixel_rect(const Box& b, std::uint32_t height, std::uint32_t width) {
  if (!is_valid(b) || b.x < 0 || b.y < 0 || b.right() > width || b.bottom() > height) {
    throw Error(ErrorKind::OutOfBounds, "box [" + std::to_string(b.x) + "," + std::to_string(b.y) + "," +
                                            std::to_string(b.w) + "," + std::to_string(b.h) +
                                            "] leaves the " + std::to_string(width) + "x" +
                                            std::to_string(height) + " image");
  }
  // Centre c + 0.5 in [x, x + w)  <=>  c in [ceil(x - 0.5), ceil(x + w - 0.5)).
  auto lo = [](double v) { return static_cast<std::uint32_t>(std::max(0.0, std::ceil(v - 0.5))); };
  PixelRect r;
  r.col0 = lo(b.x);
  r.col1 = std::max(r.col0, std::min(width, lo(b.right())));
  r.row0 = lo(b.y);
  r.row1 = std::max(r.row0, std::min(height, lo(b.bottom())));
  return r;
}

double far_fraction(const Box& anchor, const DepthMap& depth, double far_distance_m) {
  const PixelRect r = pixel_rect(anchor, depth.height, depth.width);
  if (r.count() == 0) return 0.0;
  const double mm = std::floor(far_distance_m * 1000.0);
  const auto threshold = static_cast<std::uint16_t>(std::clamp(mm, 0.0, 65535.0));
  const auto& k = simd::active();
  std::size_t far = 0;
  for (std::uint32_t row = r.row0; row < r.row1; ++row) {
    far += k.count_far_u16(depth.mm.data() + std::size_t{row} * depth.width + r.col0, r.col1 - r.col0,
                           threshold);
  }
  return static_cast<double>(far) / static_cast<double>(r.count());
}

double mask_containment(const Box& anchor, const BitMask& free_space) {
  const PixelRect r = pixel_rect(anchor, free_space.height, free_space.width);
  if (r.count() == 0) return 0.0;
  const auto& k = simd::active();
  std::size_t inside = 0;
  for (std::uint32_t row = r.row0; row < r.row1; ++row) {
    inside += k.count_nonzero_u8(free_space.row_ptr(row) + r.col0, r.col1 - r.col0);
  }
  return static_cast<double>(inside) / static_cast<double>(r.count());
}

AnchorDecision classify_anchor(std::size_t index, const SceneFrame& frame, const AnchorConfig& cfg,
                               AnchorVariant variant) {
  const Box& a = frame.anchors.at(index);
  AnchorDecision d;
  d.anchor = index;

  if (far_fraction(a, frame.depth, cfg.far_distance_m) >= cfg.far_pixel_fraction) {
    d.outcome = AnchorOutcome::ExcludedFar;
    d.rule = AnchorRule::Far;
    return d;
  }

  const SceneTrack* best = nullptr;
  double best_iou = 0.0;
  bool unknown_hit = false;
  for (const auto& t : frame.tracks) {
    const double iou = box_iou(a, t.box);
    if (!is_known_class(t.class_label)) {
      unknown_hit = unknown_hit || iou > cfg.unknown_ignore_iou;
      continue;
    }
    if (iou <= cfg.pos_iou) continue;
    const bool better = best == nullptr || iou > best_iou ||
                        (iou == best_iou && (t.box.area() > best->box.area() ||
                                             (t.box.area() == best->box.area() && t.id < best->id)));
    if (better) {
      best = &t;
      best_iou = iou;
    }
  }
  if (best != nullptr) {
    d.outcome = AnchorOutcome::Positive;
    d.class_label = best->class_label;
    d.rule = AnchorRule::KnownTrack;
    return d;
  }

  if (variant == AnchorVariant::Full && unknown_hit) {
    d.outcome = AnchorOutcome::Ignore;
    d.rule = AnchorRule::UnknownTrack;
    return d;
  }

  if (variant == AnchorVariant::Negatives1 ||
      mask_containment(a, frame.free_space) >= cfg.neg_area_fraction) {
    d.outcome = AnchorOutcome::Negative;
    d.rule = AnchorRule::FreeSpace;
    return d;
  }

  d.outcome = AnchorOutcome::Ignore;
  d.rule = AnchorRule::Fallback;
  return d;
}

AnchorSelection select_anchors(const SceneFrame& frame, const AnchorConfig& cfg, AnchorVariant variant) {
  validate(frame);
  validate(cfg);
  AnchorSelection out;
  out.decisions.resize(frame.anchors.size());
  parallel_for(frame.anchors.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) out.decisions[i] = classify_anchor(i, frame, cfg, variant);
  });
  for (const auto& d : out.decisions) {
    switch (d.outcome) {
      case AnchorOutcome::Positive: ++out.summary.positive; break;
      case AnchorOutcome::Negative: ++out.summary.negative; break;
      case AnchorOutcome::Ignore: ++out.summary.ignore; break;
      case AnchorOutcome::ExcludedFar: ++out.summary.excluded_far; break;
    }
  }
  return out;
}

namespace {

void require_footpoints(const Track& t) {
  for (const auto& f : t.frames) {
    if (!f.foot) {
      throw Error(ErrorKind::MissingPositions, "track " + std::to_string(t.id) + " has no footpoint at frame " +
                                                   std::to_string(f.t));
    }
  }
}

struct Pairing {
  double mean = 0;
  std::size_t person = 0;   // index into the collection
  std::size_t bicycle = 0;
};

Track merge_pair(const Track& p, const Track& b) {
  Track out;
  out.id = std::min(p.id, b.id);
  out.class_label = "cyclist";
  std::set<TrackletId> members(p.member_tracklet_ids.begin(), p.member_tracklet_ids.end());
  members.insert(b.member_tracklet_ids.begin(), b.member_tracklet_ids.end());
  out.member_tracklet_ids.assign(members.begin(), members.end());

  std::size_t i = 0, j = 0;
  while (i < p.frames.size() || j < b.frames.size()) {
    if (j == b.frames.size() || (i < p.frames.size() && p.frames[i].t < b.frames[j].t)) {
      out.frames.push_back(p.frames[i++]);
    } else if (i == p.frames.size() || b.frames[j].t < p.frames[i].t) {
      out.frames.push_back(b.frames[j++]);
    } else {
      const TrackFrame& fp = p.frames[i++];
      const TrackFrame& fb = b.frames[j++];
      TrackFrame f = fp;
      f.box = box_union(fp.box, fb.box);
      if (fp.mask.height == fb.mask.height && fp.mask.width == fb.mask.width) {
        f.mask = mask_union(fp.mask, fb.mask);
      }
      f.foot = GroundPoint{0.5 * (fp.foot->x + fb.foot->x), 0.5 * (fp.foot->z + fb.foot->z)};
      out.frames.push_back(std::move(f));
    }
  }
  return out;
}

}  // namespace

TrackCollection merge_cyclists(const TrackCollection& tracks, double max_dist_m) {
  if (!(max_dist_m > 0.0)) throw Error(ErrorKind::Usage, "cyclist distance must be positive");
  std::vector<std::size_t> persons, bicycles;
  for (std::size_t i = 0; i < tracks.tracks.size(); ++i) {
    const auto& t = tracks.tracks[i];
    if (t.class_label == "person") persons.push_back(i);
    if (t.class_label == "bicycle") bicycles.push_back(i);
  }
  for (auto i : persons) require_footpoints(tracks.tracks[i]);
  for (auto i : bicycles) require_footpoints(tracks.tracks[i]);

  std::vector<Pairing> candidates;
  for (auto pi : persons) {
    for (auto bi : bicycles) {
      const Track& p = tracks.tracks[pi];
      const Track& b = tracks.tracks[bi];
      std::size_t shared = 0, close = 0;
      double sum = 0.0;
      for (const auto& f : p.frames) {
        const TrackFrame* g = b.at(f.t);
        if (g == nullptr) continue;
        const double d = std::hypot(f.foot->x - g->foot->x, f.foot->z - g->foot->z);
        ++shared;
        sum += d;
        close += d < max_dist_m;
      }
      if (shared > 0 && 2 * close > shared) {
        candidates.push_back({sum / static_cast<double>(shared), pi, bi});
      }
    }
  }
  std::sort(candidates.begin(), candidates.end(), [&](const Pairing& x, const Pairing& y) {
    if (x.mean != y.mean) return x.mean < y.mean;
    if (tracks.tracks[x.person].id != tracks.tracks[y.person].id) {
      return tracks.tracks[x.person].id < tracks.tracks[y.person].id;
    }
    return tracks.tracks[x.bicycle].id < tracks.tracks[y.bicycle].id;
  });

  std::vector<bool> used(tracks.tracks.size(), false);
  std::map<std::size_t, Track> merged_at;  // position of the earlier partner
  for (const auto& c : candidates) {
    if (used[c.person] || used[c.bicycle]) continue;
    used[c.person] = used[c.bicycle] = true;
    merged_at.emplace(std::min(c.person, c.bicycle), merge_pair(tracks.tracks[c.person], tracks.tracks[c.bicycle]));
  }

  TrackCollection out;
  out.provenance = tracks.provenance;
  for (std::size_t i = 0; i < tracks.tracks.size(); ++i) {
    if (auto it = merged_at.find(i); it != merged_at.end()) {
      out.tracks.push_back(it->second);
    } else if (!used[i]) {
      out.tracks.push_back(tracks.tracks[i]);
    }
  }
  return out;
}

}  // namespace trackmine
