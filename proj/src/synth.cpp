#include "trackmine/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "trackmine/atomic_file.hpp"
#include "trackmine/error.hpp"
#include "trackmine/rng.hpp"
#include "trackmine/scene_io.hpp"
#include "trackmine/track_io.hpp"

namespace trackmine {

std::int64_t handoff_shift(std::int64_t w, double r) {
  return std::llround(static_cast<double>(w) * (1.0 - r) / (1.0 + r));
}

std::vector<std::vector<double>> class_centres(std::size_t classes, std::size_t dim, double spacing) {
  std::vector<std::vector<double>> out(classes, std::vector<double>(dim, 0.0));
  if (classes < 2 || dim == 0) return out;
  if (dim == 1) {
    for (std::size_t c = 0; c < classes; ++c) out[c][0] = spacing * static_cast<double>(c);
    return out;
  }
  const double pi = 3.14159265358979323846;
  const double radius = spacing / (2.0 * std::sin(pi / static_cast<double>(classes)));
  for (std::size_t c = 0; c < classes; ++c) {
    const double a = 2.0 * pi * static_cast<double>(c) / static_cast<double>(classes);
    out[c][0] = radius * std::cos(a);
    out[c][1] = radius * std::sin(a);
  }
  return out;
}

HandoffData gen_handoff(const HandoffSpec& spec) {
  const std::size_t m = spec.tracklets_per_object;
  if (m < 1 || m > 3) throw Error(ErrorKind::Usage, "tracklets per object must be 1..3");
  if (spec.classes.empty() || spec.bands == 0 || spec.segment_frames == 0) {
    throw Error(ErrorKind::Usage, "handoff scenario needs classes, bands and segment frames");
  }
  if (!(spec.handoff_iou > 0.0 && spec.handoff_iou <= 1.0)) {
    throw Error(ErrorKind::Usage, "handoff IoU must be in (0,1]");
  }
  constexpr std::int64_t kW = 48;
  constexpr std::int64_t kH = 40;
  const std::int64_t band_h = spec.height / static_cast<std::int64_t>(spec.bands);
  const std::int64_t dx = m > 1 ? handoff_shift(kW, spec.handoff_iou) : 0;
  const double span = static_cast<double>(spec.width) - kW - static_cast<double>(dx);
  if (band_h < kH || span <= 0) throw Error(ErrorKind::Usage, "image too small for the handoff scenario");

  const auto life = static_cast<FrameIndex>(m * spec.segment_frames);
  const auto seg = static_cast<FrameIndex>(spec.segment_frames);
  const auto ov = static_cast<FrameIndex>(spec.overlap_frames);

  Rng rng(spec.seed);
  HandoffData data;
  const auto centres = class_centres(spec.classes.size(), spec.crop_dim, spec.crop_separation * spec.crop_noise);
  data.crops.dim = spec.crop_dim;

  FrameIndex total_frames = 0;
  // selected_at[t] lists the selected tracklet ids.
  std::vector<std::vector<TrackletId>> selected_at;
  TrackletId next_id = 0;
  bool any_handoff = false;
  double min_iou = 1.0, max_iou = 0.0;

  for (std::size_t o = 0; o < spec.objects; ++o) {
    const std::size_t band = o % spec.bands;
    const FrameIndex start = static_cast<FrameIndex>(o / spec.bands) * (life + 2);
    const FrameIndex end = start + life;  // exclusive
    total_frames = std::max(total_frames, end);
    if (selected_at.size() < static_cast<std::size_t>(end)) selected_at.resize(static_cast<std::size_t>(end));

    const auto y = static_cast<double>(static_cast<std::int64_t>(band) * band_h + (band_h - kH) / 2);
    const double x0 = rng.uniform(0.0, span);
    const double reach = static_cast<double>(life);
    const double vx = rng.uniform(std::max(-1.5, -x0 / reach), std::min(1.5, (span - x0) / reach));
    const std::size_t cls = o % spec.classes.size();
    const std::string& label = spec.classes[cls];

    std::vector<double> centre(spec.crop_dim);
    for (std::size_t d = 0; d < spec.crop_dim; ++d) {
      centre[d] = centres[cls][d] + rng.normal(0.0, 0.5 * spec.crop_noise);
    }

    auto position = [&](FrameIndex t) {
      return std::clamp<std::int64_t>(std::llround(x0 + vx * static_cast<double>(t - start)), 0,
                                      static_cast<std::int64_t>(span));
    };

    std::vector<Tracklet> chain;
    for (std::size_t k = 0; k < m; ++k) {
      const FrameIndex cut = start + static_cast<FrameIndex>(k) * seg;
      const FrameIndex from = k == 0 ? start : cut - ov;
      const FrameIndex to = k + 1 == m ? end - 1 : cut + seg - 1 + ov;
      Tracklet t;
      t.id = next_id++;
      t.class_label = label;
      const std::int64_t offset = (k % 2) * dx;
      for (FrameIndex f = from; f <= to; ++f) {
        const std::int64_t x = position(f) + offset;
        TrackFrame tf;
        tf.t = f;
        tf.box = {static_cast<double>(x), y, static_cast<double>(kW), static_cast<double>(kH)};
        tf.mask = rect_mask(spec.height, spec.width, x, static_cast<std::int64_t>(y), kW, kH);
        t.frames.push_back(std::move(tf));
        if (spec.crop_dim > 0) {
          EmbeddingRecord rec;
          rec.key = std::to_string(t.id) + ":" + std::to_string(f);
          rec.vector.resize(spec.crop_dim);
          for (std::size_t d = 0; d < spec.crop_dim; ++d) rec.vector[d] = centre[d] + rng.normal(0.0, spec.crop_noise);
          data.crops.records.push_back(std::move(rec));
        }
      }
      for (FrameIndex f = cut; f < cut + seg; ++f) selected_at[static_cast<std::size_t>(f)].push_back(t.id);
      data.truth.push_back({t.id, o, label});
      chain.push_back(std::move(t));
    }
    for (std::size_t k = 0; k + 1 < m; ++k) {
      for (const auto& f : chain[k].frames) {
        if (const TrackFrame* g = chain[k + 1].at(f.t)) {
          const double iou = mask_iou(f.mask, g->mask);
          min_iou = std::min(min_iou, iou);
          max_iou = std::max(max_iou, iou);
          any_handoff = true;
        }
      }
    }
    for (auto& t : chain) data.tracklets.push_back(std::move(t));

    for (std::size_t d = 0; d < spec.distractors_per_object; ++d) {
      const FrameIndex len = std::min<FrameIndex>(life, 3 + static_cast<FrameIndex>(rng.below(6)));
      const FrameIndex from = start + static_cast<FrameIndex>(rng.below(static_cast<std::size_t>(life - len + 1)));
      const auto x = static_cast<std::int64_t>(rng.below(static_cast<std::size_t>(span) + 1));
      Tracklet t;
      t.id = next_id++;
      for (FrameIndex f = from; f < from + len; ++f) {
        TrackFrame tf;
        tf.t = f;
        tf.box = {static_cast<double>(x), y, static_cast<double>(kW), static_cast<double>(kH)};
        tf.mask = rect_mask(spec.height, spec.width, x, static_cast<std::int64_t>(y), kW, kH);
        t.frames.push_back(std::move(tf));
      }
      data.truth.push_back({t.id, o, label});
      data.tracklets.push_back(std::move(t));
    }
  }

  for (FrameIndex f = 0; f < total_frames; ++f) {
    auto ids = selected_at[static_cast<std::size_t>(f)];
    std::sort(ids.begin(), ids.end());
    data.selection.frames.push_back({f, std::move(ids)});
  }
  data.min_handoff_iou = any_handoff ? min_iou : 1.0;
  data.max_handoff_iou = any_handoff ? max_iou : 0.0;
  return data;
}

BlobsData gen_blobs(const BlobsSpec& spec) {
  if (spec.dim == 0 || spec.classes == 0) throw Error(ErrorKind::Usage, "blobs need dim > 0 and classes > 0");
  if (!(spec.outlier_fraction >= 0.0)) throw Error(ErrorKind::Usage, "outlier fraction must be >= 0");
  Rng rng(spec.seed);
  const auto centres = class_centres(spec.classes, spec.dim, spec.separation * spec.sigma);

  std::vector<std::vector<double>> points;
  std::vector<std::string> labels;
  for (std::size_t c = 0; c < spec.classes; ++c) {
    for (std::size_t i = 0; i < spec.per_class; ++i) {
      std::vector<double> p(spec.dim);
      for (std::size_t d = 0; d < spec.dim; ++d) p[d] = centres[c][d] + rng.normal(0.0, spec.sigma);
      points.push_back(std::move(p));
      labels.push_back("class" + std::to_string(c));
    }
  }
  std::vector<double> lo(spec.dim, 0.0), hi(spec.dim, 0.0);
  for (std::size_t d = 0; d < spec.dim; ++d) {
    for (const auto& c : centres) {
      lo[d] = std::min(lo[d], c[d]);
      hi[d] = std::max(hi[d], c[d]);
    }
    lo[d] -= 3.0 * spec.separation * spec.sigma;
    hi[d] += 3.0 * spec.separation * spec.sigma;
  }
  const auto outliers = static_cast<std::size_t>(
      std::llround(spec.outlier_fraction * static_cast<double>(spec.classes * spec.per_class)));
  for (std::size_t i = 0; i < outliers; ++i) {
    std::vector<double> p(spec.dim);
    for (std::size_t d = 0; d < spec.dim; ++d) p[d] = rng.uniform(lo[d], hi[d]);
    points.push_back(std::move(p));
    labels.push_back("outlier");
  }

  std::vector<std::size_t> order(points.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order.begin(), order.end());

  BlobsData data;
  data.features.dim = spec.dim;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const std::string key = std::to_string(i);
    data.features.records.push_back({key, points[order[i]]});
    data.labels.emplace_back(key, labels[order[i]]);
  }
  return data;
}

namespace {

struct Region {
  std::int64_t x0, y0, x1, y1;  // [x0,x1) x [y0,y1)
  std::uint16_t depth_mm;
  bool free;
};

std::int64_t overlap_area(const Region& r, std::int64_t x0, std::int64_t y0, std::int64_t x1, std::int64_t y1) {
  const std::int64_t w = std::min(r.x1, x1) - std::max(r.x0, x0);
  const std::int64_t h = std::min(r.y1, y1) - std::max(r.y0, y0);
  return w > 0 && h > 0 ? w * h : 0;
}

Box random_box(Rng& rng, std::int64_t x0, std::int64_t y0, std::int64_t x1, std::int64_t y1,
               std::int64_t wmin, std::int64_t wmax, std::int64_t hmin, std::int64_t hmax) {
  wmax = std::min(wmax, x1 - x0);
  hmax = std::min(hmax, y1 - y0);
  wmin = std::min(wmin, wmax);
  hmin = std::min(hmin, hmax);
  const auto w = wmin + static_cast<std::int64_t>(rng.below(static_cast<std::size_t>(wmax - wmin + 1)));
  const auto h = hmin + static_cast<std::int64_t>(rng.below(static_cast<std::size_t>(hmax - hmin + 1)));
  const auto x = x0 + static_cast<std::int64_t>(rng.below(static_cast<std::size_t>(x1 - x0 - w + 1)));
  const auto y = y0 + static_cast<std::int64_t>(rng.below(static_cast<std::size_t>(y1 - y0 - h + 1)));
  return {static_cast<double>(x), static_cast<double>(y), static_cast<double>(w), static_cast<double>(h)};
}

}  // namespace

SceneData gen_scene(const SceneSpec& s) {
  const std::int64_t H = s.height, W = s.width, fr = s.far_rows, gr = s.ground_row, sc = s.structure_cols;
  if (!(fr > 0 && fr < gr && gr < H && 2 * sc < W && gr - fr >= 10 && W - 2 * sc >= 16)) {
    throw Error(ErrorKind::Usage, "inconsistent street-scene layout");
  }
  validate(s.config);
  const std::int64_t no_depth_rows = std::min<std::int64_t>(12, H - fr);
  const std::vector<Region> regions{
      {0, 0, W, fr, static_cast<std::uint16_t>(s.far_wall ? 40000 : 20000), false},
      {0, fr, sc, fr + no_depth_rows, kNoDepth, true},
      {0, fr + no_depth_rows, sc, H, 15000, true},
      {W - sc, fr, W, H, 15000, true},
      {sc, fr, W - sc, gr, 10000, false},
      {sc, gr, W - sc, H, 8000, true},
  };

  SceneData data;
  SceneFrame& f = data.frame;
  f.frame = s.frame;
  f.height = s.height;
  f.width = s.width;
  f.free_space = BitMask(s.height, s.width);
  f.depth = DepthMap(s.height, s.width);
  for (const auto& r : regions) {
    for (auto y = r.y0; y < r.y1; ++y) {
      for (auto x = r.x0; x < r.x1; ++x) {
        f.free_space.set(static_cast<std::uint32_t>(y), static_cast<std::uint32_t>(x), r.free);
        f.depth.set(static_cast<std::uint32_t>(y), static_cast<std::uint32_t>(x), r.depth_mm);
      }
    }
  }

  Rng rng(s.seed);
  const std::size_t objects = s.known_objects + s.unknown_objects;
  for (std::size_t i = 0; i < objects; ++i) {
    const Box b = random_box(rng, sc, fr, W - sc, gr, 16, 40, 10, gr - fr);
    Track t;
    t.id = static_cast<TrackId>(i);
    t.member_tracklet_ids = {t.id};
    t.class_label = i < s.known_objects ? "car" : std::string(kUnknownClass);
    TrackFrame tf;
    tf.t = s.frame;
    tf.box = b;
    tf.mask = rect_mask(s.height, s.width, static_cast<std::int64_t>(b.x), static_cast<std::int64_t>(b.y),
                        static_cast<std::int64_t>(b.w), static_cast<std::int64_t>(b.h));
    t.frames.push_back(std::move(tf));
    data.tracks.push_back(std::move(t));
  }
  f.tracks = scene_tracks_at(data.tracks, s.frame);

  // A few anchors jittered around each object, the rest anywhere.
  for (const auto& t : f.tracks) {
    for (int j = 0; j < 5 && f.anchors.size() < s.anchors; ++j) {
      auto jit = [&] { return static_cast<double>(static_cast<std::int64_t>(rng.below(9)) - 4); };
      const double x = std::clamp(t.box.x + jit(), 0.0, static_cast<double>(W - 4));
      const double y = std::clamp(t.box.y + jit(), 0.0, static_cast<double>(H - 4));
      const double w = std::clamp(t.box.w + jit(), 4.0, static_cast<double>(W) - x);
      const double h = std::clamp(t.box.h + jit(), 4.0, static_cast<double>(H) - y);
      f.anchors.push_back({x, y, w, h});
    }
  }
  while (f.anchors.size() < s.anchors) f.anchors.push_back(random_box(rng, 0, 0, W, H, 4, 48, 4, 40));

  const double thr = std::floor(s.config.far_distance_m * 1000.0);
  for (std::size_t i = 0; i < f.anchors.size(); ++i) {
    const Box& a = f.anchors[i];
    const auto x0 = static_cast<std::int64_t>(a.x), y0 = static_cast<std::int64_t>(a.y);
    const auto x1 = static_cast<std::int64_t>(a.right()), y1 = static_cast<std::int64_t>(a.bottom());
    const double area = static_cast<double>((x1 - x0) * (y1 - y0));
    std::int64_t far = 0, free = 0;
    for (const auto& r : regions) {
      const auto ov = overlap_area(r, x0, y0, x1, y1);
      if (r.depth_mm == kNoDepth || r.depth_mm > thr) far += ov;
      if (r.free) free += ov;
    }
    AnchorDecision d;
    d.anchor = i;
    if (static_cast<double>(far) / area >= s.config.far_pixel_fraction) {
      d.outcome = AnchorOutcome::ExcludedFar;
      d.rule = AnchorRule::Far;
      data.expected.push_back(d);
      continue;
    }
    const SceneTrack* best = nullptr;
    double best_iou = 0.0;
    bool unknown_hit = false;
    for (const auto& t : f.tracks) {
      const double iou = box_iou(a, t.box);
      if (t.class_label == kUnknownClass) {
        unknown_hit = unknown_hit || iou > s.config.unknown_ignore_iou;
      } else if (iou > s.config.pos_iou &&
                 (best == nullptr || iou > best_iou ||
                  (iou == best_iou && (t.box.area() > best->box.area() ||
                                       (t.box.area() == best->box.area() && t.id < best->id))))) {
        best = &t;
        best_iou = iou;
      }
    }
    if (best != nullptr) {
      d.outcome = AnchorOutcome::Positive;
      d.class_label = best->class_label;
      d.rule = AnchorRule::KnownTrack;
    } else if (unknown_hit) {
      d.outcome = AnchorOutcome::Ignore;
      d.rule = AnchorRule::UnknownTrack;
    } else if (static_cast<double>(free) / area >= s.config.neg_area_fraction) {
      d.outcome = AnchorOutcome::Negative;
      d.rule = AnchorRule::FreeSpace;
    } else {
      d.outcome = AnchorOutcome::Ignore;
      d.rule = AnchorRule::Fallback;
    }
    data.expected.push_back(d);
  }
  return data;
}

std::string encode_truth_csv(const std::vector<TruthRow>& rows) {
  std::ostringstream out;
  out << "tracklet,object,class\n";
  for (const auto& r : rows) out << r.tracklet << ',' << r.object << ',' << r.class_label << '\n';
  return out.str();
}

std::vector<std::filesystem::path> write_handoff(const HandoffData& data, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> out{dir / "tracklets.jsonl", dir / "selection.jsonl", dir / "truth.csv"};
  write_file_atomic(out[0], tracklets_to_jsonl(data.tracklets));
  write_file_atomic(out[1], selection_to_jsonl(data.selection));
  write_file_atomic(out[2], encode_truth_csv(data.truth));
  if (data.crops.dim > 0) {
    out.push_back(dir / "crops.bin");
    write_file_atomic(out.back(), encode_embeddings_binary(data.crops));
  }
  return out;
}

std::vector<std::filesystem::path> write_blobs(const BlobsData& data, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> out{dir / "features.bin", dir / "labels.csv"};
  write_file_atomic(out[0], encode_embeddings_binary(data.features));
  write_file_atomic(out[1], encode_labels_csv(data.labels));
  return out;
}

std::vector<std::filesystem::path> write_scene(const SceneData& data, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const SceneFrame& f = data.frame;
  nlohmann::json scene{{"frame", f.frame},
                       {"size", {f.height, f.width}},
                       {"free_space", "free.json"},
                       {"depth", "depth.pgm"},
                       {"anchors", "anchors.csv"}};
  std::vector<std::filesystem::path> out{dir / "scene.json",  dir / "free.json",   dir / "depth.pgm",
                                         dir / "anchors.csv", dir / "tracks.jsonl", dir / "expected.jsonl"};
  write_file_atomic(out[0], scene.dump(2) + "\n");
  write_file_atomic(out[1], to_json(encode_rle(f.free_space)).dump() + "\n");
  write_file_atomic(out[2], encode_pgm16(f.depth));
  write_file_atomic(out[3], encode_anchors_csv(f.anchors));
  write_file_atomic(out[4], tracks_to_jsonl(data.tracks));
  write_file_atomic(out[5], decisions_to_jsonl(data.expected));
  return out;
}

}  // namespace trackmine
