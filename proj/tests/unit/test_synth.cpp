#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "temp_dir.hpp"
#include "trackmine/digest.hpp"
#include "trackmine/hdbscan.hpp"
#include "trackmine/cluster_eval.hpp"
#include "trackmine/synth.hpp"
#include "trackmine/track_io.hpp"

using namespace trackmine;

namespace {

std::vector<std::string> digests(const std::vector<std::filesystem::path>& files) {
  std::vector<std::string> out;
  for (const auto& f : files) out.push_back(f.filename().string() + " " + sha256_file(f));
  return out;
}

TrackCollection merge(const HandoffData& d) { return merge_collection(d.tracklets, d.selection, MergeConfig{}); }

}  // namespace

TEST(SynthHandoff, SingleTrackletSingleTrack) {
  HandoffSpec s;
  s.objects = 1;
  s.tracklets_per_object = 1;
  EXPECT_EQ(merge(gen_handoff(s)).tracks.size(), 1u);
}

TEST(SynthHandoff, HighIouHandoffsMerge) {
  HandoffSpec s;  // 5 objects, 2 tracklets each, IoU 0.9
  const auto d = gen_handoff(s);
  EXPECT_EQ(d.tracklets.size(), 10u);
  EXPECT_GT(d.min_handoff_iou, MergeConfig{}.gamma);
  const auto c = merge(d);
  ASSERT_EQ(c.tracks.size(), 5u);
  // Each track gathers exactly the tracklets of one object.
  std::map<TrackletId, std::size_t> object_of;
  for (const auto& r : d.truth) object_of[r.tracklet] = r.object;
  for (const auto& t : c.tracks) {
    ASSERT_EQ(t.member_tracklet_ids.size(), 2u);
    EXPECT_EQ(object_of.at(t.member_tracklet_ids[0]), object_of.at(t.member_tracklet_ids[1]));
  }
}

TEST(SynthHandoff, LowIouHandoffsStaySplit) {
  HandoffSpec s;
  s.handoff_iou = 0.2;
  const auto d = gen_handoff(s);
  EXPECT_LT(d.max_handoff_iou, MergeConfig{}.gamma);
  EXPECT_EQ(merge(d).tracks.size(), 10u);
}

TEST(SynthHandoff, ThreeTrackletsAndDistractors) {
  HandoffSpec s;
  s.objects = 9;
  s.tracklets_per_object = 3;
  s.distractors_per_object = 2;
  const auto d = gen_handoff(s);
  EXPECT_EQ(d.tracklets.size(), 9u * 5);
  const auto c = merge(d);
  EXPECT_EQ(c.tracks.size(), 9u);
  for (const auto& t : c.tracks) EXPECT_EQ(t.member_tracklet_ids.size(), 3u);
}

TEST(SynthHandoff, HandoffShiftGivesRequestedIou) {
  for (double r : {0.2, 0.5, 0.8, 0.9, 0.95}) {
    const auto dx = handoff_shift(48, r);
    const double iou = static_cast<double>(48 - dx) / static_cast<double>(48 + dx);
    EXPECT_NEAR(iou, r, 0.03) << r;
  }
  EXPECT_EQ(handoff_shift(48, 1.0), 0);
}

TEST(SynthHandoff, TruthMatchesTracklets) {
  HandoffSpec s;
  s.objects = 7;
  s.tracklets_per_object = 3;
  s.crop_dim = 4;
  const auto d = gen_handoff(s);
  std::map<TrackletId, const Tracklet*> by_id;
  for (const auto& t : d.tracklets) by_id[t.id] = &t;
  std::set<TrackletId> covered;
  for (const auto& r : d.truth) {
    ASSERT_TRUE(by_id.count(r.tracklet));
    EXPECT_EQ(by_id.at(r.tracklet)->class_label, r.class_label);
    EXPECT_EQ(r.class_label, s.classes[r.object % s.classes.size()]);
    covered.insert(r.tracklet);
  }
  EXPECT_EQ(covered.size(), d.tracklets.size());
  // One crop per tracklet frame.
  std::size_t frames = 0;
  for (const auto& t : d.tracklets) frames += t.length();
  EXPECT_EQ(d.crops.records.size(), frames);
  EXPECT_EQ(d.crops.dim, 4u);
  // Every selected tracklet is observed at the selecting frame.
  for (const auto& fs : d.selection.frames) {
    for (auto id : fs.selected) EXPECT_NE(by_id.at(id)->at(fs.t), nullptr);
  }
}

TEST(SynthHandoff, FilesAreDeterministic) {
  TempDir a, b, c;
  HandoffSpec s;
  s.crop_dim = 3;
  s.distractors_per_object = 1;
  const auto first = digests(write_handoff(gen_handoff(s), a.path()));
  EXPECT_EQ(first, digests(write_handoff(gen_handoff(s), b.path())));
  EXPECT_EQ(read_tracklets(b / "tracklets.jsonl").size(), 15u);
  s.seed = 2;
  EXPECT_NE(first, digests(write_handoff(gen_handoff(s), c.path())));
}

TEST(SynthBlobs, NoOutliersMeansNoOutlierRows) {
  const auto d = gen_blobs(BlobsSpec{});
  EXPECT_EQ(d.labels.size(), 300u);
  for (const auto& [id, label] : d.labels) EXPECT_NE(label, "outlier");
  EXPECT_EQ(d.features.records.size(), 300u);
}

TEST(SynthBlobs, OutliersAreLabelled) {
  BlobsSpec s;
  s.outlier_fraction = 0.1;
  const auto d = gen_blobs(s);
  EXPECT_EQ(std::count_if(d.labels.begin(), d.labels.end(), [](const auto& r) { return r.second == "outlier"; }), 30);
}

TEST(SynthBlobs, SeparatedClassesAreRecovered) {
  for (std::uint64_t seed : {1, 2, 3}) {
    BlobsSpec s;
    s.seed = seed;
    const auto d = gen_blobs(s);
    PointSet p{d.features.dim, {}};
    std::vector<int> truth;
    std::map<std::string, std::string> label_of(d.labels.begin(), d.labels.end());
    for (const auto& r : d.features.records) {
      p.coords.insert(p.coords.end(), r.vector.begin(), r.vector.end());
      truth.push_back(label_of.at(r.key).back() - '0');
    }
    const auto a = hdbscan(p, HdbscanConfig{});
    EXPECT_EQ(a.cluster_count, 3u) << "seed " << seed;
    EXPECT_GE(ami(contingency(truth, a.labels)), 0.95);
  }
}

TEST(SynthBlobs, ClassCentresAreEvenlySpaced) {
  for (std::size_t c : {2, 3, 5, 8}) {
    for (std::size_t dim : {1, 2, 6}) {
      const auto centres = class_centres(c, dim, 10.0);
      ASSERT_EQ(centres.size(), c);
      double nearest = 1e300;
      for (std::size_t i = 0; i < c; ++i) {
        ASSERT_EQ(centres[i].size(), dim);
        for (std::size_t j = i + 1; j < c; ++j) {
          double d = 0;
          for (std::size_t k = 0; k < dim; ++k) d += (centres[i][k] - centres[j][k]) * (centres[i][k] - centres[j][k]);
          nearest = std::min(nearest, std::sqrt(d));
        }
      }
      EXPECT_NEAR(nearest, 10.0, 1e-9) << c << " classes in " << dim << "-D";
    }
  }
}

TEST(SynthBlobs, FilesAreDeterministic) {
  TempDir a, b;
  BlobsSpec s;
  s.outlier_fraction = 0.05;
  EXPECT_EQ(digests(write_blobs(gen_blobs(s), a.path())), digests(write_blobs(gen_blobs(s), b.path())));
}

TEST(SynthScene, ExpectedDecisionsMatchSelection) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    std::size_t far_with_wall = 0;
    for (bool wall : {true, false}) {
      SceneSpec s;
      s.seed = seed;
      s.far_wall = wall;
      s.known_objects = seed % 3;
      s.unknown_objects = seed % 2 + 1;
      const auto d = gen_scene(s);
      const auto sel = select_anchors(d.frame, s.config);
      ASSERT_EQ(sel.decisions.size(), d.expected.size());
      for (std::size_t i = 0; i < d.expected.size(); ++i) {
        ASSERT_EQ(sel.decisions[i], d.expected[i]) << "seed " << seed << " anchor " << i;
      }
      // Without the wall only the no-depth patch beside the road reads as far.
      if (wall) {
        far_with_wall = sel.summary.excluded_far;
      } else {
        EXPECT_LT(sel.summary.excluded_far, far_with_wall);
      }
    }
  }
}

TEST(SynthScene, EmptySceneNearFreeAnchorsAreNegative) {
  SceneSpec s;
  s.known_objects = 0;
  s.unknown_objects = 0;
  const auto d = gen_scene(s);
  const auto sel = select_anchors(d.frame, s.config);
  for (std::size_t i = 0; i < d.frame.anchors.size(); ++i) {
    const Box& a = d.frame.anchors[i];
    if (far_fraction(a, d.frame.depth, s.config.far_distance_m) < s.config.far_pixel_fraction &&
        mask_containment(a, d.frame.free_space) >= s.config.neg_area_fraction) {
      EXPECT_EQ(sel.decisions[i].outcome, AnchorOutcome::Negative);
    }
    EXPECT_NE(sel.decisions[i].outcome, AnchorOutcome::Positive);
  }
  EXPECT_GT(sel.summary.negative, 0u);
}

TEST(SynthScene, KnownCarGetsPositives) {
  SceneSpec s;
  s.known_objects = 1;
  const auto d = gen_scene(s);
  const auto sel = select_anchors(d.frame, s.config);
  ASSERT_FALSE(d.frame.tracks.empty());
  EXPECT_GT(sel.summary.positive, 0u);
  for (const auto& dec : sel.decisions) {
    if (dec.outcome == AnchorOutcome::Positive) { EXPECT_EQ(dec.class_label, "car"); }
  }
}

TEST(SynthScene, FilesAreDeterministic) {
  TempDir a, b;
  EXPECT_EQ(digests(write_scene(gen_scene(SceneSpec{}), a.path())), digests(write_scene(gen_scene(SceneSpec{}), b.path())));
}
