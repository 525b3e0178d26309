#include <gtest/gtest.h>

#include <set>

#include "oracles/merge_oracle.hpp"
#include "oracles/random_instances.hpp"
#include "trackmine/error.hpp"
#include "trackmine/tracklet_merge.hpp"

using namespace trackmine;

namespace {

// One-row masks: [0, len) inside a 1 x 10 image.
MaskRLE bar(std::int64_t len) { return rect_mask(1, 10, 0, 0, len, 1); }

Tracklet bars(TrackletId id, FrameIndex first, const std::vector<std::int64_t>& lengths) {
  Tracklet t;
  t.id = id;
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    t.frames.push_back({first + static_cast<FrameIndex>(i), {0, 0, static_cast<double>(lengths[i]), 1},
                        bar(lengths[i]), {}, {}});
  }
  return t;
}

SelectionLog select(std::vector<std::pair<FrameIndex, std::vector<TrackletId>>> frames) {
  SelectionLog log;
  for (auto& [t, ids] : frames) log.frames.push_back({t, ids});
  return log;
}

}  // namespace

TEST(MatchingFrames, CountsStrictlyAboveGamma) {
  // Shared frames 1..4 with mask IoU 0.9, 0.8, 0.6, 0.4.
  const Tracklet a = bars(1, 0, {10, 10, 10, 10, 10});
  const Tracklet b = bars(2, 1, {9, 8, 6, 4});
  EXPECT_EQ(matching_frames(a, b, 0.5), 3u);
  EXPECT_DOUBLE_EQ(overlap_ratio(a, b, 0.5), 0.75);
  EXPECT_DOUBLE_EQ(overlap_ratio(b, a, 0.5), 0.75);
  // IoU exactly 0.6 does not count at gamma 0.6.
  EXPECT_EQ(matching_frames(a, b, 0.6), 2u);
}

TEST(MatchingFrames, TrivialCases) {
  const Tracklet a = bars(1, 0, {5, 5, 5});
  EXPECT_EQ(matching_frames(a, a, 0.5), 3u);
  EXPECT_DOUBLE_EQ(overlap_ratio(a, a, 0.5), 1.0);
  const Tracklet later = bars(2, 10, {5, 5});
  EXPECT_EQ(matching_frames(a, later, 0.5), 0u);
  EXPECT_DOUBLE_EQ(overlap_ratio(a, later, 0.5), 0.0);
}

TEST(Merge, SingleTrackletGivesOneTrack) {
  const std::vector<Tracklet> ts{bars(7, 0, {5, 5, 5, 5})};
  const auto out = merge_collection(ts, select({{0, {7}}, {1, {7}}, {2, {7}}, {3, {7}}}), {});
  ASSERT_EQ(out.tracks.size(), 1u);
  EXPECT_EQ(out.tracks[0].member_tracklet_ids, std::vector<TrackletId>{7});
  EXPECT_EQ(out.tracks[0].frames.size(), 4u);
  EXPECT_EQ(out.provenance.frame_count, 4);
}

TEST(Merge, DisjointTrackletsGiveTwoTracks) {
  const std::vector<Tracklet> ts{bars(1, 0, {5, 5}), bars(2, 2, {5, 5})};
  const auto out = merge_collection(ts, select({{0, {1}}, {1, {1}}, {2, {2}}, {3, {2}}}), {});
  EXPECT_EQ(out.tracks.size(), 2u);
}

TEST(Merge, HandoffContinuesTheTrack) {
  // A covers frames 1-10, B frames 2-20; they agree on frames 2-10, so lambda = 9/10.
  std::vector<std::int64_t> a_len(10, 8), b_len(19, 8);
  const std::vector<Tracklet> ts{bars(1, 1, a_len), bars(2, 2, b_len)};
  EXPECT_DOUBLE_EQ(overlap_ratio(ts[0], ts[1], 0.5), 0.9);
  SelectionLog log;
  for (FrameIndex t = 1; t <= 20; ++t) log.frames.push_back({t, {t <= 10 ? TrackletId{1} : TrackletId{2}}});
  const auto out = merge_collection(ts, log, {});
  ASSERT_EQ(out.tracks.size(), 1u);
  EXPECT_EQ(out.tracks[0].member_tracklet_ids, (std::vector<TrackletId>{1, 2}));
  EXPECT_EQ(out.tracks[0].frames.front().t, 1);
  EXPECT_EQ(out.tracks[0].frames.back().t, 20);
  EXPECT_EQ(*out.tracks[0].frames[9].source, 1);
  EXPECT_EQ(*out.tracks[0].frames[10].source, 2);
}

TEST(Merge, PrefersHigherLambdaThenLongerThenSmallerId) {
  std::vector<Tracklet> ts{bars(1, 0, {8, 8, 8, 8}), bars(2, 2, {8, 8, 8}), bars(3, 2, {8, 8, 8})};
  // 2 and 3 tie on lambda and length; the smaller id wins.
  auto out = merge_collection(ts, select({{0, {1}}, {1, {1}}, {2, {2, 3}}, {3, {2, 3}}}), {});
  ASSERT_EQ(out.tracks.size(), 2u);
  EXPECT_EQ(out.tracks[0].member_tracklet_ids, (std::vector<TrackletId>{1, 2}));
  EXPECT_EQ(out.tracks[1].member_tracklet_ids, std::vector<TrackletId>{3});

  // Both candidates outlast 1, so lambda is 3/4 for each; the longer one wins.
  ts = {bars(1, 0, {8, 8, 8, 8}), bars(2, 1, {8, 8, 8, 8, 8}), bars(3, 1, {8, 8, 8, 8, 8, 8})};
  out = merge_collection(ts, select({{0, {1}}, {1, {1}}, {2, {2, 3}}, {3, {2, 3}}, {4, {2, 3}}, {5, {2, 3}}}), {});
  ASSERT_EQ(out.tracks.size(), 2u);
  EXPECT_EQ(out.tracks[0].member_tracklet_ids, (std::vector<TrackletId>{1, 3}));
  EXPECT_EQ(out.tracks[1].member_tracklet_ids, std::vector<TrackletId>{2});
}

TEST(Merge, TerminatedTracksStayTerminated) {
  const std::vector<Tracklet> ts{bars(1, 0, {8, 8, 8, 8, 8})};
  const auto out = merge_collection(ts, select({{0, {1}}, {1, {}}, {2, {1}}}), {});
  // The tracklet was already consumed, so frame 2 starts nothing new.
  ASSERT_EQ(out.tracks.size(), 1u);
  EXPECT_EQ(out.tracks[0].frames.size(), 1u);
}

TEST(Merge, UnknownIdsAreRejected) {
  const std::vector<Tracklet> ts{bars(1, 0, {5})};
  try {
    merge_collection(ts, select({{0, {1, 99}}}), {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DanglingId);
  }
}

TEST(Merge, ConfigIsValidated) {
  EXPECT_THROW(validate(MergeConfig{0.0, 0.5}), Error);
  EXPECT_THROW(validate(MergeConfig{0.5, 1.5}), Error);
  EXPECT_NO_THROW(validate(MergeConfig{0.5, 1.0}));
}

TEST(Merge, ClassIsMajorityOfMembers) {
  EXPECT_EQ(majority_label({"car", "car", "person"}), "car");
  EXPECT_EQ(majority_label({"car", "person"}), "unknown");
  EXPECT_EQ(majority_label({}), "unknown");
}

TEST(Merge, MatchesExhaustiveOracleOnRandomInstances) {
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    const auto inst = oracle::random_merge_instance(seed);
    for (double gamma : {0.3, 0.5, 0.7}) {
      const MergeConfig cfg{gamma, 0.5};
      const auto got = merge_collection(inst.tracklets, inst.selection, cfg);
      const auto want = oracle::merge(inst.tracklets, inst.selection, cfg);
      ASSERT_EQ(got.tracks.size(), want.members.size()) << "seed " << seed;
      for (std::size_t k = 0; k < got.tracks.size(); ++k) {
        EXPECT_EQ(got.tracks[k].member_tracklet_ids, want.members[k]) << "seed " << seed << " track " << k;
      }
    }
  }
}

TEST(Merge, SelectedTrackletsArePartitioned) {
  for (std::uint64_t seed = 100; seed < 160; ++seed) {
    const auto inst = oracle::random_merge_instance(seed);
    const auto out = merge_collection(inst.tracklets, inst.selection, {});
    std::set<TrackletId> selected, seen;
    for (const auto& f : inst.selection.frames) selected.insert(f.selected.begin(), f.selected.end());
    for (const auto& t : out.tracks) {
      for (auto id : t.member_tracklet_ids) EXPECT_TRUE(seen.insert(id).second) << "seed " << seed;
      EXPECT_NO_THROW(validate(t));
    }
    EXPECT_EQ(seen, selected);
    EXPECT_LE(out.tracks.size(), selected.size());
  }
}

// Raising min_overlap removes handoff candidates without changing the others' order,
// so the greedy can only lose matches.
TEST(Merge, StricterOverlapNeverReducesTrackCount) {
  for (std::uint64_t seed = 200; seed < 300; ++seed) {
    const auto inst = oracle::random_merge_instance(seed);
    std::size_t prev = 0;
    for (double mo : {0.1, 0.3, 0.5, 0.7, 0.9, 1.0}) {
      const auto n = merge_collection(inst.tracklets, inst.selection, {0.5, mo}).tracks.size();
      EXPECT_GE(n, prev) << "seed " << seed << " min_overlap " << mo;
      prev = n;
    }
  }
}

// With a single candidate per dropped track there is no competition, and a larger
// gamma only shrinks lambda.
TEST(Merge, LargerGammaNeverReducesTrackCountWithoutCompetition) {
  std::size_t checked = 0;
  for (std::uint64_t seed = 300; seed < 600; ++seed) {
    const auto inst = oracle::random_merge_instance(seed, 4);
    bool contested = false;
    for (const auto& f : inst.selection.frames) contested = contested || f.selected.size() > 1;
    if (contested) continue;
    ++checked;
    std::size_t prev = 0;
    for (double g : {0.1, 0.3, 0.5, 0.7, 0.9}) {
      const auto n = merge_collection(inst.tracklets, inst.selection, {g, 0.5}).tracks.size();
      EXPECT_GE(n, prev) << "seed " << seed;
      prev = n;
    }
  }
  EXPECT_GT(checked, 10u);
}
