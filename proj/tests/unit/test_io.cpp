#include <gtest/gtest.h>

#include <cmath>

#include "temp_dir.hpp"
#include "trackmine/atomic_file.hpp"
#include "trackmine/digest.hpp"
#include "trackmine/embedding_io.hpp"
#include "trackmine/error.hpp"
#include "trackmine/scene_io.hpp"
#include "trackmine/track_io.hpp"

using namespace trackmine;

namespace {

Tracklet sample_tracklet() {
  Tracklet t;
  t.id = 42;
  t.class_label = "car";
  for (FrameIndex k = 3; k < 6; ++k) {
    TrackFrame f;
    f.t = k;
    f.box = {1.5, 2.0, 4.0, 3.25};
    f.mask = rect_mask(8, 10, 1 + k, 2, 4, 3);
    t.frames.push_back(f);
  }
  t.frames[1].foot = GroundPoint{0.25, 12.5};
  return t;
}

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorKind::Invariant;
}

}  // namespace

TEST(TrackIo, TrackletRoundTrip) {
  TempDir dir;
  const auto t = sample_tracklet();
  write_text(dir / "t.jsonl", tracklets_to_jsonl({t, t}) + "\n  \n");
  const auto back = read_tracklets(dir / "t.jsonl");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0], t);
}

TEST(TrackIo, TrackRoundTripKeepsSources) {
  TempDir dir;
  Track tr;
  tr.id = 3;
  tr.class_label = "person";
  tr.member_tracklet_ids = {42};
  tr.frames = sample_tracklet().frames;
  for (auto& f : tr.frames) f.source = 42;
  write_text(dir / "k.jsonl", tracks_to_jsonl({tr}));
  EXPECT_EQ(read_tracks(dir / "k.jsonl"), std::vector<Track>{tr});
}

TEST(TrackIo, MissingClassIsUnknown) {
  const auto t = tracklet_from_json(nlohmann::json::parse(
      R"({"id":1,"frames":[{"t":0,"box":[0,0,1,1],"mask":{"size":[1,1],"counts":[0,1]}}]})"));
  EXPECT_EQ(t.class_label, "unknown");
}

TEST(TrackIo, ErrorsCarryLineNumbers) {
  TempDir dir;
  write_text(dir / "bad.jsonl", tracklets_to_jsonl({sample_tracklet()}) + "{not json\n");
  try {
    read_tracklets(dir / "bad.jsonl");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Parse);
    EXPECT_NE(std::string(e.what()).find(":2:"), std::string::npos) << e.what();
  }
  write_text(dir / "rle.jsonl",
             R"({"id":1,"frames":[{"t":0,"box":[0,0,1,1],"mask":{"size":[2,2],"counts":[0,3]}}]})" "\n");
  EXPECT_EQ(kind_of([&] { read_tracklets(dir / "rle.jsonl"); }), ErrorKind::SizeMismatch);
  EXPECT_EQ(kind_of([&] { read_tracklets(dir / "absent.jsonl"); }), ErrorKind::Io);
}

TEST(TrackIo, SelectionSortedAndUnique) {
  TempDir dir;
  write_text(dir / "s.jsonl", "{\"t\":2,\"selected\":[1]}\n{\"t\":0,\"selected\":[]}\n");
  const auto log = read_selection(dir / "s.jsonl");
  ASSERT_EQ(log.frames.size(), 2u);
  EXPECT_EQ(log.frames[0].t, 0);
  EXPECT_EQ(log.frames[1].selected, (std::vector<TrackletId>{1}));
  EXPECT_EQ(selection_to_jsonl(log), "{\"selected\":[],\"t\":0}\n{\"selected\":[1],\"t\":2}\n");
  write_text(dir / "dup.jsonl", "{\"t\":2,\"selected\":[1]}\n{\"t\":2,\"selected\":[]}\n");
  EXPECT_EQ(kind_of([&] { read_selection(dir / "dup.jsonl"); }), ErrorKind::InconsistentInputs);
}

TEST(EmbeddingIo, BinaryRoundTripAtFloatPrecision) {
  EmbeddingSet s{3, {{"a", {0.5, -1.25, 3.0}}, {"long key:17", {1e-3, 2e5, -0.0}}}};
  const auto bytes = encode_embeddings_binary(s);
  EXPECT_EQ(bytes.substr(0, 4), "TMEB");
  EXPECT_EQ(bytes.size(), 4u + 4 + 8 + (4 + 1 + 12) + (4 + 11 + 12));
  const auto back = parse_embeddings_binary(bytes);
  ASSERT_EQ(back.records.size(), 2u);
  EXPECT_EQ(back.records[0], s.records[0]);
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_EQ(back.records[1].vector[k], static_cast<double>(static_cast<float>(s.records[1].vector[k])));
  }
  EXPECT_THROW(parse_embeddings_binary(bytes.substr(0, bytes.size() - 1)), Error);
}

TEST(EmbeddingIo, CsvRoundTripAndDetection) {
  TempDir dir;
  EmbeddingSet s{2, {{"x", {0.1, 0.2}}, {"y", {1.0 / 3.0, -7.0}}}};
  write_text(dir / "e.csv", "id,v0,v1\n" + encode_embeddings_csv(s));
  EXPECT_EQ(read_embeddings(dir / "e.csv"), s);
  write_text(dir / "e.bin", encode_embeddings_binary(s));
  EXPECT_EQ(read_embeddings(dir / "e.bin").records.size(), 2u);
  EXPECT_EQ(kind_of([] { parse_embeddings_csv("a,1,2\nb,1\n"); }), ErrorKind::Parse);
  EXPECT_EQ(kind_of([] { parse_embeddings_csv("a,1,nan\n"); }), ErrorKind::Parse);
}

TEST(EmbeddingIo, LabelsCsv) {
  TempDir dir;
  const std::vector<std::pair<std::string, std::string>> rows{{"1", "car"}, {"2", "person"}};
  write_text(dir / "l.csv", encode_labels_csv(rows));
  EXPECT_EQ(read_labels_csv(dir / "l.csv"), rows);
}

TEST(EmbeddingIo, ModelJsonRoundTrip) {
  auto m = EmbeddingModel::hidden_tanh(3, 4, 2);
  m.initialize(5);
  EXPECT_EQ(model_from_json(to_json(m)), m);
  auto a = EmbeddingModel::affine(2, 2);
  a.initialize(1);
  EXPECT_EQ(model_from_json(nlohmann::json::parse(to_json(a).dump())), a);
}

TEST(SceneIo, Pgm16RoundTrip) {
  DepthMap d(3, 2);
  d.set(0, 0, 1);
  d.set(2, 1, 65535);
  d.set(1, 0, 30000);
  const auto bytes = encode_pgm16(d);
  EXPECT_EQ(bytes.substr(0, 2), "P5");
  EXPECT_EQ(parse_pgm16(bytes), d);
  // Big-endian samples.
  const auto tail = bytes.substr(bytes.size() - 12);
  EXPECT_EQ(static_cast<unsigned char>(tail[0]), 0u);
  EXPECT_EQ(static_cast<unsigned char>(tail[1]), 1u);
  EXPECT_THROW(parse_pgm16("P2\n2 2\n65535\n"), Error);
  EXPECT_THROW(parse_pgm16(bytes.substr(0, bytes.size() - 1)), Error);
}

TEST(SceneIo, AnchorsCsv) {
  const std::vector<Box> a{{0, 0, 1, 1}, {2.5, 3.5, 10, 20}};
  const auto text = encode_anchors_csv(a);
  EXPECT_EQ(text.substr(0, 8), "x,y,w,h\n");
  EXPECT_EQ(parse_anchors_csv(text), a);
  EXPECT_EQ(parse_anchors_csv("1,2,3,4\n"), (std::vector<Box>{{1, 2, 3, 4}}));
  EXPECT_THROW(parse_anchors_csv("1,2,3\n"), Error);
}

TEST(SceneIo, LoadScene) {
  TempDir dir;
  BitMask free(4, 6);
  free.set(3, 5, true);
  DepthMap depth(4, 6, 12000);
  std::filesystem::create_directories(dir / "maps");
  write_text(dir / "maps/free.json", to_json(encode_rle(free)).dump());
  write_text(dir / "maps/depth.pgm", encode_pgm16(depth));
  write_text(dir / "anchors.csv", encode_anchors_csv({{0, 0, 2, 2}}));
  write_text(dir / "scene.json",
             R"({"frame":7,"size":[4,6],"free_space":"maps/free.json","depth":"maps/depth.pgm","anchors":"anchors.csv"})");
  Track t;
  t.id = 1;
  t.class_label = "car";
  t.member_tracklet_ids = {1};
  TrackFrame f;
  f.t = 7;
  f.box = {1, 1, 2, 2};
  f.mask = rect_mask(4, 6, 1, 1, 2, 2);
  t.frames = {f};
  const auto s = load_scene(dir / "scene.json", {t});
  EXPECT_EQ(s.frame, 7);
  EXPECT_EQ(s.free_space, free);
  EXPECT_EQ(s.depth, depth);
  ASSERT_EQ(s.tracks.size(), 1u);
  EXPECT_EQ(s.tracks[0].class_label, "car");
  EXPECT_TRUE(load_scene(dir / "scene.json", {}).tracks.empty());

  write_text(dir / "bad.json",
             R"({"frame":7,"size":[5,6],"free_space":"maps/free.json","depth":"maps/depth.pgm","anchors":"anchors.csv"})");
  EXPECT_EQ(kind_of([&] { load_scene(dir / "bad.json", {}); }), ErrorKind::SizeMismatch);
}

TEST(SceneIo, DecisionJson) {
  AnchorDecision pos{3, AnchorOutcome::Positive, "car", AnchorRule::KnownTrack};
  EXPECT_EQ(to_json(pos).dump(), R"({"anchor":3,"class":"car","outcome":"positive","rule":"known_track"})");
  AnchorDecision far{4, AnchorOutcome::ExcludedFar, "", AnchorRule::Far};
  EXPECT_EQ(to_json(far).dump(), R"({"anchor":4,"outcome":"excluded_far","rule":"far"})");
}

TEST(Files, AtomicWriteAndStaging) {
  TempDir dir;
  write_file_atomic(dir / "a.txt", "hello");
  EXPECT_EQ(slurp(dir / "a.txt"), "hello");
  {
    StagedOutputs s;
    s.stage(dir / "b.txt", "b");
    s.stage(dir / "c.txt", "c");
    EXPECT_FALSE(std::filesystem::exists(dir / "b.txt"));
  }
  // Not committed: nothing left behind.
  std::size_t files = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir.path())) {
    (void)e;
    ++files;
  }
  EXPECT_EQ(files, 1u);
  StagedOutputs s;
  s.stage(dir / "b.txt", "b");
  s.commit();
  EXPECT_EQ(slurp(dir / "b.txt"), "b");
}

TEST(Files, Sha256) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  TempDir dir;
  write_text(dir / "x", "abc");
  EXPECT_EQ(sha256_file(dir / "x"), sha256_hex("abc"));
}
