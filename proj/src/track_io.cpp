#include "trackmine/track_io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "trackmine/error.hpp"

namespace trackmine {

using nlohmann::json;

void for_each_jsonl(const std::filesystem::path& path, const std::function<void(const json&)>& fn) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw Error(ErrorKind::Parse, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    try {
      fn(j);
    } catch (const json::exception& e) {
      throw Error(ErrorKind::Parse, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(e.kind(), path.string() + ":" + std::to_string(line_no) + ": " + e.message());
    }
  }
}

json to_json(const MaskRLE& m) {
  return json{{"size", {m.height, m.width}}, {"counts", m.counts}};
}

MaskRLE mask_from_json(const json& j) {
  MaskRLE m;
  const auto& size = j.at("size");
  if (!size.is_array() || size.size() != 2) throw Error(ErrorKind::Parse, "mask size must be [H,W]");
  m.height = size[0].get<std::uint32_t>();
  m.width = size[1].get<std::uint32_t>();
  m.counts = j.at("counts").get<std::vector<std::uint32_t>>();
  validate(m);
  return m;
}

json to_json(const TrackFrame& f) {
  json j{{"t", f.t}, {"box", {f.box.x, f.box.y, f.box.w, f.box.h}}, {"mask", to_json(f.mask)}};
  if (f.foot) j["foot"] = {f.foot->x, f.foot->z};
  if (f.source) j["src"] = *f.source;
  return j;
}

TrackFrame frame_from_json(const json& j) {
  TrackFrame f;
  f.t = j.at("t").get<FrameIndex>();
  const auto& b = j.at("box");
  if (!b.is_array() || b.size() != 4) throw Error(ErrorKind::Parse, "box must be [x,y,w,h]");
  f.box = {b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>()};
  f.mask = mask_from_json(j.at("mask"));
  if (auto it = j.find("foot"); it != j.end() && !it->is_null()) {
    if (!it->is_array() || it->size() != 2) throw Error(ErrorKind::Parse, "foot must be [x,z]");
    f.foot = GroundPoint{(*it)[0].get<double>(), (*it)[1].get<double>()};
  }
  if (auto it = j.find("src"); it != j.end() && !it->is_null()) f.source = it->get<TrackletId>();
  return f;
}

namespace {

std::vector<TrackFrame> frames_from_json(const json& j) {
  std::vector<TrackFrame> frames;
  for (const auto& f : j.at("frames")) frames.push_back(frame_from_json(f));
  return frames;
}

std::string class_from_json(const json& j) {
  auto it = j.find("class");
  return it == j.end() || it->is_null() ? std::string(kUnknownClass) : it->get<std::string>();
}

}  // namespace

json to_json(const Tracklet& t) {
  json frames = json::array();
  for (const auto& f : t.frames) frames.push_back(to_json(f));
  return json{{"id", t.id}, {"class", t.class_label}, {"frames", std::move(frames)}};
}

Tracklet tracklet_from_json(const json& j) {
  Tracklet t;
  t.id = j.at("id").get<TrackletId>();
  t.class_label = class_from_json(j);
  t.frames = frames_from_json(j);
  validate(t);
  return t;
}

json to_json(const Track& t) {
  json frames = json::array();
  for (const auto& f : t.frames) frames.push_back(to_json(f));
  return json{{"id", t.id},
              {"class", t.class_label},
              {"members", t.member_tracklet_ids},
              {"frames", std::move(frames)}};
}

Track track_from_json(const json& j) {
  Track t;
  t.id = j.at("id").get<TrackId>();
  t.class_label = class_from_json(j);
  if (auto it = j.find("members"); it != j.end()) {
    t.member_tracklet_ids = it->get<std::vector<TrackletId>>();
  }
  t.frames = frames_from_json(j);
  validate(t);
  return t;
}

std::vector<Tracklet> read_tracklets(const std::filesystem::path& path) {
  std::vector<Tracklet> out;
  for_each_jsonl(path, [&](const json& j) { out.push_back(tracklet_from_json(j)); });
  return out;
}

std::vector<Track> read_tracks(const std::filesystem::path& path) {
  std::vector<Track> out;
  for_each_jsonl(path, [&](const json& j) { out.push_back(track_from_json(j)); });
  return out;
}

SelectionLog read_selection(const std::filesystem::path& path) {
  SelectionLog log;
  for_each_jsonl(path, [&](const json& j) {
    log.frames.push_back({j.at("t").get<FrameIndex>(), j.at("selected").get<std::vector<TrackletId>>()});
  });
  std::stable_sort(log.frames.begin(), log.frames.end(),
                   [](const FrameSelection& a, const FrameSelection& b) { return a.t < b.t; });
  for (std::size_t i = 1; i < log.frames.size(); ++i) {
    if (log.frames[i].t == log.frames[i - 1].t) {
      throw Error(ErrorKind::InconsistentInputs,
                  path.string() + ": frame " + std::to_string(log.frames[i].t) + " listed twice");
    }
  }
  return log;
}

std::string tracklets_to_jsonl(const std::vector<Tracklet>& tracklets) {
  std::ostringstream os;
  for (const auto& t : tracklets) os << to_json(t).dump() << '\n';
  return os.str();
}

std::string tracks_to_jsonl(const std::vector<Track>& tracks) {
  std::ostringstream os;
  for (const auto& t : tracks) os << to_json(t).dump() << '\n';
  return os.str();
}

std::string selection_to_jsonl(const SelectionLog& log) {
  std::ostringstream os;
  for (const auto& f : log.frames) os << json{{"t", f.t}, {"selected", f.selected}}.dump() << '\n';
  return os.str();
}

}  // namespace trackmine
