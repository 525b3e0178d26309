#include "trackmine/scene_io.hpp"

#include <cctype>
#include <charconv>
#include <sstream>

#include "trackmine/embedding_io.hpp"
#include "trackmine/error.hpp"
#include "trackmine/track_io.hpp"

namespace trackmine {

std::string encode_pgm16(const DepthMap& depth) {
  std::string out = "P5\n" + std::to_string(depth.width) + " " + std::to_string(depth.height) + "\n65535\n";
  out.reserve(out.size() + 2 * depth.mm.size());
  for (auto v : depth.mm) {
    out.push_back(static_cast<char>(v >> 8));
    out.push_back(static_cast<char>(v & 0xFF));
  }
  return out;
}

namespace {

// Next whitespace-delimited header token, skipping '#' comments.
std::string pgm_token(const std::string& s, std::size_t& pos) {
  for (;;) {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    if (pos < s.size() && s[pos] == '#') {
      while (pos < s.size() && s[pos] != '\n') ++pos;
      continue;
    }
    break;
  }
  const std::size_t start = pos;
  while (pos < s.size() && !std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
  return s.substr(start, pos - start);
}

std::uint32_t pgm_number(const std::string& tok) {
  std::uint32_t v = 0;
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || p != tok.data() + tok.size()) throw Error(ErrorKind::Parse, "bad PGM header value '" + tok + "'");
  return v;
}

double parse_double(const std::string& tok) {
  try {
    std::size_t used = 0;
    const double v = std::stod(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorKind::Parse, "bad number '" + tok + "'");
  }
}

}  // namespace

DepthMap parse_pgm16(const std::string& bytes) {
  std::size_t pos = 0;
  if (pgm_token(bytes, pos) != "P5") throw Error(ErrorKind::Parse, "depth map is not a binary PGM");
  const auto width = pgm_number(pgm_token(bytes, pos));
  const auto height = pgm_number(pgm_token(bytes, pos));
  const auto maxval = pgm_number(pgm_token(bytes, pos));
  if (maxval < 256 || maxval > 65535) throw Error(ErrorKind::Parse, "depth map must be 16-bit");
  ++pos;  // single whitespace byte before the raster
  DepthMap d(height, width);
  if (bytes.size() < pos + 2 * d.mm.size()) throw Error(ErrorKind::Parse, "truncated depth raster");
  for (std::size_t i = 0; i < d.mm.size(); ++i) {
    const auto hi = static_cast<unsigned char>(bytes[pos + 2 * i]);
    const auto lo = static_cast<unsigned char>(bytes[pos + 2 * i + 1]);
    d.mm[i] = static_cast<std::uint16_t>((hi << 8) | lo);
  }
  return d;
}

std::string encode_anchors_csv(const std::vector<Box>& anchors) {
  std::ostringstream out;
  out.precision(17);
  out << "x,y,w,h\n";
  for (const auto& b : anchors) out << b.x << ',' << b.y << ',' << b.w << ',' << b.h << '\n';
  return out.str();
}

std::vector<Box> parse_anchors_csv(const std::string& text) {
  std::vector<Box> out;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (lineno == 1 && line.rfind("x", 0) == 0) continue;
    std::vector<std::string> cells;
    std::istringstream row(line);
    for (std::string cell; std::getline(row, cell, ',');) cells.push_back(cell);
    if (cells.size() != 4) {
      throw Error(ErrorKind::Parse, "anchors line " + std::to_string(lineno) + ": expected x,y,w,h");
    }
    Box b{parse_double(cells[0]), parse_double(cells[1]), parse_double(cells[2]), parse_double(cells[3])};
    if (!is_valid(b)) throw Error(ErrorKind::Parse, "anchors line " + std::to_string(lineno) + ": invalid box");
    out.push_back(b);
  }
  return out;
}

std::vector<SceneTrack> scene_tracks_at(const std::vector<Track>& tracks, FrameIndex frame) {
  std::vector<SceneTrack> out;
  for (const auto& t : tracks) {
    if (const TrackFrame* f = t.at(frame)) out.push_back({t.id, f->box, t.class_label});
  }
  return out;
}

SceneFrame load_scene(const std::filesystem::path& scene_json, const std::vector<Track>& tracks) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(scene_json));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Parse, scene_json.string() + ": " + e.what());
  }
  const auto dir = scene_json.parent_path();
  auto resolve = [&](const char* key) {
    std::filesystem::path p = j.at(key).get<std::string>();
    return p.is_absolute() ? p : dir / p;
  };
  SceneFrame f;
  try {
    f.frame = j.at("frame").get<FrameIndex>();
    f.height = j.at("size").at(0).get<std::uint32_t>();
    f.width = j.at("size").at(1).get<std::uint32_t>();
    const auto mask = mask_from_json(nlohmann::json::parse(read_file(resolve("free_space"))));
    validate(mask);
    f.free_space = decode_rle(mask);
    f.depth = parse_pgm16(read_file(resolve("depth")));
    f.anchors = parse_anchors_csv(read_file(resolve("anchors")));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Parse, scene_json.string() + ": " + e.what());
  }
  f.tracks = scene_tracks_at(tracks, f.frame);
  validate(f);
  return f;
}

nlohmann::json to_json(const AnchorDecision& d) {
  nlohmann::json j{{"anchor", d.anchor}, {"outcome", to_string(d.outcome)}};
  if (d.outcome == AnchorOutcome::Positive) j["class"] = d.class_label;
  j["rule"] = to_string(d.rule);
  return j;
}

std::string decisions_to_jsonl(const std::vector<AnchorDecision>& decisions) {
  std::string out;
  for (const auto& d : decisions) out += to_json(d).dump() + "\n";
  return out;
}

}  // namespace trackmine
