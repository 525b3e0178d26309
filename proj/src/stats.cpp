#include "trackmine/stats.hpp"

#include <cstdio>
#include <sstream>
#include <unordered_set>

#include "trackmine/error.hpp"
#include "trackmine/track_io.hpp"

namespace trackmine {

namespace {

std::optional<double> ratio(std::int64_t num, std::int64_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

std::string fmt(const std::optional<double>& v) {
  if (!v) return "—";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", *v);
  return buf;
}

// 4240700 -> "4,240,700"
std::string grouped(std::int64_t v) {
  std::string digits = std::to_string(v < 0 ? -v : v);
  std::string out;
  for (std::size_t i = 0; i < digits.size(); ++i) {
    if (i > 0 && (digits.size() - i) % 3 == 0) out.push_back(',');
    out.push_back(digits[i]);
  }
  return v < 0 ? "-" + out : out;
}

}  // namespace

std::optional<double> MiningStats::selected_per_frame() const { return ratio(selections, frames); }
std::optional<double> MiningStats::proposals_per_track() const { return ratio(proposals, tracks); }
std::optional<double> MiningStats::tracklets_per_track() const { return ratio(all_tracklets, tracks); }

MiningStats compute_stats(const std::filesystem::path& tracklets, const std::filesystem::path& selection,
                          const std::filesystem::path& tracks, std::int64_t proposals_per_frame) {
  if (proposals_per_frame < 0) throw Error(ErrorKind::Usage, "proposals per frame must be >= 0");
  MiningStats s;
  s.proposals_per_frame = proposals_per_frame;

  std::unordered_set<TrackletId> known;
  for_each_jsonl(tracklets, [&](const nlohmann::json& j) {
    const auto id = j.at("id").get<TrackletId>();
    if (!known.insert(id).second) {
      throw Error(ErrorKind::InconsistentInputs, "duplicate tracklet id " + std::to_string(id));
    }
  });
  s.all_tracklets = static_cast<std::int64_t>(known.size());

  const SelectionLog log = read_selection(selection);
  std::unordered_set<TrackletId> selected;
  for (const auto& f : log.frames) {
    for (TrackletId id : f.selected) {
      if (!known.count(id)) {
        throw Error(ErrorKind::InconsistentInputs, "frame " + std::to_string(f.t) + " selects unknown tracklet " +
                                                       std::to_string(id));
      }
      selected.insert(id);
    }
    s.selections += static_cast<std::int64_t>(f.selected.size());
  }
  s.frames = static_cast<std::int64_t>(log.frames.size());
  s.proposals = s.frames * proposals_per_frame;
  s.selected_tracklets = static_cast<std::int64_t>(selected.size());

  for_each_jsonl(tracks, [&](const nlohmann::json& j) {
    if (j.contains("members")) {
      for (const auto& m : j.at("members")) {
        if (!selected.count(m.get<TrackletId>())) {
          throw Error(ErrorKind::InconsistentInputs, "track " + j.at("id").dump() +
                                                         " contains a tracklet that was never selected");
        }
      }
    }
    ++s.tracks;
  });

  if (s.tracks > s.selected_tracklets || s.selected_tracklets > s.all_tracklets) {
    throw Error(ErrorKind::InconsistentInputs, "counts are not nested: " + std::to_string(s.tracks) + " tracks, " +
                                                   std::to_string(s.selected_tracklets) + " selected, " +
                                                   std::to_string(s.all_tracklets) + " tracklets");
  }
  return s;
}

MiningStats compute_stats(std::size_t tracklet_count, const SelectionLog& selection, std::size_t track_count,
                          std::int64_t proposals_per_frame) {
  MiningStats s;
  s.proposals_per_frame = proposals_per_frame;
  s.all_tracklets = static_cast<std::int64_t>(tracklet_count);
  s.frames = static_cast<std::int64_t>(selection.frames.size());
  s.proposals = s.frames * proposals_per_frame;
  std::unordered_set<TrackletId> selected;
  for (const auto& f : selection.frames) {
    selected.insert(f.selected.begin(), f.selected.end());
    s.selections += static_cast<std::int64_t>(f.selected.size());
  }
  s.selected_tracklets = static_cast<std::int64_t>(selected.size());
  s.tracks = static_cast<std::int64_t>(track_count);
  return s;
}

std::string stats_text(const MiningStats& s) {
  std::ostringstream out;
  out << "frames               " << grouped(s.frames) << '\n'
      << "proposals            " << grouped(s.proposals) << "  (" << s.proposals_per_frame << " per frame)\n"
      << "tracklets            " << grouped(s.all_tracklets) << '\n'
      << "selected tracklets   " << grouped(s.selected_tracklets) << '\n'
      << "tracks               " << grouped(s.tracks) << '\n'
      << "selected per frame   " << fmt(s.selected_per_frame()) << '\n'
      << "proposals per track  " << fmt(s.proposals_per_track()) << '\n'
      << "tracklets per track  " << fmt(s.tracklets_per_track()) << '\n';
  return out.str();
}

std::string stats_csv(const MiningStats& s) {
  std::ostringstream out;
  out << "frames,proposals_per_frame,proposals,tracklets,selected_tracklets,tracks,selected_per_frame,"
         "proposals_per_track,tracklets_per_track\n"
      << s.frames << ',' << s.proposals_per_frame << ',' << s.proposals << ',' << s.all_tracklets << ','
      << s.selected_tracklets << ',' << s.tracks << ',' << fmt(s.selected_per_frame()) << ','
      << fmt(s.proposals_per_track()) << ',' << fmt(s.tracklets_per_track()) << '\n';
  return out.str();
}

}  // namespace trackmine
