#include "trackmine/tracklet_merge.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>
#include <unordered_set>

#include "trackmine/error.hpp"

namespace trackmine {

void validate(const MergeConfig& cfg) {
  if (!(cfg.gamma > 0.0 && cfg.gamma < 1.0)) {
    throw Error(ErrorKind::Usage, "gamma must lie in (0,1)");
  }
  if (!(cfg.min_overlap > 0.0 && cfg.min_overlap <= 1.0)) {
    throw Error(ErrorKind::Usage, "min_overlap must lie in (0,1]");
  }
}

std::size_t matching_frames(const Tracklet& a, const Tracklet& b, double gamma) {
  std::size_t matches = 0;
  auto ia = a.frames.begin();
  auto ib = b.frames.begin();
  while (ia != a.frames.end() && ib != b.frames.end()) {
    if (ia->t < ib->t) {
      ++ia;
    } else if (ib->t < ia->t) {
      ++ib;
    } else {
      if (mask_iou(ia->mask, ib->mask) > gamma) ++matches;
      ++ia;
      ++ib;
    }
  }
  return matches;
}

double overlap_ratio(const Tracklet& a, const Tracklet& b, double gamma) {
  const std::size_t shorter = std::min(a.length(), b.length());
  if (shorter == 0) return 0.0;
  return static_cast<double>(matching_frames(a, b, gamma)) / static_cast<double>(shorter);
}

std::string majority_label(const std::vector<std::string>& labels) {
  if (labels.empty()) return std::string(kUnknownClass);
  std::map<std::string, std::size_t> votes;
  for (const auto& l : labels) ++votes[l];
  std::size_t best = 0;
  for (const auto& [label, n] : votes) best = std::max(best, n);
  std::string winner;
  std::size_t winners = 0;
  for (const auto& [label, n] : votes) {
    if (n == best) {
      winner = label;
      ++winners;
    }
  }
  return winners == 1 ? winner : std::string(kUnknownClass);
}

namespace {

struct Handoff {
  double lambda;
  std::size_t candidate_length;
  TrackletId candidate;
  TrackId track;
};

bool better(const Handoff& a, const Handoff& b) {
  if (a.lambda != b.lambda) return a.lambda > b.lambda;
  if (a.candidate_length != b.candidate_length) return a.candidate_length > b.candidate_length;
  if (a.candidate != b.candidate) return a.candidate < b.candidate;
  return a.track < b.track;
}

}  // namespace

TrackCollection merge_collection(const std::vector<Tracklet>& tracklets,
                                 const SelectionLog& selection, const MergeConfig& cfg) {
  validate(cfg);
  std::unordered_map<TrackletId, const Tracklet*> by_id;
  for (const auto& t : tracklets) {
    if (!by_id.emplace(t.id, &t).second) {
      throw Error(ErrorKind::InconsistentInputs, "duplicate tracklet id " + std::to_string(t.id));
    }
  }
  for (const auto& fs : selection.frames) {
    for (TrackletId id : fs.selected) {
      if (!by_id.count(id)) {
        throw Error(ErrorKind::DanglingId, "frame " + std::to_string(fs.t) +
                                               " selects unknown tracklet " + std::to_string(id));
      }
    }
  }

  std::vector<FrameSelection> frames = selection.frames;
  std::stable_sort(frames.begin(), frames.end(),
                   [](const FrameSelection& a, const FrameSelection& b) { return a.t < b.t; });

  TrackCollection out;
  std::vector<TrackletId> current;  // per track
  std::vector<bool> alive;          // per track
  std::unordered_set<TrackletId> consumed;

  for (const auto& fs : frames) {
    std::vector<TrackletId> selected = fs.selected;
    std::sort(selected.begin(), selected.end());
    selected.erase(std::unique(selected.begin(), selected.end()), selected.end());
    const std::unordered_set<TrackletId> selected_set(selected.begin(), selected.end());

    std::vector<TrackId> dropped;
    for (std::size_t k = 0; k < out.tracks.size(); ++k) {
      if (alive[k] && !selected_set.count(current[k])) dropped.push_back(static_cast<TrackId>(k));
    }
    std::vector<TrackletId> free_ids;
    for (TrackletId id : selected) {
      if (!consumed.count(id)) free_ids.push_back(id);
    }

    std::vector<Handoff> handoffs;
    for (TrackId k : dropped) {
      const Tracklet& prev = *by_id.at(current[static_cast<std::size_t>(k)]);
      for (TrackletId j : free_ids) {
        const Tracklet& cand = *by_id.at(j);
        const double lambda = overlap_ratio(prev, cand, cfg.gamma);
        if (lambda >= cfg.min_overlap) handoffs.push_back({lambda, cand.length(), j, k});
      }
    }
    std::sort(handoffs.begin(), handoffs.end(), better);

    std::unordered_set<TrackId> continued;
    for (const auto& h : handoffs) {
      if (continued.count(h.track) || consumed.count(h.candidate)) continue;
      const auto k = static_cast<std::size_t>(h.track);
      current[k] = h.candidate;
      out.tracks[k].member_tracklet_ids.push_back(h.candidate);
      consumed.insert(h.candidate);
      continued.insert(h.track);
    }
    for (TrackId k : dropped) {
      if (!continued.count(k)) alive[static_cast<std::size_t>(k)] = false;
    }
    for (TrackletId j : free_ids) {
      if (consumed.count(j)) continue;
      Track t;
      t.id = static_cast<TrackId>(out.tracks.size());
      t.member_tracklet_ids.push_back(j);
      out.tracks.push_back(std::move(t));
      current.push_back(j);
      alive.push_back(true);
      consumed.insert(j);
    }

    for (std::size_t k = 0; k < out.tracks.size(); ++k) {
      if (!alive[k]) continue;
      const Tracklet& src = *by_id.at(current[k]);
      const TrackFrame* f = src.at(fs.t);
      if (f == nullptr) {
        throw Error(ErrorKind::InconsistentInputs, "tracklet " + std::to_string(src.id) +
                                                       " selected at frame " +
                                                       std::to_string(fs.t) + " outside its extent");
      }
      TrackFrame copy = *f;
      copy.source = src.id;
      out.tracks[k].frames.push_back(std::move(copy));
    }
  }

  for (auto& track : out.tracks) {
    std::vector<std::string> labels;
    for (TrackletId id : track.member_tracklet_ids) labels.push_back(by_id.at(id)->class_label);
    track.class_label = majority_label(labels);
  }
  out.provenance.frame_count = static_cast<std::int64_t>(frames.size());
  return out;
}

}  // namespace trackmine
