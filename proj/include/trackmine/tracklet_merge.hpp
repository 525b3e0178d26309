#pragma once

// Progressive merging of per-frame selected tracklets into tracks.
//
// A tracklet h_j may continue the track of a dropped tracklet h_i when their
// overlap ratio
//
//   lambda(h_i, h_j) = |{t : IoU(h_i^t, h_j^t) > gamma}| / min(|h_i|, |h_j|)
//
// reaches min_overlap. Only frames where both tracklets exist can match.

#include <cstddef>
#include <vector>

#include "trackmine/track_model.hpp"

namespace trackmine {

struct MergeConfig {
  double gamma = 0.5;        // mask IoU needed for a matching frame, in (0,1)
  double min_overlap = 0.5;  // lambda needed to continue a track, in (0,1]
};

void validate(const MergeConfig& cfg);

struct FrameSelection {
  FrameIndex t = 0;
  std::vector<TrackletId> selected;

  friend bool operator==(const FrameSelection&, const FrameSelection&) = default;
};

// Per-frame output of the upstream tracker's model selection, ordered by frame.
struct SelectionLog {
  std::vector<FrameSelection> frames;

  friend bool operator==(const SelectionLog&, const SelectionLog&) = default;
};

std::size_t matching_frames(const Tracklet& a, const Tracklet& b, double gamma);

double overlap_ratio(const Tracklet& a, const Tracklet& b, double gamma);

// Frame-ordered sweep. A track whose tracklet is re-selected continues with it; a
// track whose tracklet was dropped is handed to the free selected tracklet with the
// highest lambda >= min_overlap (ties: longer tracklet, then smaller id; competing
// tracks resolved greedily in that same order, then by smaller track id); otherwise
// the track terminates for good. Selected tracklets that continue nothing start new
// tracks. Track ids are assigned 0, 1, ... in creation order.
//
// Throws DanglingId when the selection names an unknown tracklet.
TrackCollection merge_collection(const std::vector<Tracklet>& tracklets,
                                 const SelectionLog& selection, const MergeConfig& cfg);

// Majority vote over labels; any tie for the top count resolves to "unknown".
std::string majority_label(const std::vector<std::string>& labels);

}  // namespace trackmine
