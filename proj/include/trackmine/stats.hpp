#pragma once

// Mining statistics: how many candidates survive each stage.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "trackmine/tracklet_merge.hpp"

namespace trackmine {

struct MiningStats {
  std::int64_t frames = 0;              // distinct frames in the selection log
  std::int64_t proposals_per_frame = 0;
  std::int64_t proposals = 0;           // frames x proposals_per_frame
  std::int64_t all_tracklets = 0;
  std::int64_t selected_tracklets = 0;  // distinct ids ever selected
  std::int64_t tracks = 0;
  std::int64_t selections = 0;          // sum of per-frame selection sizes

  // Undefined (nullopt) when the denominator is zero.
  std::optional<double> selected_per_frame() const;
  std::optional<double> proposals_per_track() const;
  std::optional<double> tracklets_per_track() const;

  friend bool operator==(const MiningStats&, const MiningStats&) = default;
};

// Reads only the ids it needs, so full mask payloads are not required. Throws
// InconsistentInputs when the selection or tracks refer to unknown tracklets or the
// counts are not nested (tracks <= selected <= all).
MiningStats compute_stats(const std::filesystem::path& tracklets, const std::filesystem::path& selection,
                          const std::filesystem::path& tracks, std::int64_t proposals_per_frame);

// Same accounting over data already in memory.
MiningStats compute_stats(std::size_t tracklet_count, const SelectionLog& selection, std::size_t track_count,
                          std::int64_t proposals_per_frame);

std::string stats_text(const MiningStats& s);
std::string stats_csv(const MiningStats& s);

}  // namespace trackmine
