#pragma once

// End-to-end run: merge -> represent -> cluster -> eval -> report, plus the shared
// file formats of the cluster and eval stages.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "trackmine/cluster_eval.hpp"
#include "trackmine/embedding_io.hpp"
#include "trackmine/hdbscan.hpp"
#include "trackmine/track_model.hpp"

namespace trackmine {

std::string tool_version();

// Seed from TRACKMINE_SEED when set, else `configured`. Throws Usage on a bad value.
std::uint64_t resolve_seed(std::uint64_t configured);

// "0,0.05,0.1" -> {0, 0.05, 0.1}
std::vector<double> parse_fractions(const std::string& text);

// One embedding per track (key = track id), the member crop nearest the mean. Crops
// are looked up as "<tracklet>:<t>" for the tracklet that supplied each frame. When a
// model is given it is applied to every crop first. Throws EmptyTrack for a track
// without any crop.
EmbeddingSet represent_tracks(const std::vector<Track>& tracks, const EmbeddingSet& crops,
                              const EmbeddingModel* model = nullptr);

struct AssignmentRow {
  std::string id;
  int label = kNoise;
  std::optional<double> prob;
  std::optional<double> outlier;
};

// {"id":"7","label":0,"prob":0.93,"outlier":0.12}
std::string assignment_to_jsonl(const std::vector<std::string>& ids, const ClusterAssignment& a);
std::vector<AssignmentRow> read_assignment(const std::filesystem::path& path);

// Joins predictions with truth by id; rows without a truth label are left out. Scores
// are dropped entirely if any row lacks one, or when `flat` is set.
std::vector<SweepPoint> evaluate(const std::vector<AssignmentRow>& pred,
                                 const std::vector<std::pair<std::string, std::string>>& truth,
                                 const std::vector<double>& fractions, const SweepOptions& options,
                                 bool flat = false);

std::string curve_to_csv(const std::vector<SweepPoint>& curve);

// key = value lines, '#' comments. Keys use the CLI flag spelling ("min-size");
// underscores are accepted too. Relative paths in a file resolve against its directory.
class PipelineConfig {
 public:
  PipelineConfig();

  static PipelineConfig from_file(const std::filesystem::path& path);

  // Throws Usage for unknown keys or malformed values.
  void set(const std::string& key, const std::string& value);
  const std::string& get(const std::string& key) const;
  double get_double(const std::string& key) const;
  std::int64_t get_int(const std::string& key) const;
  bool get_bool(const std::string& key) const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

struct PipelineResult {
  std::filesystem::path out_dir;
  std::size_t tracks = 0;
  std::size_t clusters = 0;
  std::size_t noise = 0;
  std::vector<SweepPoint> curve;
  std::string manifest_digest;
};

// Checks every input before writing anything; outputs are published together at the
// end, so a failing stage leaves the output directory untouched. Stage errors carry
// the stage name.
PipelineResult run_pipeline(const PipelineConfig& cfg);

}  // namespace trackmine
