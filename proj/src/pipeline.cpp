#include "trackmine/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "trackmine/anchor_select.hpp"
#include "trackmine/atomic_file.hpp"
#include "trackmine/digest.hpp"
#include "trackmine/embedding.hpp"
#include "trackmine/error.hpp"
#include "trackmine/stats.hpp"
#include "trackmine/track_io.hpp"
#include "trackmine/tracklet_merge.hpp"

#ifndef TRACKMINE_VERSION
#define TRACKMINE_VERSION "0.0.0"
#endif

namespace trackmine {

using nlohmann::json;

std::string tool_version() { return TRACKMINE_VERSION; }

std::uint64_t resolve_seed(std::uint64_t configured) {
  const char* env = std::getenv("TRACKMINE_SEED");
  if (env == nullptr || *env == '\0') return configured;
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(env, &used);
    if (used != std::string(env).size()) throw std::invalid_argument(env);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorKind::Usage, std::string("TRACKMINE_SEED is not an unsigned integer: '") + env + "'");
  }
}

std::vector<double> parse_fractions(const std::string& text) {
  std::vector<double> out;
  std::istringstream in(text);
  for (std::string tok; std::getline(in, tok, ',');) {
    tok.erase(0, tok.find_first_not_of(" \t"));
    tok.erase(tok.find_last_not_of(" \t") + 1);
    if (tok.empty()) continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw Error(ErrorKind::Usage, "bad fraction '" + tok + "'");
    }
  }
  if (out.empty()) throw Error(ErrorKind::Usage, "no fractions given");
  return out;
}

EmbeddingSet represent_tracks(const std::vector<Track>& tracks, const EmbeddingSet& crops,
                              const EmbeddingModel* model) {
  if (model != nullptr && model->input_dim() != crops.dim) {
    throw Error(ErrorKind::SizeMismatch, "model expects " + std::to_string(model->input_dim()) +
                                             "-d input, crops are " + std::to_string(crops.dim) + "-d");
  }
  std::unordered_map<std::string, const EmbeddingRecord*> by_key;
  for (const auto& r : crops.records) by_key.emplace(r.key, &r);

  EmbeddingSet out;
  out.dim = model != nullptr ? model->output_dim() : crops.dim;
  for (const auto& t : tracks) {
    std::vector<EmbeddingRecord> members;
    for (const auto& f : t.frames) {
      if (!f.source) continue;
      auto it = by_key.find(std::to_string(*f.source) + ":" + std::to_string(f.t));
      if (it == by_key.end()) continue;
      members.push_back(model != nullptr ? EmbeddingRecord{it->second->key, model->apply(it->second->vector)}
                                         : *it->second);
    }
    if (members.empty()) {
      throw Error(ErrorKind::EmptyTrack, "track " + std::to_string(t.id) + " has no crop embeddings");
    }
    EmbeddingRecord rep = representative_embedding(members);
    rep.key = std::to_string(t.id);
    out.records.push_back(std::move(rep));
  }
  return out;
}

std::string assignment_to_jsonl(const std::vector<std::string>& ids, const ClusterAssignment& a) {
  if (ids.size() != a.labels.size()) throw Error(ErrorKind::LengthMismatch, "ids and labels differ in length");
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    out += json{{"id", ids[i]}, {"label", a.labels[i]}, {"prob", a.probabilities[i]}, {"outlier", a.outlier_scores[i]}}
               .dump();
    out += '\n';
  }
  return out;
}

std::vector<AssignmentRow> read_assignment(const std::filesystem::path& path) {
  std::vector<AssignmentRow> rows;
  for_each_jsonl(path, [&](const json& j) {
    AssignmentRow r;
    const auto& id = j.at("id");
    r.id = id.is_string() ? id.get<std::string>() : id.dump();
    r.label = j.at("label").get<int>();
    if (r.label < kNoise) throw Error(ErrorKind::Parse, "label must be >= -1");
    if (j.contains("prob")) r.prob = j.at("prob").get<double>();
    if (j.contains("outlier")) r.outlier = j.at("outlier").get<double>();
    rows.push_back(std::move(r));
  });
  return rows;
}

std::vector<SweepPoint> evaluate(const std::vector<AssignmentRow>& pred,
                                 const std::vector<std::pair<std::string, std::string>>& truth,
                                 const std::vector<double>& fractions, const SweepOptions& options, bool flat) {
  std::unordered_map<std::string, int> class_id;
  std::unordered_map<std::string, int> truth_of;
  for (const auto& [id, label] : truth) {
    const int c = class_id.try_emplace(label, static_cast<int>(class_id.size())).first->second;
    if (!truth_of.emplace(id, c).second) throw Error(ErrorKind::InconsistentInputs, "duplicate truth id " + id);
  }
  std::vector<int> p, t;
  std::vector<double> scores;
  bool scored = !flat;
  for (const auto& row : pred) {
    auto it = truth_of.find(row.id);
    if (it == truth_of.end()) continue;
    p.push_back(row.label);
    t.push_back(it->second);
    if (row.outlier) {
      scores.push_back(*row.outlier);
    } else {
      scored = false;
    }
  }
  if (p.empty()) throw Error(ErrorKind::EmptyRemainder, "no prediction has a truth label");
  if (!scored) scores.clear();
  return outlier_sweep(p, scores, t, fractions, options);
}

std::string curve_to_csv(const std::vector<SweepPoint>& curve) {
  std::string out = "fraction,retained,ami,homogeneity,completeness\n";
  char buf[160];
  for (const auto& s : curve) {
    std::snprintf(buf, sizeof buf, "%.4f,%zu,%.6f,%.6f,%.6f\n", s.fraction, s.retained, s.ami, s.homogeneity,
                  s.completeness);
    out += buf;
  }
  return out;
}

namespace {

const std::map<std::string, std::string>& defaults() {
  static const std::map<std::string, std::string> d{
      {"tracklets", ""},
      {"selection", ""},
      {"crops", ""},
      {"truth", ""},
      {"model", ""},
      {"out", "trackmine-out"},
      {"gamma", "0.5"},
      {"min-overlap", "0.5"},
      {"cyclists", "false"},
      {"min-size", "14"},
      {"min-samples", "0"},
      {"cluster-selection", "eom"},
      {"normalizer", "arithmetic"},
      {"fractions", "0,0.05,0.1,0.2,0.3"},
      {"include-noise", "false"},
      {"proposals-per-frame", "100"},
      {"seed", "0"},
  };
  return d;
}

bool is_path_key(const std::string& k) {
  return k == "tracklets" || k == "selection" || k == "crops" || k == "truth" || k == "model" || k == "out";
}

std::string trim(std::string s) {
  s.erase(0, s.find_first_not_of(" \t\r"));
  s.erase(s.find_last_not_of(" \t\r") + 1);
  return s;
}

std::string normal_key(std::string k) {
  std::replace(k.begin(), k.end(), '_', '-');
  return k;
}

// Prefixes errors with the stage they came from.
template <typename Fn>
auto stage(const char* name, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error(e.kind(), std::string(name) + ": " + e.message());
  } catch (const std::filesystem::filesystem_error& e) {
    throw Error(ErrorKind::Io, std::string(name) + ": " + e.what());
  }
}

std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

PipelineConfig::PipelineConfig() : values_(defaults()) {}

PipelineConfig PipelineConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open config " + path.string());
  PipelineConfig cfg;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::Usage, path.string() + ":" + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = normal_key(trim(line.substr(0, eq)));
    std::string value = trim(line.substr(eq + 1));
    if (is_path_key(key) && !value.empty() && std::filesystem::path(value).is_relative()) {
      value = (path.parent_path() / value).lexically_normal().string();
    }
    try {
      cfg.set(key, value);
    } catch (const Error& e) {
      throw Error(e.kind(), path.string() + ":" + std::to_string(line_no) + ": " + e.message());
    }
  }
  return cfg;
}

void PipelineConfig::set(const std::string& raw_key, const std::string& value) {
  const std::string key = normal_key(raw_key);
  auto it = values_.find(key);
  if (it == values_.end()) throw Error(ErrorKind::Usage, "unknown config key '" + raw_key + "'");
  const std::string old = it->second;
  it->second = value;
  try {
    if (key == "gamma" || key == "min-overlap") get_double(key);
    if (key == "min-size" || key == "min-samples" || key == "proposals-per-frame" || key == "seed") {
      if (get_int(key) < 0) throw Error(ErrorKind::Usage, key + " must be >= 0");
    }
    if (key == "cyclists" || key == "include-noise") get_bool(key);
    if (key == "normalizer") parse_normalizer(value);
    if (key == "fractions") parse_fractions(value);
    if (key == "cluster-selection" && value != "eom" && value != "leaf") {
      throw Error(ErrorKind::Usage, "cluster-selection must be eom or leaf");
    }
  } catch (...) {
    it->second = old;
    throw;
  }
}

const std::string& PipelineConfig::get(const std::string& key) const {
  auto it = values_.find(normal_key(key));
  if (it == values_.end()) throw Error(ErrorKind::Usage, "unknown config key '" + key + "'");
  return it->second;
}

double PipelineConfig::get_double(const std::string& key) const {
  const std::string& v = get(key);
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw Error(ErrorKind::Usage, key + ": not a number: '" + v + "'");
}

std::int64_t PipelineConfig::get_int(const std::string& key) const {
  const std::string& v = get(key);
  try {
    std::size_t used = 0;
    const long long i = std::stoll(v, &used);
    if (used == v.size()) return i;
  } catch (const std::exception&) {
  }
  throw Error(ErrorKind::Usage, key + ": not an integer: '" + v + "'");
}

bool PipelineConfig::get_bool(const std::string& key) const {
  const std::string& v = get(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw Error(ErrorKind::Usage, key + ": not a boolean: '" + v + "'");
}

PipelineResult run_pipeline(const PipelineConfig& cfg) {
  // Inputs first: nothing is written unless all of them are readable.
  std::vector<std::pair<std::string, std::filesystem::path>> inputs;
  for (const char* key : {"tracklets", "selection", "crops", "truth", "model"}) {
    const std::string& v = cfg.get(key);
    if (v.empty()) {
      if (std::string(key) == "model") continue;
      throw Error(ErrorKind::Usage, std::string("pipeline needs '") + key + "'");
    }
    if (!std::filesystem::is_regular_file(v)) throw Error(ErrorKind::Io, std::string(key) + ": no such file " + v);
    inputs.emplace_back(key, v);
  }

  MergeConfig merge_cfg;
  merge_cfg.gamma = cfg.get_double("gamma");
  merge_cfg.min_overlap = cfg.get_double("min-overlap");
  validate(merge_cfg);
  HdbscanConfig hcfg;
  hcfg.min_size = static_cast<std::size_t>(cfg.get_int("min-size"));
  hcfg.min_samples = static_cast<std::size_t>(cfg.get_int("min-samples"));
  hcfg.selection = cfg.get("cluster-selection") == "leaf" ? ClusterSelection::Leaf : ClusterSelection::ExcessOfMass;
  validate(hcfg);
  SweepOptions sweep;
  sweep.normalizer = parse_normalizer(cfg.get("normalizer"));
  sweep.include_noise = cfg.get_bool("include-noise");
  const auto fractions = parse_fractions(cfg.get("fractions"));
  const std::int64_t proposals = cfg.get_int("proposals-per-frame");
  const std::uint64_t seed = resolve_seed(static_cast<std::uint64_t>(cfg.get_int("seed")));
  const std::filesystem::path out_dir = cfg.get("out");

  json manifest;
  manifest["command"] = "pipeline";
  manifest["version"] = tool_version();
  manifest["seed"] = seed;
  json config_snapshot = json::object();
  for (const auto& [k, v] : cfg.values()) config_snapshot[k] = v;
  config_snapshot["seed"] = std::to_string(seed);
  manifest["config"] = config_snapshot;
  json input_digests = json::object();
  for (const auto& [key, path] : inputs) {
    input_digests[key] = {{"path", path.string()}, {"sha256", sha256_file(path)}};
  }
  manifest["inputs"] = input_digests;

  const auto tracklets = stage("merge", [&] { return read_tracklets(cfg.get("tracklets")); });
  const auto selection = stage("merge", [&] { return read_selection(cfg.get("selection")); });
  TrackCollection collection = stage("merge", [&] {
    auto c = merge_collection(tracklets, selection, merge_cfg);
    c.provenance.proposals_per_frame = proposals;
    if (cfg.get_bool("cyclists")) c = merge_cyclists(c);
    return c;
  });

  std::optional<EmbeddingModel> model;
  if (!cfg.get("model").empty()) {
    model = stage("represent", [&] { return model_from_json(json::parse(read_file(cfg.get("model")))); });
  }
  const EmbeddingSet track_embeddings = stage("represent", [&] {
    const EmbeddingSet crops = read_embeddings(cfg.get("crops"));
    return represent_tracks(collection.tracks, crops, model ? &*model : nullptr);
  });

  PointSet points;
  points.dim = track_embeddings.dim;
  std::vector<std::string> ids;
  for (const auto& r : track_embeddings.records) {
    points.coords.insert(points.coords.end(), r.vector.begin(), r.vector.end());
    ids.push_back(r.key);
  }
  const ClusterAssignment assignment = stage("cluster", [&] { return hdbscan(points, hcfg); });

  const auto curve = stage("eval", [&] {
    std::unordered_map<TrackletId, std::string> tracklet_class;
    // truth.csv: tracklet,object,class
    std::ifstream in(cfg.get("truth"));
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || (line_no == 1 && line.rfind("tracklet", 0) == 0)) continue;
      const auto c1 = line.find(',');
      const auto c2 = line.find(',', c1 == std::string::npos ? c1 : c1 + 1);
      if (c1 == std::string::npos || c2 == std::string::npos) {
        throw Error(ErrorKind::Parse, "truth line " + std::to_string(line_no) + ": expected tracklet,object,class");
      }
      try {
        tracklet_class[std::stoll(line.substr(0, c1))] = line.substr(c2 + 1);
      } catch (const std::exception&) {
        throw Error(ErrorKind::Parse, "truth line " + std::to_string(line_no) + ": bad tracklet id");
      }
    }
    std::vector<std::pair<std::string, std::string>> track_truth;
    for (const auto& t : collection.tracks) {
      std::vector<std::string> labels;
      for (TrackletId m : t.member_tracklet_ids) {
        if (auto it = tracklet_class.find(m); it != tracklet_class.end()) labels.push_back(it->second);
      }
      if (!labels.empty()) track_truth.emplace_back(std::to_string(t.id), majority_label(labels));
    }
    std::vector<AssignmentRow> rows;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      rows.push_back({ids[i], assignment.labels[i], assignment.probabilities[i], assignment.outlier_scores[i]});
    }
    return evaluate(rows, track_truth, fractions, sweep);
  });

  const MiningStats mining = compute_stats(tracklets.size(), selection, collection.tracks.size(), proposals);

  std::map<std::string, std::string> outputs{
      {"tracks.jsonl", tracks_to_jsonl(collection.tracks)},
      {"track-embeddings.bin", encode_embeddings_binary(track_embeddings)},
      {"assignment.jsonl", assignment_to_jsonl(ids, assignment)},
      {"curve.csv", curve_to_csv(curve)},
      {"stats.txt", stats_text(mining)},
      {"stats.csv", stats_csv(mining)},
  };
  json output_digests = json::object();
  for (const auto& [name, bytes] : outputs) output_digests[name] = sha256_hex(bytes);
  manifest["outputs"] = output_digests;
  const std::string manifest_text = manifest.dump(2) + "\n";

  PipelineResult result;
  result.out_dir = out_dir;
  result.tracks = collection.tracks.size();
  result.clusters = assignment.cluster_count;
  result.noise = static_cast<std::size_t>(std::count(assignment.labels.begin(), assignment.labels.end(), kNoise));
  result.curve = curve;
  result.manifest_digest = sha256_hex(manifest_text);

  std::ostringstream report;
  report << "trackmine " << tool_version() << " pipeline report\n"
         << "manifest sha256 " << result.manifest_digest << "\n"
         << "seed " << seed << "\n"
         << "normalizer " << to_string(sweep.normalizer) << "\n"
         << "min-size " << hcfg.min_size << ", min-samples " << hcfg.effective_min_samples() << "\n\n"
         << "tracklets " << tracklets.size() << "\n"
         << "tracks " << result.tracks << "\n"
         << "clusters " << result.clusters << "\n"
         << "noise " << result.noise << "\n\n"
         << "fraction  retained  ami       homogeneity  completeness\n";
  for (const auto& p : curve) {
    report << fixed(p.fraction, 4) << "    " << p.retained << "  " << fixed(p.ami) << "  " << fixed(p.homogeneity)
           << "  " << fixed(p.completeness) << "\n";
  }
  report << "\n" << stats_text(mining);

  stage("report", [&] {
    std::filesystem::create_directories(out_dir);
    StagedOutputs staged;
    for (const auto& [name, bytes] : outputs) staged.stage(out_dir / name, bytes);
    staged.stage(out_dir / "manifest.json", manifest_text);
    staged.stage(out_dir / "report.txt", report.str());
    staged.commit();
    return 0;
  });
  return result;
}

}  // namespace trackmine
