// trackmine command-line front end.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <map>
#include <unordered_map>

#include "trackmine/anchor_select.hpp"
#include "trackmine/atomic_file.hpp"
#include "trackmine/cluster_eval.hpp"
#include "trackmine/embedding.hpp"
#include "trackmine/embedding_io.hpp"
#include "trackmine/error.hpp"
#include "trackmine/hdbscan.hpp"
#include "trackmine/parallel.hpp"
#include "trackmine/pipeline.hpp"
#include "trackmine/scene_io.hpp"
#include "trackmine/stats.hpp"
#include "trackmine/synth.hpp"
#include "trackmine/track_io.hpp"
#include "trackmine/tracklet_merge.hpp"

namespace tmine = trackmine;
using nlohmann::json;

namespace {

struct MergeArgs {
  std::string tracklets, selection, output;
  double gamma = 0.5, min_overlap = 0.5, cyclist_distance = 1.0;
  bool cyclists = false;
};

int run_merge(const MergeArgs& a) {
  tmine::MergeConfig cfg{a.gamma, a.min_overlap};
  auto tracklets = tmine::read_tracklets(a.tracklets);
  auto selection = tmine::read_selection(a.selection);
  auto tracks = tmine::merge_collection(tracklets, selection, cfg);
  if (a.cyclists) tracks = tmine::merge_cyclists(tracks, a.cyclist_distance);
  tmine::write_file_atomic(a.output, tmine::tracks_to_jsonl(tracks.tracks));
  std::cout << tracklets.size() << " tracklets, " << selection.frames.size() << " frames -> " << tracks.tracks.size()
            << " tracks\n";
  return 0;
}

struct TrainArgs {
  std::string features, labels, output, arch = "affine";
  std::size_t hidden = 64, out_dim = 128, classes = 16, per_class = 4;
  std::uint64_t samples = 5'000'000, seed = 0;
  double lr = 1e-5;
};

int run_embed_train(const TrainArgs& a) {
  const auto set = tmine::read_embeddings(a.features);
  std::unordered_map<std::string, std::string> label_of;
  for (const auto& [id, label] : tmine::read_labels_csv(a.labels)) label_of[id] = label;
  std::map<std::string, int> class_ids;
  tmine::LabeledSamples data;
  data.dim = set.dim;
  for (const auto& r : set.records) {
    auto it = label_of.find(r.key);
    if (it == label_of.end()) continue;
    const int c = class_ids.try_emplace(it->second, static_cast<int>(class_ids.size())).first->second;
    data.features.insert(data.features.end(), r.vector.begin(), r.vector.end());
    data.labels.push_back(c);
  }
  tmine::TrainConfig cfg;
  if (a.arch == "affine") {
    cfg.architecture = tmine::Architecture::Affine;
  } else if (a.arch == "hidden_tanh") {
    cfg.architecture = tmine::Architecture::HiddenTanh;
  } else {
    throw tmine::Error(tmine::ErrorKind::Usage, "unknown architecture '" + a.arch + "'");
  }
  cfg.hidden_dim = a.hidden;
  cfg.output_dim = a.out_dim;
  cfg.classes_per_batch = a.classes;
  cfg.samples_per_class = a.per_class;
  cfg.total_samples = a.samples;
  cfg.initial_lr = a.lr;
  tmine::TrainLog log;
  const auto seed = tmine::resolve_seed(a.seed);
  const auto model = tmine::train_embedding(data, cfg, seed, &log);
  tmine::write_file_atomic(a.output, tmine::to_json(model).dump() + "\n");
  std::cout << log.steps << " steps over " << data.size() << " samples, seed " << seed;
  if (!log.batch_losses.empty()) std::cout << ", last batch loss " << log.batch_losses.back();
  std::cout << "\n";
  return 0;
}

struct ApplyArgs {
  std::string model, input, output;
  bool normalize = false, csv = false;
};

int run_embed_apply(const ApplyArgs& a) {
  const auto model = tmine::model_from_json(json::parse(tmine::read_file(a.model)));
  const auto in = tmine::read_embeddings(a.input);
  if (in.dim != model.input_dim()) {
    throw tmine::Error(tmine::ErrorKind::SizeMismatch, "model expects " + std::to_string(model.input_dim()) +
                                                     "-d input, file has " + std::to_string(in.dim));
  }
  tmine::EmbeddingSet out;
  out.dim = model.output_dim();
  for (const auto& r : in.records) {
    auto v = model.apply(r.vector);
    if (a.normalize) v = tmine::l2_normalize(v);
    out.records.push_back({r.key, std::move(v)});
  }
  tmine::write_file_atomic(a.output, a.csv ? tmine::encode_embeddings_csv(out) : tmine::encode_embeddings_binary(out));
  return 0;
}

struct RepresentArgs {
  std::string tracks, crops, model, output;
};

int run_represent(const RepresentArgs& a) {
  const auto tracks = tmine::read_tracks(a.tracks);
  const auto crops = tmine::read_embeddings(a.crops);
  std::optional<tmine::EmbeddingModel> model;
  if (!a.model.empty()) model = tmine::model_from_json(json::parse(tmine::read_file(a.model)));
  const auto out = tmine::represent_tracks(tracks, crops, model ? &*model : nullptr);
  tmine::write_file_atomic(a.output, tmine::encode_embeddings_binary(out));
  return 0;
}

struct ClusterArgs {
  std::string input, output, selection = "eom";
  std::size_t min_size = 14, min_samples = 0;
};

int run_cluster(const ClusterArgs& a) {
  const auto set = tmine::read_embeddings(a.input);
  tmine::PointSet points;
  points.dim = set.dim;
  std::vector<std::string> ids;
  for (const auto& r : set.records) {
    points.coords.insert(points.coords.end(), r.vector.begin(), r.vector.end());
    ids.push_back(r.key);
  }
  tmine::HdbscanConfig cfg;
  cfg.min_size = a.min_size;
  cfg.min_samples = a.min_samples;
  if (a.selection == "leaf") {
    cfg.selection = tmine::ClusterSelection::Leaf;
  } else if (a.selection != "eom") {
    throw tmine::Error(tmine::ErrorKind::Usage, "selection must be eom or leaf");
  }
  const auto result = tmine::hdbscan(points, cfg);
  tmine::write_file_atomic(a.output, tmine::assignment_to_jsonl(ids, result));
  const auto noise = std::count(result.labels.begin(), result.labels.end(), tmine::kNoise);
  std::cout << ids.size() << " points -> " << result.cluster_count << " clusters, " << noise << " noise\n";
  return 0;
}

struct EvalArgs {
  std::string pred, truth, output, fractions = "0,0.05,0.1,0.2,0.3", normalizer = "arithmetic";
  bool include_noise = false, flat = false;
};

int run_eval(const EvalArgs& a) {
  tmine::SweepOptions opts;
  opts.normalizer = tmine::parse_normalizer(a.normalizer);
  opts.include_noise = a.include_noise;
  const auto curve = tmine::evaluate(tmine::read_assignment(a.pred), tmine::read_labels_csv(a.truth),
                                  tmine::parse_fractions(a.fractions), opts, a.flat);
  const std::string csv = tmine::curve_to_csv(curve);
  if (a.output.empty()) {
    std::cout << csv;
  } else {
    tmine::write_file_atomic(a.output, csv);
  }
  std::cerr << "normalizer " << tmine::to_string(opts.normalizer) << "\n";
  return 0;
}

struct AnchorArgs {
  std::string scene, tracks, variant = "full", output;
  tmine::AnchorConfig cfg;
};

int run_anchors(const AnchorArgs& a) {
  std::vector<tmine::Track> tracks;
  if (!a.tracks.empty()) tracks = tmine::read_tracks(a.tracks);
  const auto frame = tmine::load_scene(a.scene, tracks);
  const auto sel = tmine::select_anchors(frame, a.cfg, tmine::parse_variant(a.variant));
  tmine::write_file_atomic(a.output, tmine::decisions_to_jsonl(sel.decisions));
  std::cout << "positive " << sel.summary.positive << ", negative " << sel.summary.negative << ", ignore "
            << sel.summary.ignore << ", excluded_far " << sel.summary.excluded_far << "\n";
  return 0;
}

struct StatsArgs {
  std::string tracklets, selection, tracks, csv, output;
  std::int64_t proposals = 100;
};

int run_stats(const StatsArgs& a) {
  const auto s = tmine::compute_stats(a.tracklets, a.selection, a.tracks, a.proposals);
  if (a.output.empty()) {
    std::cout << tmine::stats_text(s);
  } else {
    tmine::write_file_atomic(a.output, tmine::stats_text(s));
  }
  if (!a.csv.empty()) tmine::write_file_atomic(a.csv, tmine::stats_csv(s));
  return 0;
}

struct SynthArgs {
  std::string scenario, out;
  std::uint64_t seed = 1;
  tmine::HandoffSpec handoff;
  tmine::BlobsSpec blobs;
  tmine::SceneSpec scene;
  std::string classes;
  bool near_background = false;
};

int run_synth(SynthArgs a) {
  const auto seed = tmine::resolve_seed(a.seed);
  std::vector<std::filesystem::path> written;
  if (a.scenario == "handoff-tracklets") {
    a.handoff.seed = seed;
    if (!a.classes.empty()) {
      a.handoff.classes.clear();
      std::istringstream in(a.classes);
      for (std::string c; std::getline(in, c, ',');) {
        if (!c.empty()) a.handoff.classes.push_back(c);
      }
    }
    written = tmine::write_handoff(tmine::gen_handoff(a.handoff), a.out);
  } else if (a.scenario == "blobs-embeddings") {
    a.blobs.seed = seed;
    written = tmine::write_blobs(tmine::gen_blobs(a.blobs), a.out);
  } else if (a.scenario == "street-scene") {
    a.scene.seed = seed;
    a.scene.far_wall = !a.near_background;
    written = tmine::write_scene(tmine::gen_scene(a.scene), a.out);
  } else {
    throw tmine::Error(tmine::ErrorKind::Usage, "unknown scenario '" + a.scenario + "'");
  }
  for (const auto& p : written) std::cout << p.string() << "\n";
  return 0;
}

struct PipelineArgs {
  std::string config, out;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
};

int run_pipeline_cmd(const PipelineArgs& a) {
  tmine::PipelineConfig cfg = a.config.empty() ? tmine::PipelineConfig() : tmine::PipelineConfig::from_file(a.config);
  for (const auto& kv : a.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw tmine::Error(tmine::ErrorKind::Usage, "--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!a.out.empty()) cfg.set("out", a.out);
  if (a.seed) cfg.set("seed", std::to_string(*a.seed));
  const auto r = tmine::run_pipeline(cfg);
  std::cout << r.tracks << " tracks, " << r.clusters << " clusters, " << r.noise << " noise";
  if (!r.curve.empty()) std::cout << ", AMI " << r.curve.front().ami;
  std::cout << "\nreport: " << (r.out_dir / "report.txt").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mine object tracks from unlabelled video and discover object categories."};
  app.require_subcommand(1);
  app.set_version_flag("--version", tmine::tool_version());
  std::size_t jobs = 0;
  app.add_option("--jobs,-j", jobs, "Worker threads (0: all cores)");

  std::function<int()> action;

  MergeArgs merge;
  auto* c_merge = app.add_subcommand("merge", "Merge selected tracklets into tracks");
  c_merge->add_option("--input,--tracklets", merge.tracklets)->required();
  c_merge->add_option("--selection", merge.selection)->required();
  c_merge->add_option("--output,-o", merge.output)->required();
  c_merge->add_option("--gamma", merge.gamma, "Mask IoU for a matching frame")->capture_default_str();
  c_merge->add_option("--min-overlap", merge.min_overlap)->capture_default_str();
  c_merge->add_flag("--cyclists", merge.cyclists, "Fuse nearby person and bicycle tracks");
  c_merge->add_option("--cyclist-distance", merge.cyclist_distance, "Metres")->capture_default_str();
  c_merge->callback([&] { action = [&] { return run_merge(merge); }; });

  TrainArgs train;
  auto* c_train = app.add_subcommand("embed-train", "Train an embedding with the batch-hard triplet loss");
  c_train->add_option("--features", train.features)->required();
  c_train->add_option("--labels", train.labels)->required();
  c_train->add_option("--output,-o", train.output)->required();
  c_train->add_option("--arch", train.arch, "affine or hidden_tanh")->capture_default_str();
  c_train->add_option("--hidden", train.hidden)->capture_default_str();
  c_train->add_option("--dim", train.out_dim, "Embedding size")->capture_default_str();
  c_train->add_option("--classes-per-batch", train.classes)->capture_default_str();
  c_train->add_option("--per-class", train.per_class)->capture_default_str();
  c_train->add_option("--samples", train.samples, "Total training samples")->capture_default_str();
  c_train->add_option("--lr", train.lr)->capture_default_str();
  c_train->add_option("--seed", train.seed)->capture_default_str();
  c_train->callback([&] { action = [&] { return run_embed_train(train); }; });

  ApplyArgs apply;
  auto* c_apply = app.add_subcommand("embed-apply", "Embed feature vectors with a trained model");
  c_apply->add_option("--model", apply.model)->required();
  c_apply->add_option("--input", apply.input)->required();
  c_apply->add_option("--output,-o", apply.output)->required();
  c_apply->add_flag("--normalize", apply.normalize, "L2-normalise the outputs");
  c_apply->add_flag("--csv", apply.csv, "Write CSV instead of binary");
  c_apply->callback([&] { action = [&] { return run_embed_apply(apply); }; });

  RepresentArgs rep;
  auto* c_rep = app.add_subcommand("represent", "Pick one representative embedding per track");
  c_rep->add_option("--tracks", rep.tracks)->required();
  c_rep->add_option("--crop-embeddings", rep.crops)->required();
  c_rep->add_option("--model", rep.model, "Apply this model to the crops first");
  c_rep->add_option("--output,-o", rep.output)->required();
  c_rep->callback([&] { action = [&] { return run_represent(rep); }; });

  ClusterArgs clus;
  auto* c_clus = app.add_subcommand("cluster", "HDBSCAN over embeddings");
  c_clus->add_option("--input", clus.input)->required();
  c_clus->add_option("--output,-o", clus.output)->required();
  c_clus->add_option("--min-size", clus.min_size)->capture_default_str();
  c_clus->add_option("--min-samples", clus.min_samples, "Default: min-size");
  c_clus->add_option("--selection", clus.selection, "eom or leaf")->capture_default_str();
  c_clus->callback([&] { action = [&] { return run_cluster(clus); }; });

  EvalArgs ev;
  auto* c_eval = app.add_subcommand("eval", "AMI, homogeneity and completeness over an outlier sweep");
  c_eval->add_option("--pred", ev.pred)->required();
  c_eval->add_option("--truth", ev.truth, "id,label CSV")->required();
  c_eval->add_option("--fractions", ev.fractions)->capture_default_str();
  c_eval->add_option("--normalizer", ev.normalizer, "arithmetic, max, min or sqrt")->capture_default_str();
  c_eval->add_option("--output,-o", ev.output, "curve.csv (default: stdout)");
  c_eval->add_flag("--include-noise", ev.include_noise, "Score noise points as one more cluster");
  c_eval->add_flag("--flat", ev.flat, "Ignore outlier scores");
  c_eval->callback([&] { action = [&] { return run_eval(ev); }; });

  AnchorArgs anc;
  auto* c_anc = app.add_subcommand("anchors", "Label detector anchors from tracks, free space and depth");
  c_anc->add_option("--scene", anc.scene)->required();
  c_anc->add_option("--tracks", anc.tracks);
  c_anc->add_option("--variant", anc.variant, "full, negatives1 or negatives2")->capture_default_str();
  c_anc->add_option("--far", anc.cfg.far_distance_m, "Far range in metres")->capture_default_str();
  c_anc->add_option("--pos-iou", anc.cfg.pos_iou)->capture_default_str();
  c_anc->add_option("--neg-area", anc.cfg.neg_area_fraction)->capture_default_str();
  c_anc->add_option("--far-fraction", anc.cfg.far_pixel_fraction)->capture_default_str();
  c_anc->add_option("--unknown-iou", anc.cfg.unknown_ignore_iou)->capture_default_str();
  c_anc->add_option("--output,-o", anc.output)->required();
  c_anc->callback([&] { action = [&] { return run_anchors(anc); }; });

  StatsArgs st;
  auto* c_st = app.add_subcommand("stats", "Count what survives each mining stage");
  c_st->add_option("--tracklets", st.tracklets)->required();
  c_st->add_option("--selection", st.selection)->required();
  c_st->add_option("--tracks", st.tracks)->required();
  c_st->add_option("--proposals-per-frame", st.proposals)->capture_default_str();
  c_st->add_option("--output,-o", st.output, "Text report (default: stdout)");
  c_st->add_option("--csv", st.csv);
  c_st->callback([&] { action = [&] { return run_stats(st); }; });

  SynthArgs sy;
  auto* c_sy = app.add_subcommand("synth", "Generate synthetic data");
  c_sy->add_option("--scenario", sy.scenario, "handoff-tracklets, blobs-embeddings or street-scene")->required();
  c_sy->add_option("--seed", sy.seed)->capture_default_str();
  c_sy->add_option("--out", sy.out)->required();
  c_sy->add_option("--objects", sy.handoff.objects)->capture_default_str();
  c_sy->add_option("--tracklets-per-object", sy.handoff.tracklets_per_object)->capture_default_str();
  c_sy->add_option("--handoff-iou", sy.handoff.handoff_iou)->capture_default_str();
  c_sy->add_option("--segment-frames", sy.handoff.segment_frames)->capture_default_str();
  c_sy->add_option("--overlap-frames", sy.handoff.overlap_frames)->capture_default_str();
  c_sy->add_option("--distractors", sy.handoff.distractors_per_object)->capture_default_str();
  c_sy->add_option("--object-classes", sy.classes, "Comma-separated");
  c_sy->add_option("--crop-dim", sy.handoff.crop_dim)->capture_default_str();
  c_sy->add_option("--classes", sy.blobs.classes)->capture_default_str();
  c_sy->add_option("--per-class", sy.blobs.per_class)->capture_default_str();
  c_sy->add_option("--dim", sy.blobs.dim)->capture_default_str();
  c_sy->add_option("--separation", sy.blobs.separation, "In units of sigma")->capture_default_str();
  c_sy->add_option("--outliers", sy.blobs.outlier_fraction)->capture_default_str();
  c_sy->add_option("--anchors", sy.scene.anchors)->capture_default_str();
  c_sy->add_option("--known-objects", sy.scene.known_objects)->capture_default_str();
  c_sy->add_option("--unknown-objects", sy.scene.unknown_objects)->capture_default_str();
  c_sy->add_flag("--near-background", sy.near_background, "No far wall");
  c_sy->callback([&] { action = [&] { return run_synth(sy); }; });

  PipelineArgs pl;
  auto* c_pl = app.add_subcommand("pipeline", "merge, represent, cluster, eval and report in one run");
  c_pl->add_option("--config,-c", pl.config, "key = value file");
  c_pl->add_option("--set", pl.overrides, "key=value, overrides the file")->take_all();
  c_pl->add_option("--out", pl.out);
  c_pl->add_option("--seed", pl.seed);
  c_pl->callback([&] { action = [&] { return run_pipeline_cmd(pl); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    tmine::set_max_jobs(jobs);
    return action();
  } catch (const tmine::Error& e) {
    std::cerr << "trackmine: " << e.what() << "\n";
    return tmine::exit_code_for(e.kind());
  } catch (const json::exception& e) {
    std::cerr << "trackmine: Parse: " << e.what() << "\n";
    return 3;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "trackmine: Io: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "trackmine: internal error: " << e.what() << "\n";
    return 4;
  }
}
