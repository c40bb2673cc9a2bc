#include "neurowave/pipeline.hpp"

#include "neurowave/error.hpp"
#include "neurowave/io.hpp"
#include "neurowave/signal.hpp"

#include "json.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cstdio>

namespace neurowave {
namespace {

using json = nlohmann::json;

// Strict view of one JSON object: every key must be consumed before finish().
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw InputError("'" + (path_.empty() ? std::string("config") : path_) + "' must be an object");
  }

  template <class T>
  void get(const char* key, T& dst) {
    if (!j_.contains(key)) return;
    seen_.insert(key);
    try {
      dst = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw InputError("bad value for '" + dotted(key) + "': " + j_.at(key).dump());
    }
  }

  // Parses a string-valued key with `convert`.
  template <class T, class F>
  void get_enum(const char* key, T& dst, F&& convert) {
    std::string s;
    get(key, s);
    if (!j_.contains(key)) return;
    try {
      dst = convert(s);
    } catch (const InputError& e) {
      throw InputError("bad value for '" + dotted(key) + "': " + e.what());
    }
  }

  template <class F>
  void object(const char* key, F&& fn) {
    if (!j_.contains(key)) return;
    seen_.insert(key);
    Reader child(j_.at(key), dotted(key));
    fn(child);
    child.finish();
  }

  bool has(const char* key) const { return j_.contains(key); }
  bool is_null(const char* key) const { return j_.contains(key) && j_.at(key).is_null(); }
  void mark(const char* key) { seen_.insert(key); }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!seen_.count(item.key())) throw InputError("unknown key '" + dotted(item.key()) + "'");
    }
  }

  std::string dotted(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

json parse_document(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed config: ") + e.what());
  }
}

void read_version(Reader& r, int& version) {
  if (!r.has("version")) throw InputError("config is missing the mandatory 'version' key");
  r.get("version", version);
  if (version != kConfigVersion) throw InputError("unsupported config version " + std::to_string(version));
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

template <class F>
auto run_stage(const std::string& name, F&& f) {
  spdlog::debug("stage {}", name);
  try {
    return f();
  } catch (const ConvergenceError& e) {
    throw ConvergenceError("stage '" + name + "': " + e.detail(), e.iterations());
  } catch (const NumericalError& e) {
    throw NumericalError("stage '" + name + "': " + e.what());
  } catch (const DataError& e) {
    throw DataError("stage '" + name + "': " + e.what());
  } catch (const InputError& e) {
    throw InputError("stage '" + name + "': " + e.what());
  }
}

std::string format_fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

json band_json(const BandSignature& b) {
  return {{"center_hz", b.center_hz}, {"bandwidth_hz", b.bandwidth_hz}, {"amplitude_uv", b.amplitude_uv}};
}

void read_band(Reader& r, BandSignature& b) {
  r.get("center_hz", b.center_hz);
  r.get("bandwidth_hz", b.bandwidth_hz);
  r.get("amplitude_uv", b.amplitude_uv);
}

}  // namespace

std::string_view to_string(SplitKind k) { return k == SplitKind::random ? "random" : "ordered"; }

SplitKind split_kind_from_string(std::string_view s) {
  if (s == "random") return SplitKind::random;
  if (s == "ordered") return SplitKind::ordered;
  throw InputError("unknown split '" + std::string(s) + "' (expected random or ordered)");
}

void PipelineConfig::override_seed(std::uint64_t seed) {
  ica.seed = seed;
  model.seed = seed;
  train.seed = seed;
  split.seed = seed;
}

PipelineConfig pipeline_config_from_json(const std::string& text) {
  const json j = parse_document(text);
  PipelineConfig c;
  Reader r(j, "");
  read_version(r, c.version);
  r.object("preprocess", [&](Reader& p) {
    auto& s = c.preprocess;
    p.get("filter_low_hz", s.filter_low_hz);
    p.get("filter_high_hz", s.filter_high_hz);
    p.get("filter_order", s.filter_order);
    p.get("reference_order", s.reference_order);
    for (const auto& ref : s.reference_order) {
      if (ref != "mastoid" && ref != "average") {
        throw InputError("bad value for 'preprocess.reference_order': '" + ref + "' (expected mastoid or average)");
      }
    }
    p.get("mastoid_left", s.mastoid_left);
    p.get("mastoid_right", s.mastoid_right);
    p.get("target_rate_hz", s.target_rate_hz);
    p.get("window_s", s.window_s);
    p.get("overlap_fraction", s.overlap_fraction);
  });
  r.object("ica", [&](Reader& p) {
    auto& s = c.ica;
    p.get("enabled", s.enabled);
    p.get("components", s.components);
    p.get("seed", s.seed);
    p.get("threshold", s.threshold);
    if (p.has("remove")) {
      std::vector<std::string> names;
      p.get("remove", names);
      s.remove.clear();
      for (const auto& n : names) {
        ComponentCategory cat{};
        try {
          cat = category_from_string(n);
        } catch (const InputError& e) {
          throw InputError("bad value for 'ica.remove': " + std::string(e.what()));
        }
        if (cat == ComponentCategory::other) throw InputError("'ica.remove' may not contain 'other'");
        s.remove.insert(cat);
      }
    }
    p.get("max_iterations", s.max_iterations);
    p.get("tolerance", s.tolerance);
    p.get("max_fit_samples", s.max_fit_samples);
    p.get("add_back_residual", s.add_back_residual);
    p.object("labeler", [&](Reader& l) {
      auto& lc = s.labeler;
      l.get("mains_hz", lc.mains_hz);
      l.get("line_halfwidth_hz", lc.line_halfwidth_hz);
      l.get("line_fraction", lc.line_fraction);
      l.get("muscle_cutoff_hz", lc.muscle_cutoff_hz);
      l.get("muscle_fraction", lc.muscle_fraction);
      l.get("heartbeat_min_period_s", lc.heartbeat_min_period_s);
      l.get("heartbeat_max_period_s", lc.heartbeat_max_period_s);
      l.get("heartbeat_prominence", lc.heartbeat_prominence);
      l.get("channel_concentration", lc.channel_concentration);
      l.get("eyes_closed", lc.eyes_closed);
      l.get("eye_cutoff_hz", lc.eye_cutoff_hz);
      l.get("eye_fraction", lc.eye_fraction);
      l.get("brain_slope_min", lc.brain_slope_min);
      l.get("brain_slope_max", lc.brain_slope_max);
      l.get("slope_fit_low_hz", lc.slope_fit_low_hz);
      l.get("slope_fit_high_hz", lc.slope_fit_high_hz);
    });
  });
  r.object("model", [&](Reader& p) {
    auto& m = c.model;
    p.get("embed_dim", m.embed_dim);
    p.get("heads", m.heads);
    p.get("attention_blocks", m.attention_blocks);
    p.get("ffn_dim", m.ffn_dim);
    p.get("classes", m.classes);
    p.get("dropout", m.dropout);
    p.get("seed", m.seed);
    p.get("temporal_filters", m.temporal_filters);
    p.get("temporal_kernel", m.temporal_kernel);
  });
  r.object("train", [&](Reader& p) {
    auto& t = c.train;
    p.get("lr", t.lr);
    p.get("epochs", t.epochs);
    p.get("batch_size", t.batch_size);
    p.get("seed", t.seed);
    p.get("class_weights", t.class_weights);
  });
  r.object("split", [&](Reader& p) {
    auto& s = c.split;
    p.get_enum("kind", s.kind, split_kind_from_string);
    p.get("test_fraction", s.test_fraction);
    p.get("seed", s.seed);
    p.get("drop_boundary", s.drop_boundary);
  });
  r.object("mapper", [&](Reader& p) {
    auto& m = c.mapper;
    p.get_enum("lens", m.lens.kind, lens_kind_from_string);
    p.get("lens_axis", m.lens.axis);
    p.get("intervals_per_axis", m.params.intervals_per_axis);
    p.get("overlap", m.params.overlap);
    p.get("cluster_eps", m.params.cluster_eps);
    p.get("mass_threshold", m.mass_threshold);
    p.get("purity", m.purity);
  });
  r.finish();
  return c;
}

std::string to_json(const PipelineConfig& c) {
  json j;
  j["version"] = c.version;
  const auto& p = c.preprocess;
  j["preprocess"] = {{"filter_low_hz", p.filter_low_hz},   {"filter_high_hz", p.filter_high_hz},
                     {"filter_order", p.filter_order},     {"reference_order", p.reference_order},
                     {"mastoid_left", p.mastoid_left},     {"mastoid_right", p.mastoid_right},
                     {"target_rate_hz", p.target_rate_hz}, {"window_s", p.window_s},
                     {"overlap_fraction", p.overlap_fraction}};
  const auto& i = c.ica;
  std::vector<std::string> remove;
  for (auto cat : i.remove) remove.emplace_back(to_string(cat));
  const auto& l = i.labeler;
  j["ica"] = {{"enabled", i.enabled},
              {"components", i.components},
              {"seed", i.seed},
              {"threshold", i.threshold},
              {"remove", remove},
              {"max_iterations", i.max_iterations},
              {"tolerance", i.tolerance},
              {"max_fit_samples", i.max_fit_samples},
              {"add_back_residual", i.add_back_residual},
              {"labeler",
               {{"mains_hz", l.mains_hz},
                {"line_halfwidth_hz", l.line_halfwidth_hz},
                {"line_fraction", l.line_fraction},
                {"muscle_cutoff_hz", l.muscle_cutoff_hz},
                {"muscle_fraction", l.muscle_fraction},
                {"heartbeat_min_period_s", l.heartbeat_min_period_s},
                {"heartbeat_max_period_s", l.heartbeat_max_period_s},
                {"heartbeat_prominence", l.heartbeat_prominence},
                {"channel_concentration", l.channel_concentration},
                {"eyes_closed", l.eyes_closed},
                {"eye_cutoff_hz", l.eye_cutoff_hz},
                {"eye_fraction", l.eye_fraction},
                {"brain_slope_min", l.brain_slope_min},
                {"brain_slope_max", l.brain_slope_max},
                {"slope_fit_low_hz", l.slope_fit_low_hz},
                {"slope_fit_high_hz", l.slope_fit_high_hz}}}};
  const auto& m = c.model;
  j["model"] = {{"embed_dim", m.embed_dim},
                {"heads", m.heads},
                {"attention_blocks", m.attention_blocks},
                {"ffn_dim", m.ffn_dim},
                {"classes", m.classes},
                {"dropout", m.dropout},
                {"seed", m.seed},
                {"temporal_filters", m.temporal_filters},
                {"temporal_kernel", m.temporal_kernel}};
  const auto& t = c.train;
  j["train"] = {{"lr", t.lr},
                {"epochs", t.epochs},
                {"batch_size", t.batch_size},
                {"seed", t.seed},
                {"class_weights", t.class_weights}};
  const auto& s = c.split;
  j["split"] = {{"kind", std::string(to_string(s.kind))},
                {"test_fraction", s.test_fraction},
                {"seed", s.seed},
                {"drop_boundary", s.drop_boundary}};
  const auto& mp = c.mapper;
  j["mapper"] = {{"lens", std::string(to_string(mp.lens.kind))},
                 {"lens_axis", mp.lens.axis},
                 {"intervals_per_axis", mp.params.intervals_per_axis},
                 {"overlap", mp.params.overlap},
                 {"cluster_eps", mp.params.cluster_eps},
                 {"mass_threshold", mp.mass_threshold},
                 {"purity", mp.purity}};
  return j.dump(2) + "\n";
}

std::uint64_t config_checksum(const PipelineConfig& config) { return fnv1a(to_json(config)); }

SynthConfig synth_config_from_json(const std::string& text) {
  const json j = parse_document(text);
  SynthConfig c;
  Reader r(j, "");
  read_version(r, c.version);
  r.get("channels", c.channels);
  r.get("sample_rate_hz", c.sample_rate_hz);
  r.object("session", [&](Reader& p) {
    auto& s = c.session;
    p.get("duration_s", s.duration_s);
    p.get("baseline_s", s.baseline_s);
    p.get("n_fake_segments", s.n_fake_segments);
    p.get_enum("insertion_policy", s.insertion_policy, insertion_policy_from_string);
    p.get("min_fake_words", s.min_fake_words);
    p.get("words_per_second", s.words_per_second);
    p.get("max_fake_s", s.max_fake_s);
    p.get("jitter_s", s.jitter_s);
    p.get("silence_gap_s", s.silence_gap_s);
    p.get_enum("quality", s.quality, quality_from_string);
    p.get("seed", s.seed);
  });
  r.object("signature", [&](Reader& p) {
    auto& s = c.signature;
    p.object("real", [&](Reader& b) { read_band(b, s.real_signature); });
    p.object("fake", [&](Reader& b) { read_band(b, s.fake_signature); });
    if (p.is_null("drift")) {
      p.mark("drift");
      s.drift.reset();
    } else if (p.has("drift")) {
      SignatureDrift drift;
      p.object("drift", [&](Reader& d) {
        d.get("target_center_hz", drift.target_center_hz);
        d.get("onset_fraction", drift.onset_fraction);
      });
      s.drift = drift;
    }
    p.get("background_uv", s.background_uv);
    p.get("background_burstiness", s.background_burstiness);
    p.object("line_noise", [&](Reader& b) {
      b.get("hz", s.line_noise.hz);
      b.get("amplitude_uv", s.line_noise.amplitude_uv);
    });
    p.object("muscle", [&](Reader& b) {
      b.get("rate_per_min", s.muscle.rate_per_min);
      b.get("amplitude_uv", s.muscle.amplitude_uv);
    });
    p.object("heartbeat", [&](Reader& b) {
      b.get("bpm", s.heartbeat.bpm);
      b.get("amplitude_uv", s.heartbeat.amplitude_uv);
    });
    p.get("drift_uv", s.drift_uv);
  });
  r.finish();
  if (c.channels < 2) throw InputError("bad value for 'channels': need at least 2");
  c.signature.validate(c.sample_rate_hz);
  return c;
}

std::string to_json(const SynthConfig& c) {
  json j;
  j["version"] = c.version;
  j["channels"] = c.channels;
  j["sample_rate_hz"] = c.sample_rate_hz;
  const auto& s = c.session;
  j["session"] = {{"duration_s", s.duration_s},
                  {"baseline_s", s.baseline_s},
                  {"n_fake_segments", s.n_fake_segments},
                  {"insertion_policy", std::string(to_string(s.insertion_policy))},
                  {"min_fake_words", s.min_fake_words},
                  {"words_per_second", s.words_per_second},
                  {"max_fake_s", s.max_fake_s},
                  {"jitter_s", s.jitter_s},
                  {"silence_gap_s", s.silence_gap_s},
                  {"quality", std::string(to_string(s.quality))},
                  {"seed", s.seed}};
  const auto& g = c.signature;
  json sig;
  sig["real"] = band_json(g.real_signature);
  sig["fake"] = band_json(g.fake_signature);
  sig["drift"] = g.drift ? json{{"target_center_hz", g.drift->target_center_hz},
                                {"onset_fraction", g.drift->onset_fraction}}
                         : json(nullptr);
  sig["background_uv"] = g.background_uv;
  sig["background_burstiness"] = g.background_burstiness;
  sig["line_noise"] = {{"hz", g.line_noise.hz}, {"amplitude_uv", g.line_noise.amplitude_uv}};
  sig["muscle"] = {{"rate_per_min", g.muscle.rate_per_min}, {"amplitude_uv", g.muscle.amplitude_uv}};
  sig["heartbeat"] = {{"bpm", g.heartbeat.bpm}, {"amplitude_uv", g.heartbeat.amplitude_uv}};
  sig["drift_uv"] = g.drift_uv;
  j["signature"] = sig;
  return j.dump(2) + "\n";
}

SynthOutput synthesize(const SynthConfig& config) {
  SynthOutput out;
  out.track = gen_schedule(config.session);
  out.recording = gen_recording(out.track, config.signature, config.channels, config.sample_rate_hz,
                                mix_seed(config.session.seed, 1));
  return out;
}

PreprocessOutput preprocess(const PipelineConfig& config, const Recording& input, const LabelTrack& track,
                            bool skip_ica) {
  const auto& pc = config.preprocess;
  PreprocessOutput out;
  Recording rec = run_stage("baseline", [&] { return baseline_correct(input, track); });
  out.stages.emplace_back("baseline");

  rec = run_stage("bandpass", [&] {
    BandpassOptions opts;
    opts.order = pc.filter_order;
    return bandpass_filter(rec, pc.filter_low_hz, pc.filter_high_hz, opts);
  });
  out.stages.emplace_back("bandpass");

  for (const auto& ref : pc.reference_order) {
    const std::string name = "reference-" + ref;
    rec = run_stage(name, [&] {
      return ref == "mastoid" ? rereference_mastoid(rec, pc.mastoid_left, pc.mastoid_right)
                              : rereference_common_average(rec);
    });
    out.stages.push_back(name);
  }

  if (config.ica.enabled && !skip_ica) {
    rec = run_stage("ica", [&] {
      const auto& ic = config.ica;
      if (ic.components < 1) throw InputError("ICA needs at least one component");
      // Each re-reference removes one dimension from the data.
      const std::size_t refs = std::min(pc.reference_order.size(), rec.channels() - 1);
      const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(ic.components), rec.channels() - refs);
      IcaOptions opts;
      opts.tolerance = ic.tolerance;
      opts.max_iterations = ic.max_iterations;
      opts.max_fit_samples = ic.max_fit_samples;
      IcaModel model = label_components(fit_ica(rec, k, ic.seed, opts), rec, ic.labeler);
      out.ica_features = component_features(model, rec, ic.labeler);
      out.removed_components = components_to_remove(model, ic.remove, ic.threshold);
      spdlog::info("ica: {} components, {} iterations, removing {}", k, model.iterations,
                   out.removed_components.size());
      ReconstructOptions ropts;
      ropts.add_back_residual = ic.add_back_residual;
      Recording cleaned = remove_and_reconstruct(model, rec, ic.remove, ic.threshold, ropts);
      out.ica = std::move(model);
      return cleaned;
    });
    out.stages.emplace_back("ica");
  }

  if (rec.sample_rate_hz != pc.target_rate_hz) {
    rec = run_stage("resample", [&] { return resample(rec, pc.target_rate_hz); });
    out.stages.emplace_back("resample");
  }

  EpochSet set = run_stage("segment", [&] { return segment(rec, pc.window_s, pc.overlap_fraction); });
  out.stages.emplace_back("segment");
  out.epochs = run_stage("label", [&] { return label_epochs(set, track); });
  out.stages.emplace_back("label");
  return out;
}

TrainEvalOutput train_eval(const PipelineConfig& config, const EpochSet& epochs, SplitKind kind,
                           const TrainProgress& progress) {
  if (epochs.empty()) throw DataError("epoch archive is empty");
  TrainEvalOutput out;
  const auto& sc = config.split;
  out.split = kind == SplitKind::random ? split_random(epochs, sc.test_fraction, sc.seed)
                                        : split_ordered(epochs, 1.0 - sc.test_fraction, sc.drop_boundary);
  const EpochSet train_set = epochs.subset(out.split.train_indices);
  const EpochSet test_set = epochs.subset(out.split.test_indices);

  ModelConfig mc = config.model;
  mc.L = static_cast<int>(epochs.epochs.front().window.rows());
  mc.d = static_cast<int>(epochs.epochs.front().window.cols());
  out.trained = train(mc, train_set, config.train, progress);
  out.predictions = predict(out.trained.params, test_set);

  std::vector<Label> predicted;
  for (const auto& p : out.predictions) predicted.push_back(p.label);
  out.metrics = compute_metrics(predicted, test_set.labels());
  const std::string title = std::string(kind == SplitKind::random ? "Random" : "Ordered") +
                            " train/test split (train " + std::to_string(train_set.size()) + ", test " +
                            std::to_string(test_set.size()) + ")";
  out.table = format_metrics_table(out.metrics, title);
  return out;
}

MapperOutput run_mapper(const PipelineConfig& config, const std::vector<PointCloud>& clouds) {
  if (clouds.empty()) throw InputError("mapper needs at least one point cloud");
  const auto& mc = config.mapper;
  MapperOutput out;
  out.report = "Mapper report (config " + io::hex64(config_checksum(config)) + ")\n";
  out.report += "lens=" + describe(mc.lens) + " intervals=" + std::to_string(mc.params.intervals_per_axis) +
                " overlap=" + format_fixed(mc.params.overlap, 2) + " eps=" + format_fixed(mc.params.cluster_eps, 3) +
                " mass_threshold=" + format_fixed(mc.mass_threshold, 3) + "\n\n";
  for (std::size_t i = 0; i < clouds.size(); ++i) {
    const PointCloud& cloud = clouds[i];
    MapperGraph full = build_mapper(cloud, lens(cloud, mc.lens), mc.params);
    full.lens_spec = describe(mc.lens);
    MapperGraph graph = hdr_filter(full, mc.mass_threshold);
    const double purity = purity_score(graph, mc.purity);
    out.report += "cloud " + std::to_string(i) + " (" + cloud.source + "): points=" + std::to_string(cloud.size()) +
                  " nodes=" + std::to_string(full.nodes.size()) + " hdr_nodes=" + std::to_string(graph.nodes.size()) +
                  " edges=" + std::to_string(graph.edges.size()) + " purity=" + format_fixed(purity, 3) + "\n";
    out.graphs.push_back(std::move(graph));
    out.purity.push_back(purity);
  }
  if (clouds.size() == 2) {
    out.report += "\nSeparation comparison\n";
    const bool first = out.purity[0] > out.purity[1];
    const bool tie = out.purity[0] == out.purity[1];
    out.report += clouds[0].source + " purity " + format_fixed(out.purity[0], 3) + " vs " + clouds[1].source +
                  " purity " + format_fixed(out.purity[1], 3) + ": " +
                  (tie ? std::string("no separation difference")
                       : (first ? clouds[0].source : clouds[1].source) + " separates classes better") +
                  "\n";
  }
  return out;
}

std::vector<fs::path> cmd_synth(const SynthConfig& config, const fs::path& out_dir) {
  const SynthOutput s = synthesize(config);
  const fs::path rec = out_dir / "recording.json";
  const fs::path track = out_dir / "track.json";
  io::save_recording(s.recording, rec);
  io::save_label_track(s.track, track);
  return {rec, fs::path(rec).replace_extension(".bin"), track};
}

std::vector<fs::path> cmd_preprocess(const PipelineConfig& config, const fs::path& recording, const fs::path& track,
                                     const fs::path& out_dir, bool skip_ica) {
  const LabelTrack t = io::load_label_track(track);
  const Recording rec = io::load_recording(recording);
  const PreprocessOutput out = preprocess(config, rec, t, skip_ica);

  std::vector<fs::path> written;
  const fs::path epochs = out_dir / "epochs.json";
  io::save_epoch_set(out.epochs, epochs);
  written.push_back(epochs);
  written.push_back(fs::path(epochs).replace_extension(".bin"));

  std::size_t fake = 0;
  for (const auto& e : out.epochs.epochs) fake += e.label == Label::fake ? 1 : 0;
  std::string report = "config " + io::hex64(config_checksum(config)) + "\nstages";
  for (const auto& s : out.stages) report += " " + s;
  report += "\nepochs " + std::to_string(out.epochs.size()) + " real " + std::to_string(out.epochs.size() - fake) +
            " fake " + std::to_string(fake) + "\n";
  if (out.ica) {
    report += "ica components " + std::to_string(out.ica->components()) + " iterations " +
              std::to_string(out.ica->iterations) + " removed";
    for (auto k : out.removed_components) report += " " + std::to_string(k);
    report += "\n";
    const fs::path comp = out_dir / "ica_components.txt";
    io::write_text(comp, io::component_report(*out.ica, out.ica_features));
    const fs::path model = out_dir / "ica_model.json";
    io::save_ica_model(*out.ica, model);
    written.insert(written.end(), {comp, model, fs::path(model).replace_extension(".bin")});
  }
  const fs::path stages = out_dir / "preprocess_report.txt";
  io::write_text(stages, report);
  written.push_back(stages);
  return written;
}

std::vector<fs::path> cmd_train_eval(const PipelineConfig& config, const fs::path& epochs, SplitKind kind,
                                     const fs::path& out_dir) {
  const EpochSet set = io::load_epoch_set(epochs);
  const TrainEvalOutput out = train_eval(config, set, kind, [](int epoch, double loss, double acc) {
    spdlog::info("epoch {} loss {:.4f} train accuracy {:.3f}", epoch + 1, loss, acc);
  });

  const fs::path table = out_dir / "metrics.txt";
  io::write_text(table, out.table + "\nconfig " + io::hex64(config_checksum(config)) + "\nparams " +
                            io::hex64(out.trained.report.checksum) + "\n");
  json j;
  j["format_version"] = io::kFormatVersion;
  j["split"] = std::string(to_string(kind));
  j["config_checksum"] = io::hex64(config_checksum(config));
  j["train_size"] = out.split.train_indices.size();
  j["test_size"] = out.split.test_indices.size();
  for (const auto& m : out.metrics) {
    j["classes"][std::string(to_string(m.label))] = {{"precision", m.precision},
                                                     {"recall", m.recall},
                                                     {"f1", m.f1},
                                                     {"support", m.support},
                                                     {"tp", m.counts.tp},
                                                     {"fp", m.counts.fp},
                                                     {"fn", m.counts.fn},
                                                     {"tn", m.counts.tn},
                                                     {"undefined", m.undefined}};
  }
  const fs::path metrics = out_dir / "metrics.json";
  io::write_text(metrics, j.dump(1) + "\n");
  const fs::path params = out_dir / "params.json";
  io::save_params(out.trained.params, params);
  const fs::path report = out_dir / "train_report.json";
  io::write_text(report, io::train_report_json(out.trained.report));
  return {table, metrics, params, fs::path(params).replace_extension(".bin"), report};
}

std::vector<fs::path> cmd_mapper(const PipelineConfig& config, const std::vector<fs::path>& clouds,
                                 const fs::path& out_dir) {
  std::vector<PointCloud> loaded;
  for (const auto& c : clouds) loaded.push_back(io::load_point_cloud(c));
  const MapperOutput out = run_mapper(config, loaded);
  std::vector<fs::path> written;
  for (std::size_t i = 0; i < out.graphs.size(); ++i) {
    const fs::path dot = out_dir / ("graph_" + std::to_string(i) + ".dot");
    const fs::path js = out_dir / ("graph_" + std::to_string(i) + ".json");
    io::write_text(dot, export_graph(out.graphs[i], GraphFormat::dot));
    io::write_text(js, export_graph(out.graphs[i], GraphFormat::json));
    written.insert(written.end(), {dot, js});
  }
  const fs::path report = out_dir / "mapper_report.txt";
  io::write_text(report, out.report);
  written.push_back(report);
  return written;
}

}  // namespace neurowave
