// neurowave: synthesize sessions, preprocess recordings, train and evaluate
// the classifier and build Mapper graphs.
//
// Exit codes: 0 success, 2 input/config error, 3 data error, 4 numerical
// failure. NEUROWAVE_LOG sets the log level (trace, debug, info, warn, error,
// off).

#include "neurowave/error.hpp"
#include "neurowave/io.hpp"
#include "neurowave/pipeline.hpp"

#include "CLI11.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using namespace neurowave;

namespace {

PipelineConfig load_pipeline_config(const std::string& path, const std::optional<std::uint64_t>& seed) {
  PipelineConfig config = path.empty() ? PipelineConfig{} : pipeline_config_from_json(io::read_text(path));
  if (seed) config.override_seed(*seed);
  return config;
}

void report(const std::vector<fs::path>& written) {
  for (const auto& p : written) std::cout << p.string() << "\n";
}

int run(int argc, char** argv) {
  CLI::App app{"EEG response pipeline: synth, preprocess, train-eval, mapper"};
  app.require_subcommand(1);

  std::string config_path, out, recording, track, epochs, split = "random", source = "synthetic";
  std::vector<std::string> clouds;
  std::optional<std::uint64_t> seed;
  std::optional<double> mass_threshold;
  bool skip_ica = false, synth_defaults = false;
  std::size_t per_class = 100, dim = 8;
  double separation = 4.0;

  auto* synth = app.add_subcommand("synth", "generate a synthetic recording and label track");
  synth->add_option("--config", config_path, "session/signature spec (JSON)");
  synth->add_option("--seed", seed, "overrides the session seed");
  synth->add_option("--out", out, "output directory")->required();

  auto* pre = app.add_subcommand("preprocess", "filter, re-reference, clean, resample, segment and label");
  pre->add_option("--config", config_path, "pipeline config (JSON)");
  pre->add_option("--seed", seed, "overrides every seed in the config");
  pre->add_option("--recording", recording, "recording header")->required();
  pre->add_option("--track", track, "label track")->required();
  pre->add_option("--out", out, "output directory")->required();
  pre->add_flag("--skip-ica", skip_ica, "skip ICA artifact removal");

  auto* te = app.add_subcommand("train-eval", "train the classifier and report per-class metrics");
  te->add_option("--config", config_path, "pipeline config (JSON)");
  te->add_option("--seed", seed, "overrides every seed in the config");
  te->add_option("--epochs", epochs, "epoch archive manifest")->required();
  te->add_option("--split", split, "random or ordered")->check(CLI::IsMember({"random", "ordered"}));
  te->add_option("--out", out, "output directory")->required();

  auto* mp = app.add_subcommand("mapper", "build Mapper graphs with HDR filtering");
  mp->add_option("--config", config_path, "pipeline config (JSON)");
  mp->add_option("--cloud", clouds, "point cloud header (repeatable)")->required();
  mp->add_option("--mass-threshold", mass_threshold, "HDR mass threshold in (0, 1]");
  mp->add_option("--out", out, "output directory")->required();

  auto* feat = app.add_subcommand("features", "turn an epoch archive into a band-power point cloud");
  feat->add_option("--epochs", epochs, "epoch archive manifest")->required();
  feat->add_option("--out", out, "point cloud header to write")->required();

  auto* cloud = app.add_subcommand("synth-cloud", "write a two-class Gaussian point cloud");
  cloud->add_option("--per-class", per_class, "points per class");
  cloud->add_option("--dim", dim, "dimension");
  cloud->add_option("--separation", separation, "class mean distance in standard deviations");
  cloud->add_option("--seed", seed, "random seed");
  cloud->add_option("--source", source, "source tag");
  cloud->add_option("--out", out, "point cloud header to write")->required();

  auto* defaults = app.add_subcommand("default-config", "print the default pipeline config");
  defaults->add_flag("--synth", synth_defaults, "print the default synth spec instead");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (*synth) {
    SynthConfig config = config_path.empty() ? SynthConfig{} : synth_config_from_json(io::read_text(config_path));
    if (seed) config.session.seed = *seed;
    report(cmd_synth(config, out));
  } else if (*pre) {
    if (!fs::exists(track)) throw InputError("track file not found: " + track);
    if (!fs::exists(recording)) throw InputError("recording file not found: " + recording);
    report(cmd_preprocess(load_pipeline_config(config_path, seed), recording, track, out, skip_ica));
  } else if (*te) {
    report(cmd_train_eval(load_pipeline_config(config_path, seed), epochs, split_kind_from_string(split), out));
  } else if (*mp) {
    PipelineConfig config = load_pipeline_config(config_path, std::nullopt);
    if (mass_threshold) config.mapper.mass_threshold = *mass_threshold;
    std::vector<fs::path> paths(clouds.begin(), clouds.end());
    report(cmd_mapper(config, paths, out));
  } else if (*feat) {
    io::save_point_cloud(epoch_feature_cloud(io::load_epoch_set(epochs)), out);
    std::cout << out << "\n";
  } else if (*cloud) {
    io::save_point_cloud(synthetic_cloud(per_class, dim, separation, seed.value_or(0), source), out);
    std::cout << out << "\n";
  } else if (*defaults) {
    std::cout << (synth_defaults ? to_json(SynthConfig{}) : to_json(PipelineConfig{}));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("neurowave"));
  const char* level = std::getenv("NEUROWAVE_LOG");
  spdlog::set_level(level ? spdlog::level::from_str(level) : spdlog::level::warn);
  try {
    return run(argc, argv);
  } catch (const InputError& e) {
    spdlog::error("{}", e.what());
    return 2;
  } catch (const DataError& e) {
    spdlog::error("{}", e.what());
    return 3;
  } catch (const NumericalError& e) {
    spdlog::error("{}", e.what());
    return 4;
  } catch (const std::filesystem::filesystem_error& e) {
    spdlog::error("{}", e.what());
    return 2;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
}
