// Python bindings for the core pipeline. Configs cross the boundary as JSON
// text in the same format the command-line tool reads, and matrices as NumPy
// arrays.

#include "neurowave/classifier.hpp"
#include "neurowave/error.hpp"
#include "neurowave/evaluation.hpp"
#include "neurowave/ica.hpp"
#include "neurowave/mapper.hpp"
#include "neurowave/pipeline.hpp"
#include "neurowave/signal.hpp"
#include "neurowave/spectral.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

namespace py = pybind11;
using namespace neurowave;

namespace {

py::dict metrics_dict(const ClassMetrics& m) {
  py::dict d;
  d["label"] = std::string(m.label == Label::fake ? "fake" : "real");
  d["precision"] = m.precision;
  d["recall"] = m.recall;
  d["f1"] = m.f1;
  d["support"] = m.support;
  d["tp"] = m.counts.tp;
  d["fp"] = m.counts.fp;
  d["fn"] = m.counts.fn;
  d["tn"] = m.counts.tn;
  d["undefined"] = m.undefined;
  return d;
}

PointCloud make_cloud(const Eigen::MatrixXd& points, const std::vector<int>& labels, const std::string& source) {
  PointCloud c;
  c.points = points;
  for (int l : labels) {
    if (l != 0 && l != 1) throw InputError("labels must be 0 (real) or 1 (fake)");
    c.labels.push_back(static_cast<Label>(l));
  }
  c.source = source;
  c.validate();
  return c;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "EEG response pipeline: preprocessing, ICA cleaning, two-tower classifier, Mapper graphs.";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<InputError>(m, "InputError", base.ptr());
  py::register_exception<DataError>(m, "DataError", base.ptr());
  auto numerical = py::register_exception<NumericalError>(m, "NumericalError", base.ptr());
  py::register_exception<ConvergenceError>(m, "ConvergenceError", numerical.ptr());

  py::enum_<Label>(m, "Label").value("real", Label::real).value("fake", Label::fake);
  py::enum_<Tag>(m, "Tag")
      .value("real", Tag::real)
      .value("fake", Tag::fake)
      .value("silence", Tag::silence)
      .value("baseline", Tag::baseline);

  py::class_<Recording>(m, "Recording")
      .def(py::init([](const SignalMatrix& data, double rate, std::vector<std::string> names) {
             Recording r;
             r.data = data;
             r.sample_rate_hz = rate;
             r.channel_names = std::move(names);
             r.validate();
             return r;
           }),
           py::arg("data"), py::arg("sample_rate_hz"), py::arg("channel_names"))
      .def_readwrite("data", &Recording::data)
      .def_readwrite("sample_rate_hz", &Recording::sample_rate_hz)
      .def_readwrite("channel_names", &Recording::channel_names)
      .def_readwrite("start_time_s", &Recording::start_time_s)
      .def_property_readonly("channels", &Recording::channels)
      .def_property_readonly("samples", &Recording::samples);

  py::class_<Interval>(m, "Interval")
      .def_readonly("start_s", &Interval::start_s)
      .def_readonly("end_s", &Interval::end_s)
      .def_readonly("tag", &Interval::tag);
  py::class_<LabelTrack>(m, "LabelTrack").def_readonly("intervals", &LabelTrack::intervals);

  py::class_<Epoch>(m, "Epoch")
      .def_readonly("window", &Epoch::window)
      .def_readonly("label", &Epoch::label)
      .def_readonly("origin_time_s", &Epoch::origin_time_s);
  py::class_<EpochSet>(m, "EpochSet")
      .def_readonly("epochs", &EpochSet::epochs)
      .def_readonly("window_s", &EpochSet::window_s)
      .def_readonly("sample_rate_hz", &EpochSet::sample_rate_hz)
      .def_readonly("channel_names", &EpochSet::channel_names)
      .def("__len__", &EpochSet::size)
      .def("labels", [](const EpochSet& s) {
        std::vector<int> out;
        for (Label l : s.labels()) out.push_back(static_cast<int>(l));
        return out;
      });

  m.def("default_synth_config", [] { return to_json(SynthConfig{}); });
  m.def("default_pipeline_config", [] { return to_json(PipelineConfig{}); });
  m.def(
      "synthesize",
      [](const std::string& config_json) {
        SynthOutput s = synthesize(synth_config_from_json(config_json));
        return py::make_tuple(std::move(s.recording), std::move(s.track));
      },
      py::arg("config_json"), "Generate (recording, track) from a synth spec.");

  m.def("baseline_correct", &baseline_correct, py::arg("recording"), py::arg("track"));
  m.def(
      "bandpass_filter",
      [](const Recording& r, double lo, double hi, int order) {
        BandpassOptions o;
        o.order = order;
        return bandpass_filter(r, lo, hi, o);
      },
      py::arg("recording"), py::arg("low_hz"), py::arg("high_hz"), py::arg("order") = 4);
  m.def("rereference_common_average", &rereference_common_average, py::arg("recording"));
  m.def("rereference_mastoid", &rereference_mastoid, py::arg("recording"), py::arg("left"), py::arg("right"));
  m.def("resample", &resample, py::arg("recording"), py::arg("target_hz"));
  m.def("segment", &segment, py::arg("recording"), py::arg("window_s"), py::arg("overlap_fraction"));
  m.def("label_epochs", &label_epochs, py::arg("epochs"), py::arg("track"));
  m.def("segment_count", &segment_count, py::arg("n"), py::arg("length"), py::arg("hop"));

  m.def(
      "preprocess",
      [](const std::string& config_json, const Recording& r, const LabelTrack& t, bool skip_ica) {
        PreprocessOutput out = preprocess(pipeline_config_from_json(config_json), r, t, skip_ica);
        return py::make_tuple(std::move(out.epochs), out.stages);
      },
      py::arg("config_json"), py::arg("recording"), py::arg("track"), py::arg("skip_ica") = false,
      "Run the full preprocessing chain; returns (epochs, stage names).");

  py::class_<IcaModel>(m, "IcaModel")
      .def_readonly("unmixing", &IcaModel::unmixing)
      .def_readonly("mixing", &IcaModel::mixing)
      .def_readonly("mean", &IcaModel::mean)
      .def_readonly("iterations", &IcaModel::iterations)
      .def_property_readonly("labels", [](const IcaModel& model) {
        std::vector<std::string> out;
        for (const auto& s : model.scores) out.emplace_back(to_string(argmax(s)));
        return out;
      });
  m.def(
      "fit_ica",
      [](const Recording& r, std::size_t k, std::uint64_t seed, bool label) {
        IcaModel model = fit_ica(r, k, seed);
        return label ? label_components(model, r) : model;
      },
      py::arg("recording"), py::arg("k"), py::arg("seed") = 0, py::arg("label") = true);
  m.def("ica_sources", &ica_sources, py::arg("model"), py::arg("recording"));
  m.def(
      "remove_components",
      [](const IcaModel& model, const Recording& r, const std::vector<std::string>& categories, double threshold) {
        std::set<ComponentCategory> cats;
        for (const auto& c : categories) cats.insert(category_from_string(c));
        return remove_and_reconstruct(model, r, cats, threshold);
      },
      py::arg("model"), py::arg("recording"), py::arg("categories"), py::arg("threshold") = 0.5);

  m.def(
      "fft_magnitude",
      [](const Eigen::MatrixXd& window, double rate) { return fft_magnitude(window, rate).magnitudes; },
      py::arg("window"), py::arg("sample_rate_hz"), "Per-channel DFT magnitudes of an L x d window.");
  m.def(
      "band_power",
      [](const Eigen::MatrixXd& window, double rate, double lo, double hi) {
        return Eigen::VectorXd(band_power(fft_magnitude(window, rate), lo, hi));
      },
      py::arg("window"), py::arg("sample_rate_hz"), py::arg("low_hz"), py::arg("high_hz"));

  m.def(
      "split_random",
      [](std::size_t n, double test_fraction, std::uint64_t seed) {
        const Split s = split_random(n, test_fraction, seed);
        return py::make_tuple(s.train_indices, s.test_indices);
      },
      py::arg("n"), py::arg("test_fraction"), py::arg("seed"));
  m.def(
      "metrics_from_counts",
      [](const std::string& label, std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn) {
        if (label != "real" && label != "fake") throw InputError("label must be 'real' or 'fake'");
        return metrics_dict(metrics_from_counts(label == "fake" ? Label::fake : Label::real, {tp, fp, fn, tn}));
      },
      py::arg("label"), py::arg("tp"), py::arg("fp"), py::arg("fn"), py::arg("tn") = 0);
  m.def("round3", &round3);

  m.def(
      "train_eval",
      [](const std::string& config_json, const EpochSet& epochs, const std::string& split) {
        const TrainEvalOutput out =
            train_eval(pipeline_config_from_json(config_json), epochs, split_kind_from_string(split));
        py::dict d;
        d["real"] = metrics_dict(out.metrics[0]);
        d["fake"] = metrics_dict(out.metrics[1]);
        d["table"] = out.table;
        d["checksum"] = out.trained.report.checksum;
        d["epoch_loss"] = out.trained.report.epoch_loss;
        return d;
      },
      py::arg("config_json"), py::arg("epochs"), py::arg("split") = "random");

  m.def(
      "gradient_check",
      [](std::uint64_t seed) {
        ModelConfig c;
        c.L = 16;
        c.d = 2;
        c.embed_dim = 4;
        c.heads = 2;
        c.ffn_dim = 8;
        c.dropout = 0.0;
        c.temporal_filters = 2;
        c.temporal_kernel = 3;
        c.seed = seed;
        ModelParams p = init_params(c);
        std::mt19937_64 rng(seed);
        std::normal_distribution<float> normal;
        std::vector<Epoch> epochs(2);
        for (auto& e : epochs) {
          e.window.resize(c.L, c.d);
          for (Eigen::Index i = 0; i < e.window.size(); ++i) e.window.data()[i] = normal(rng);
        }
        const std::vector<const Epoch*> batch{&epochs[0], &epochs[1]};
        const std::vector<Label> y{Label::real, Label::fake};
        const std::vector<double> g = flatten(loss_and_grad(p, batch, y).grad);
        std::vector<double> flat = flatten(p);
        double worst = 0.0;
        for (std::size_t k = 0; k < flat.size(); ++k) {
          auto q = flat;
          q[k] += 1e-4;
          unflatten(p, q);
          const double up = loss_and_grad(p, batch, y).loss;
          q[k] -= 2e-4;
          unflatten(p, q);
          const double down = loss_and_grad(p, batch, y).loss;
          const double fd = (up - down) / 2e-4;
          worst = std::max(worst, std::abs(fd - g[k]) / std::max({std::abs(fd), std::abs(g[k]), 1e-8}));
        }
        return worst;
      },
      py::arg("seed") = 0, "Worst relative gap between analytic and finite-difference gradients, tiny model.");

  py::class_<MapperGraph>(m, "MapperGraph")
      .def_property_readonly("nodes",
                             [](const MapperGraph& g) {
                               py::list out;
                               for (const auto& n : g.nodes) {
                                 py::dict d;
                                 d["members"] = n.members;
                                 d["density"] = n.density;
                                 d["fake_fraction"] = n.fake_fraction;
                                 out.append(d);
                               }
                               return out;
                             })
      .def_readonly("edges", &MapperGraph::edges)
      .def_readonly("n_points", &MapperGraph::n_points)
      .def("to_dot", [](const MapperGraph& g) { return export_graph(g, GraphFormat::dot); })
      .def("to_json", [](const MapperGraph& g) { return export_graph(g, GraphFormat::json); })
      .def("purity", [](const MapperGraph& g, double p) { return purity_score(g, p); }, py::arg("purity") = 0.9);

  m.def(
      "build_mapper",
      [](const Eigen::MatrixXd& points, const std::vector<int>& labels, const std::string& lens_kind,
         int intervals, double overlap, double eps, std::size_t axis) {
        const PointCloud cloud = make_cloud(points, labels, "cloud");
        const LensSpec spec{lens_kind_from_string(lens_kind), axis};
        MapperGraph g = build_mapper(cloud, lens(cloud, spec), {intervals, overlap, eps});
        g.lens_spec = describe(spec);
        return g;
      },
      py::arg("points"), py::arg("labels"), py::arg("lens") = "pca2", py::arg("intervals") = 10,
      py::arg("overlap") = 0.3, py::arg("eps") = 0.65, py::arg("axis") = 0);
  m.def("hdr_filter", &hdr_filter, py::arg("graph"), py::arg("mass_threshold"));
  m.def(
      "synthetic_cloud",
      [](std::size_t per_class, std::size_t dim, double separation, std::uint64_t seed) {
        const PointCloud c = synthetic_cloud(per_class, dim, separation, seed, "synthetic");
        std::vector<int> labels;
        for (Label l : c.labels) labels.push_back(static_cast<int>(l));
        return py::make_tuple(c.points, labels);
      },
      py::arg("per_class"), py::arg("dim"), py::arg("separation"), py::arg("seed"));
}
