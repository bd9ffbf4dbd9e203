#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>
#include <vector>

#include "declip/aspade.hpp"
#include "declip/corpus.hpp"
#include "declip/errors.hpp"
#include "declip/metrics.hpp"
#include "declip/model.hpp"
#include "declip/signal.hpp"
#include "declip/stft.hpp"

namespace py = pybind11;
using namespace declip;

namespace {

std::vector<double> to_vec(const py::array_t<double, py::array::c_style |
                                                         py::array::forcecast>& a) {
  if (a.ndim() != 1) throw InvalidArgument("expected a 1-D float array");
  return std::vector<double>(a.data(), a.data() + a.shape(0));
}

py::array_t<double> to_array(const std::vector<double>& v) {
  py::array_t<double> out(static_cast<py::ssize_t>(v.size()));
  std::memcpy(out.mutable_data(), v.data(), v.size() * sizeof(double));
  return out;
}

ClipMask mask_from_array(const py::array_t<std::uint8_t>& a) {
  if (a.ndim() != 1) throw InvalidArgument("expected a 1-D uint8 mask");
  ClipMask m;
  m.labels.resize(static_cast<std::size_t>(a.shape(0)));
  auto r = a.unchecked<1>();
  for (py::ssize_t i = 0; i < a.shape(0); ++i) {
    if (r(i) > 2) throw InvalidArgument("mask labels must be 0, 1 or 2");
    m.labels[static_cast<std::size_t>(i)] = static_cast<SampleLabel>(r(i));
  }
  return m;
}

py::array_t<std::uint8_t> mask_to_array(const ClipMask& m) {
  py::array_t<std::uint8_t> out(static_cast<py::ssize_t>(m.size()));
  auto w = out.mutable_unchecked<1>();
  for (std::size_t i = 0; i < m.size(); ++i)
    w(static_cast<py::ssize_t>(i)) = static_cast<std::uint8_t>(m.labels[i]);
  return out;
}

StftConfig make_cfg(int fft, int win, int hop) {
  StftConfig cfg;
  cfg.fft_size = fft;
  cfg.win_length = win > 0 ? win : fft;
  cfg.hop = hop;
  return cfg;
}

py::array_t<double> spec_to_array(const ComplexSpectrogram& s) {
  py::array_t<double> out({2, s.bins, s.frames});
  double* d = out.mutable_data();
  std::memcpy(d, s.re.data(), s.re.size() * sizeof(double));
  std::memcpy(d + s.re.size(), s.im.data(), s.im.size() * sizeof(double));
  return out;
}

py::dict loss_to_dict(const LossBreakdown& l) {
  py::dict d;
  d["total"] = l.total;
  d["wave_l1"] = l.wave_l1;
  py::list terms;
  for (const ResolutionTerms& t : l.spectral) {
    py::dict e;
    e["fft_size"] = t.fft_size;
    e["sc"] = t.sc;
    e["mag"] = t.mag;
    terms.append(e);
  }
  d["spectral"] = terms;
  return d;
}

}  // namespace

PYBIND11_MODULE(_declip, m) {
  m.doc() = "speech declipping toolkit";

  py::register_exception<InvalidArgument>(m, "InvalidArgumentError",
                                          PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_IOError);
  py::register_exception<NumericalError>(m, "NumericalError",
                                         PyExc_ArithmeticError);

  m.def(
      "clip",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> x,
         double theta) {
        Waveform w;
        w.samples = to_vec(x);
        w.sample_rate = 1;
        ClipResult r = declip::clip(w, theta);
        return py::make_tuple(to_array(r.clipped.samples),
                              mask_to_array(r.mask), r.theta);
      },
      py::arg("x"), py::arg("theta"),
      "Hard-clip to +/-theta; returns (clipped, mask, theta).");

  m.def(
      "find_threshold",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> x,
         double target_sdr_db, double tol_db, int max_iters) {
        Waveform w;
        w.samples = to_vec(x);
        w.sample_rate = 1;
        return declip::find_threshold(w, target_sdr_db, tol_db, max_iters);
      },
      py::arg("x"), py::arg("target_sdr_db"), py::arg("tol_db") = 0.01,
      py::arg("max_iters") = 100);

  m.def(
      "sdr",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> ref,
         py::array_t<double, py::array::c_style | py::array::forcecast> est) {
        const auto r = to_vec(ref);
        const auto e = to_vec(est);
        return declip::sdr(r, e);
      },
      py::arg("ref"), py::arg("est"));

  m.def(
      "sdr_clipped",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> ref,
         py::array_t<double, py::array::c_style | py::array::forcecast> est,
         py::array_t<std::uint8_t> mask) {
        const auto r = to_vec(ref);
        const auto e = to_vec(est);
        return declip::sdr_clipped(r, e, mask_from_array(mask));
      },
      py::arg("ref"), py::arg("est"), py::arg("mask"));

  m.def(
      "stft",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> x,
         int fft_size, int win_length, int hop) {
        return spec_to_array(declip::stft(to_vec(x),
                                          make_cfg(fft_size, win_length, hop)));
      },
      py::arg("x"), py::arg("fft_size") = 512, py::arg("win_length") = 0,
      py::arg("hop") = 128, "One-sided complex spectrogram, [2, bins, frames].");

  m.def(
      "istft",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> spec,
         int out_len, int fft_size, int win_length, int hop) {
        if (spec.ndim() != 3 || spec.shape(0) != 2)
          throw InvalidArgument("expected a [2, bins, frames] array");
        ComplexSpectrogram s;
        s.config = make_cfg(fft_size, win_length, hop);
        s.bins = static_cast<int>(spec.shape(1));
        s.frames = static_cast<int>(spec.shape(2));
        const std::size_t plane =
            static_cast<std::size_t>(s.bins) * static_cast<std::size_t>(s.frames);
        s.re.assign(spec.data(), spec.data() + plane);
        s.im.assign(spec.data() + plane, spec.data() + 2 * plane);
        return to_array(declip::istft(s, out_len));
      },
      py::arg("spec"), py::arg("out_len"), py::arg("fft_size") = 512,
      py::arg("win_length") = 0, py::arg("hop") = 128);

  m.def(
      "total_loss",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> ref,
         py::array_t<double, py::array::c_style | py::array::forcecast> est) {
        const auto r = to_vec(ref);
        const auto e = to_vec(est);
        return loss_to_dict(declip::total_loss(r, e));
      },
      py::arg("ref"), py::arg("est"));

  m.def(
      "declip_aspade",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> y,
         py::array_t<std::uint8_t> mask, int max_iters, double tol) {
        Waveform w;
        w.samples = to_vec(y);
        w.sample_rate = 1;
        SpadeParams p;
        p.max_iters = max_iters;
        p.tol = tol;
        SpadeResult r = declip::declip_aspade(w, mask_from_array(mask), p);
        py::dict report;
        report["total_frames"] = r.report.total_frames;
        report["processed_frames"] = r.report.processed_frames;
        report["non_converged_frames"] = r.report.non_converged_frames;
        return py::make_tuple(to_array(r.output.samples), report);
      },
      py::arg("y"), py::arg("mask"), py::arg("max_iters") = 500,
      py::arg("tol") = 0.1);

  m.def(
      "synth_clip",
      [](int n_samples, int sample_rate, std::uint64_t seed) {
        Rng rng(seed);
        return to_array(declip::synth_clip(n_samples, sample_rate, rng).samples);
      },
      py::arg("n_samples"), py::arg("sample_rate") = 16000, py::arg("seed") = 0);

  py::class_<DeclipModel>(m, "Model")
      .def_static("load", &DeclipModel::load, py::arg("path"))
      .def_static(
          "create",
          [](std::uint64_t seed, int channels, int blocks, int heads,
             int groups, int fft_size, int hop, int sample_rate) {
            declip::ModelConfig cfg;
            cfg.channels = channels;
            cfg.n_blocks = blocks;
            cfg.n_heads = heads;
            cfg.sdb_groups = groups;
            cfg.stft = declip::StftConfig{fft_size, fft_size, hop, true};
            cfg.tgram = declip::tgram_for(cfg.stft);
            cfg.sample_rate = sample_rate;
            Rng rng(seed);
            return DeclipModel(cfg, rng);
          },
          py::arg("seed") = 0, py::arg("channels") = 16,
          py::arg("blocks") = 2, py::arg("heads") = 4, py::arg("groups") = 4,
          py::arg("fft_size") = 512, py::arg("hop") = 128,
          py::arg("sample_rate") = 16000,
          "Freshly initialized model (mainly for experiments and tests).")
      .def_property_readonly(
          "sample_rate",
          [](const DeclipModel& mdl) { return mdl.config().sample_rate; })
      .def_property_readonly("parameter_count", &DeclipModel::parameter_count)
      .def(
          "declip",
          [](const DeclipModel& mdl,
             py::array_t<double, py::array::c_style | py::array::forcecast> y,
             int sample_rate) {
            Waveform w;
            w.samples = to_vec(y);
            w.sample_rate = sample_rate > 0 ? sample_rate
                                            : mdl.config().sample_rate;
            return to_array(mdl.declip(w).samples);
          },
          py::arg("y"), py::arg("sample_rate") = 0)
      .def("save", &DeclipModel::save, py::arg("path"));
}
