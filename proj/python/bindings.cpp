#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "gradmine/analysis.hpp"
#include "gradmine/cli.hpp"
#include "gradmine/data_io.hpp"
#include "gradmine/fim.hpp"
#include "gradmine/lstm.hpp"
#include "gradmine/optimizer.hpp"
#include "gradmine/rnn.hpp"
#include "gradmine/sampling.hpp"

namespace py = pybind11;
using namespace gradmine;

namespace {

using Sample = std::pair<std::vector<std::size_t>, std::vector<std::size_t>>;

std::vector<SequenceSample> to_samples(const std::vector<Sample>& xs) {
  std::vector<SequenceSample> out;
  out.reserve(xs.size());
  for (const auto& [tokens, targets] : xs) out.push_back({tokens, targets});
  return out;
}

std::size_t vocab_of(const std::vector<SequenceSample>& xs) {
  std::size_t v = 2;
  for (const auto& s : xs) {
    for (auto t : s.tokens) v = std::max(v, t + 1);
    for (auto t : s.targets) v = std::max(v, t + 1);
  }
  return v;
}

std::vector<Vec> to_vecs(const std::vector<std::vector<double>>& rows) {
  std::vector<Vec> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.emplace_back(r);
  return out;
}

// Runs f(model, samples, params0) for "rnn" or "lstm".
template <class F>
auto with_seq_model(const std::string& model, const std::vector<SequenceSample>& data, std::size_t embed,
                    std::size_t hidden, std::uint64_t init_seed, F&& f) {
  const std::size_t v = vocab_of(data);
  if (model == "rnn") return f(rnn::Model{}, rnn::init({embed, hidden, v}, init_seed));
  if (model != "lstm") throw ConfigError("model must be 'rnn' or 'lstm'");
  std::size_t classes = 2;
  for (const auto& s : data) classes = std::max(classes, s.targets.at(0) + 1);
  return f(lstm::Model{}, lstm::init({embed, hidden, v, classes}, init_seed));
}

py::dict table_dict(const ImportanceTable& t) {
  py::dict d;
  d["norms"] = t.norms;
  d["probs"] = t.probs;
  d["iterations"] = t.iterations;
  d["converged"] = t.converged;
  d["model"] = t.model;
  d["base_selector"] = t.base_selector;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Importance-sampled SGD for recurrent models";

  auto& base_error = py::register_exception<Error>(m, "GradmineError", PyExc_ValueError);
  py::register_exception<DivergenceError>(m, "DivergenceError", base_error.ptr());

  py::class_<SamplingDistribution>(m, "SamplingDistribution")
      .def(py::init([](const std::vector<double>& p) { return SamplingDistribution(p); }), py::arg("probs"))
      .def_property_readonly("probs", &SamplingDistribution::probs)
      .def_property_readonly("alias_prob", &SamplingDistribution::alias_prob)
      .def_property_readonly("alias_idx", &SamplingDistribution::alias_idx)
      .def("reconstructed_mass", &SamplingDistribution::reconstructed_mass)
      .def(
          "sample",
          [](const SamplingDistribution& d, std::size_t n, std::uint64_t seed) {
            Rng rng(seed);
            return generate_sequence(d, n, rng);
          },
          py::arg("n"), py::arg("seed") = 0)
      .def("__len__", &SamplingDistribution::size);

  m.def(
      "importance_probs",
      [](const std::vector<double>& norms, double kappa) { return importance_probs(norms, kappa); },
      py::arg("norms"), py::arg("kappa") = 0.0);

  m.def(
      "gen_seqclass",
      [](std::size_t n, std::size_t vocab, std::size_t min_len, std::size_t max_len, double hard,
         std::uint64_t seed) {
        const auto d = io::gen_seqclass({n, vocab, min_len, max_len, hard, seed});
        std::vector<Sample> samples;
        for (const auto& s : d.samples) samples.emplace_back(s.tokens, s.targets);
        return py::make_tuple(samples, d.hard);
      },
      py::arg("n") = 200, py::arg("vocab") = 50, py::arg("min_len") = 4, py::arg("max_len") = 16,
      py::arg("hard") = 0.25, py::arg("seed") = 0,
      "Returns (samples, hard_flags); each sample is (tokens, [label]).");

  m.def(
      "mine_importance",
      [](const std::vector<Sample>& samples, const std::string& model, std::size_t embed, std::size_t hidden,
         std::uint64_t init_seed, double epsilon, double lr, std::size_t t_max, std::uint64_t seed,
         std::size_t workers, double smoothing) {
        const auto data = to_samples(samples);
        FimConfig cfg;
        cfg.epsilon = epsilon;
        cfg.lr = lr;
        cfg.t_max = t_max;
        cfg.seed = seed;
        cfg.workers = resolve_workers(workers);
        cfg.smoothing = smoothing;
        ImportanceTable t;
        {
          py::gil_scoped_release release;
          t = with_seq_model(model, data, embed, hidden, init_seed, [&](const auto& mdl, const auto& p0) {
            return mine_importance(mdl, std::span<const SequenceSample>(data), p0, cfg).table;
          });
        }
        return table_dict(t);
      },
      py::arg("samples"), py::arg("model") = "lstm", py::arg("embed") = 8, py::arg("hidden") = 16,
      py::arg("init_seed") = 0, py::arg("epsilon") = 3e-3, py::arg("lr") = 0.1, py::arg("t_max") = 5000,
      py::arg("seed") = 0, py::arg("workers") = 1, py::arg("smoothing") = 0.0);

  m.def(
      "train",
      [](const std::vector<Sample>& samples, const std::string& model, std::optional<std::vector<double>> probs,
         double lr, std::size_t epochs, std::uint64_t seed, std::size_t embed, std::size_t hidden,
         std::uint64_t init_seed) {
        const auto data = to_samples(samples);
        TrainConfig cfg;
        cfg.lr = lr;
        cfg.epochs = epochs;
        cfg.seed = seed;
        if (probs) {
          cfg.sampler = SamplerKind::importance;
          cfg.importance_probs = *probs;
        }
        MetricsLog log;
        {
          py::gil_scoped_release release;
          log = with_seq_model(model, data, embed, hidden, init_seed, [&](const auto& mdl, const auto& p0) {
            return train(mdl, std::span<const SequenceSample>(data), p0, cfg).log;
          });
        }
        py::dict d;
        d["loss"] = log.losses();
        std::vector<double> err, gv;
        for (const auto& r : log.records) {
          err.push_back(r.error_rate);
          gv.push_back(r.grad_var);
        }
        d["error_rate"] = err;
        d["grad_var"] = gv;
        return d;
      },
      py::arg("samples"), py::arg("model") = "lstm", py::arg("probs") = py::none(), py::arg("lr") = 0.1,
      py::arg("epochs") = 10, py::arg("seed") = 0, py::arg("embed") = 8, py::arg("hidden") = 16,
      py::arg("init_seed") = 0, "Per-epoch training metrics; pass probs for importance sampling.");

  m.def(
      "gradient_variance",
      [](const std::vector<std::vector<double>>& grads, const std::vector<double>& probs) {
        return analysis::gradient_variance(to_vecs(grads), probs);
      },
      py::arg("grads"), py::arg("probs"));
  m.def(
      "optimal_distribution",
      [](const std::vector<std::vector<double>>& grads) { return analysis::optimal_distribution(to_vecs(grads)); },
      py::arg("grads"));
  m.def(
      "lipschitz_distribution",
      [](const std::vector<double>& bounds) { return analysis::lipschitz_distribution(bounds); }, py::arg("bounds"));
  m.def(
      "bound_ratio", [](const std::vector<double>& bounds) { return analysis::bound_ratio(bounds); },
      py::arg("bounds"));
  m.def(
      "svm_lipschitz_bound", [](const std::vector<double>& x, double reg) { return analysis::svm_lipschitz_bound(Vec(x), reg); },
      py::arg("x"), py::arg("reg"));

  m.def(
      "cli",
      [](std::vector<std::string> args) {
        args.insert(args.begin(), "gradmine");
        return cli::run(args);
      },
      py::arg("args"), "Runs the command-line tool in process and returns its exit code.");
}
