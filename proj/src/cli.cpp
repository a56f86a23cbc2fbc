#include "gradmine/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <filesystem>
#include <iostream>
#include <json.hpp>
#include <numeric>
#include <optional>

#include "gradmine/analysis.hpp"
#include "gradmine/data_io.hpp"
#include "gradmine/fim.hpp"
#include "gradmine/lstm.hpp"
#include "gradmine/optimizer.hpp"
#include "gradmine/rnn.hpp"
#include "gradmine/rnnrbm.hpp"
#include "gradmine/svg.hpp"

namespace gradmine::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

struct Context {
  std::vector<std::string> argv;
  Clock::time_point start = Clock::now();
};

struct ModelOpts {
  std::string model = "lstm";
  std::size_t embed = 8;
  std::size_t hidden = 16;
  std::size_t rbm_hidden = 150;
  std::size_t recurrent = 100;
  int cd_k = 1;
  std::size_t frames = 50;  // rnnrbm: consecutive slices per training sample, 0 keeps whole sequences
  std::uint64_t init_seed = 0;

  void add_to(CLI::App* app, bool allow_svm = false) {
    std::vector<std::string> kinds{"rnn", "lstm", "rnnrbm"};
    if (allow_svm) kinds.push_back("svm");
    app->add_option("--model", model, "Model kind")
        ->check(CLI::IsMember(kinds))
        ->capture_default_str();
    app->add_option("--embed", embed, "Embedding width (rnn, lstm)")->capture_default_str();
    app->add_option("--hidden", hidden, "Hidden width (rnn, lstm)")->capture_default_str();
    app->add_option("--rbm-hidden", rbm_hidden, "RBM hidden units (rnnrbm)")->capture_default_str();
    app->add_option("--recurrent", recurrent, "Recurrent width (rnnrbm)")->capture_default_str();
    app->add_option("--cd-k", cd_k, "Gibbs steps per CD estimate (rnnrbm)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app->add_option("--frames", frames, "Chunk piano rolls into groups of this many slices")
        ->capture_default_str();
    app->add_option("--init-seed", init_seed, "Seed of the shared initial parameters")
        ->capture_default_str();
  }

  json to_json() const {
    return {{"model", model},         {"embed", embed},   {"hidden", hidden},
            {"rbm_hidden", rbm_hidden}, {"recurrent", recurrent}, {"cd_k", cd_k},
            {"frames", frames},       {"init_seed", init_seed}};
  }
};

struct Data {
  fs::path path;
  std::string hash;
  std::optional<io::SeqDataset> seq;
  std::vector<rnnrbm::FrameSequence> rolls;
  std::size_t n_v = 0;

  std::size_t size() const { return seq ? seq->samples.size() : rolls.size(); }
};

Data load_data(const fs::path& path, const ModelOpts& mo) {
  Data d;
  d.path = path;
  d.hash = io::content_hash(io::read_file(path));
  try {
    if (mo.model == "rnnrbm") {
      auto roll = io::load_pianoroll(path);
      d.n_v = roll.n_v;
      d.rolls = mo.frames > 0 ? io::chunk_frames(roll, mo.frames) : std::move(roll.sequences);
    } else {
      d.seq = io::load_seq_dataset(path);
    }
  } catch (const ParseError& e) {
    throw InvalidInput("dataset " + path.string() + " does not fit model '" + mo.model +
                       "': " + e.what());
  }
  if (mo.model == "lstm" && d.seq->kind != io::DatasetKind::seqclass) {
    throw InvalidInput("model 'lstm' needs a classification dataset, " + path.string() +
                       " holds per-token targets");
  }
  return d;
}

// Calls f(model, samples, params0) with the concrete model type.
template <class F>
decltype(auto) with_model(const ModelOpts& mo, const Data& d, F&& f) {
  if (mo.model == "rnn") {
    const auto& ds = *d.seq;
    const rnn::Dims dims{mo.embed, mo.hidden, std::max(ds.vocab, ds.num_classes())};
    return f(rnn::Model{}, std::span<const SequenceSample>(ds.samples),
             rnn::init(dims, mo.init_seed));
  }
  if (mo.model == "lstm") {
    const auto& ds = *d.seq;
    const lstm::Dims dims{mo.embed, mo.hidden, ds.vocab, ds.num_classes()};
    return f(lstm::Model{}, std::span<const SequenceSample>(ds.samples),
             lstm::init(dims, mo.init_seed));
  }
  const rnnrbm::Dims dims{d.n_v, mo.rbm_hidden, mo.recurrent};
  return f(rnnrbm::Model{mo.cd_k}, std::span<const rnnrbm::FrameSequence>(d.rolls),
           rnnrbm::init(dims, mo.init_seed));
}

std::string hex64(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// <out>.run.json next to every artifact.
void write_run_record(const Context& ctx, const fs::path& out, const json& config,
                      std::uint64_t seed, const std::vector<std::pair<fs::path, std::string>>& inputs,
                      const std::vector<fs::path>& outputs) {
  json rec;
  rec["command_line"] = ctx.argv;
  rec["config"] = config;
  rec["config_hash"] = io::content_hash(config.dump());
  rec["seed"] = seed;
  rec["inputs"] = json::array();
  for (const auto& [path, hash] : inputs) rec["inputs"].push_back({{"path", path.string()}, {"hash", hash}});
  rec["outputs"] = json::array();
  for (const auto& p : outputs) rec["outputs"].push_back(p.string());
  rec["wall_ms"] =
      std::chrono::duration<double, std::milli>(Clock::now() - ctx.start).count();
  io::write_file(fs::path(out.string() + ".run.json"), rec.dump(2) + "\n");
}

// ---- gen ----

struct GenOpts {
  std::string task = "seqclass";
  std::size_t n = 200;
  std::size_t vocab = 50;
  double hard = 0.25;
  std::size_t min_len = 0;
  std::size_t max_len = 0;
  std::size_t n_v = 88;
  std::size_t patterns = 4;
  std::uint64_t seed = 0;
  fs::path out;
};

void cmd_gen(const Context& ctx, const GenOpts& o) {
  std::string manifest;
  json config = {{"task", o.task}, {"n", o.n}, {"seed", o.seed}};
  if (o.task == "seqclass") {
    io::SeqClassParams p;
    p.n = o.n;
    p.vocab = o.vocab;
    p.hard_fraction = o.hard;
    p.seed = o.seed;
    if (o.min_len) p.min_len = o.min_len;
    if (o.max_len) p.max_len = o.max_len;
    const auto data = io::gen_seqclass(p);
    io::save_seq_dataset(o.out, data);
    manifest = io::manifest_json(data, p);
    config.update({{"vocab", p.vocab}, {"hard", p.hard_fraction}, {"min_len", p.min_len},
                   {"max_len", p.max_len}});
  } else {
    io::PianoRollParams p;
    p.n = o.n;
    p.n_v = o.n_v;
    p.patterns = o.patterns;
    p.seed = o.seed;
    if (o.min_len) p.min_len = o.min_len;
    if (o.max_len) p.max_len = o.max_len;
    const auto data = io::gen_pianoroll(p);
    io::save_pianoroll(o.out, data);
    manifest = io::manifest_json(data, p);
    config.update({{"n_v", p.n_v}, {"patterns", p.patterns}, {"min_len", p.min_len},
                   {"max_len", p.max_len}});
  }
  write_run_record(ctx, o.out, config, o.seed, {}, {o.out});
  std::cout << manifest << "\n";
}

// ---- mine ----

struct MineOpts {
  fs::path data;
  ModelOpts model;
  std::optional<double> epsilon;
  double target_loss = 0.3;
  double lr = 0.1;
  std::size_t t_max = 5000;
  std::uint64_t seed = 0;
  std::string base;
  std::string norm = "frobenius";
  double smoothing = 0.0;
  std::size_t workers = 0;
  fs::path out;
};

void cmd_mine(const Context& ctx, const MineOpts& o) {
  const Data d = load_data(o.data, o.model);
  FimConfig cfg;
  cfg.epsilon = o.epsilon.value_or(1e-2 * o.target_loss);
  cfg.lr = o.lr;
  cfg.t_max = o.t_max;
  cfg.seed = o.seed;
  cfg.base_selector = o.base;
  cfg.norm_kind = parse_norm_kind(o.norm);
  cfg.smoothing = o.smoothing;
  cfg.workers = resolve_workers(o.workers);

  const ImportanceTable table = with_model(o.model, d, [&](const auto& model, auto samples, const auto& p0) {
    return mine_importance(model, samples, p0, cfg).table;
  });
  io::save_importance(o.out, table);

  json config = o.model.to_json();
  config.update({{"epsilon", cfg.epsilon}, {"lr", cfg.lr}, {"t_max", cfg.t_max},
                 {"base", table.base_selector}, {"norm", o.norm}, {"smoothing", cfg.smoothing}});
  write_run_record(ctx, o.out, config, o.seed, {{o.data, d.hash}}, {o.out});

  const auto [pmin, pmax] = std::minmax_element(table.probs.begin(), table.probs.end());
  const double pmean = std::accumulate(table.probs.begin(), table.probs.end(), 0.0) /
                       static_cast<double>(table.size());
  const bool untouched = std::all_of(table.iterations.begin(), table.iterations.end(),
                                     [](std::size_t t) { return t == 0; });
  if (untouched) {
    std::cerr << "warning: epsilon " << cfg.epsilon
              << " is at or above every initial loss; no private training ran and the table is uniform\n";
  }
  if (table.unconverged() > 0) {
    std::cerr << "warning: " << table.unconverged() << " samples hit t_max=" << cfg.t_max
              << " before reaching epsilon\n";
  }
  std::cout << "samples: " << table.size() << "  model: " << table.model
            << "  base: " << table.base_selector << "  epsilon: " << cfg.epsilon
            << "  workers: " << cfg.workers << "\n"
            << "p_i min: " << *pmin << "  max: " << *pmax << "  mean: " << pmean << "\n"
            << "non-converged: " << table.unconverged() << "\n";
}

// ---- train / compare ----

struct TrainOpts {
  fs::path data;
  fs::path eval;
  ModelOpts model;
  std::string sampler = "uniform";
  fs::path importance;
  double lr = 0.1;
  std::size_t epochs = 10;
  std::uint64_t seed = 0;
  std::size_t eval_every = 1;
  std::optional<double> clip;
  bool no_grad_var = false;
  bool control = false;
  std::optional<double> target_loss;
  fs::path out;
  fs::path svg;
  std::string preset;
};

// rnnrbm-50 and rnnrbm-100: frame groups of 50 at lr 0.3, or 100 at lr 0.003.
// Flags given explicitly on the command line win.
void apply_preset(const CLI::App& sub, TrainOpts& o) {
  if (o.preset.empty()) return;
  if (sub.count("--model") && o.model.model != "rnnrbm") {
    throw ConfigError("preset " + o.preset + " applies to model 'rnnrbm' only");
  }
  o.model.model = "rnnrbm";
  const bool big = o.preset == "rnnrbm-100";
  if (!sub.count("--frames")) o.model.frames = big ? 100 : 50;
  if (!sub.count("--lr")) o.lr = big ? 0.003 : 0.3;
}

ImportanceTable load_matching_importance(const fs::path& path, std::size_t n,
                                         const std::string& model) {
  auto table = io::load_importance(path);
  if (table.size() != n) {
    throw InvalidInput("importance file " + path.string() + " has " +
                       std::to_string(table.size()) + " entries but the dataset has " +
                       std::to_string(n) + " samples");
  }
  if (table.model != model) {
    std::cerr << "warning: importance was mined with model '" << table.model
              << "', training model is '" << model << "'\n";
  }
  return table;
}

// The model is sized from the training set, so it has to cover the held-out set too.
void match_eval(Data& d, const std::optional<Data>& ev) {
  if (!ev) return;
  if (d.seq) {
    if (ev->seq->kind != d.seq->kind) throw InvalidInput("training and eval sets differ in kind");
    d.seq->vocab = std::max(d.seq->vocab, ev->seq->vocab);
  } else if (ev->n_v != d.n_v) {
    throw InvalidInput("training and eval piano rolls differ in width");
  }
}

MetricsLog run_training(const TrainOpts& o, const Data& train_data, const Data* eval_data,
                        const TrainConfig& cfg) {
  return with_model(o.model, train_data, [&](const auto& model, auto samples, auto p0) {
    using M = std::decay_t<decltype(model)>;
    std::span<const typename M::Sample> eval_span;
    if (eval_data) {
      if constexpr (std::is_same_v<typename M::Sample, SequenceSample>) {
        eval_span = eval_data->seq->samples;
      } else {
        eval_span = eval_data->rolls;
      }
    }
    return train(model, samples, eval_span, std::move(p0), cfg).log;
  });
}

TrainConfig make_config(const TrainOpts& o) {
  TrainConfig cfg;
  cfg.lr = o.lr;
  cfg.epochs = o.epochs;
  cfg.seed = o.seed;
  cfg.eval_every = o.eval_every;
  cfg.clip = o.clip;
  cfg.track_grad_var = !o.no_grad_var;
  return cfg;
}

json train_config_json(const TrainOpts& o) {
  json j = o.model.to_json();
  j.update({{"lr", o.lr}, {"epochs", o.epochs}, {"eval_every", o.eval_every}, {"preset", o.preset},
            {"clip", o.clip ? json(*o.clip) : json(nullptr)}, {"grad_var", !o.no_grad_var}});
  return j;
}

void print_final(const std::string& name, const MetricsLog& log, std::optional<double> target,
                 const std::string& split) {
  const auto losses = log.losses(split);
  std::cout << name << ": final " << split << " loss "
            << (losses.empty() ? std::string("n/a") : std::to_string(losses.back()));
  if (target) {
    const auto hit = log.first_epoch_at_or_below(*target, split);
    std::cout << "  first epoch <= " << *target << ": "
              << (hit ? std::to_string(*hit) : std::string("never"));
  }
  std::cout << "\n";
}

void cmd_train(const Context& ctx, const TrainOpts& o) {
  Data d = load_data(o.data, o.model);
  std::optional<Data> ev;
  if (!o.eval.empty()) ev = load_data(o.eval, o.model);
  match_eval(d, ev);
  TrainConfig cfg = make_config(o);
  cfg.sampler = parse_sampler(o.sampler);
  std::vector<std::pair<fs::path, std::string>> inputs{{o.data, d.hash}};
  if (ev) inputs.emplace_back(o.eval, ev->hash);
  if (cfg.sampler == SamplerKind::importance) {
    if (o.importance.empty()) throw ConfigError("--sampler importance needs --importance");
    cfg.importance_probs = load_matching_importance(o.importance, d.size(), o.model.model).probs;
    inputs.emplace_back(o.importance, io::content_hash(io::read_file(o.importance)));
  }
  const MetricsLog log = run_training(o, d, ev ? &*ev : nullptr, cfg);
  io::save_metrics(o.out, log);

  std::vector<fs::path> outputs{o.out};
  if (!o.svg.empty()) {
    std::vector<svg::Series> series;
    for (const std::string split : {"train", "eval"}) {
      const auto ys = log.losses(split);
      if (ys.empty()) continue;
      svg::Series s{split, {}, ys};
      for (const auto& r : log.records)
        if (r.split == split) s.x.push_back(static_cast<double>(r.epoch));
      series.push_back(std::move(s));
    }
    io::write_file(o.svg, svg::line_chart(series, o.sampler + " SGD", "epoch", "loss"));
    outputs.push_back(o.svg);
  }
  json config = train_config_json(o);
  config["sampler"] = o.sampler;
  config["config_hash"] = hex64(log.config_hash);
  for (const auto& out : outputs) write_run_record(ctx, out, config, o.seed, inputs, outputs);
  print_final(o.sampler, log, o.target_loss, "train");
}

void cmd_compare(const Context& ctx, const TrainOpts& o) {
  Data d = load_data(o.data, o.model);
  std::optional<Data> ev;
  if (!o.eval.empty()) ev = load_data(o.eval, o.model);
  match_eval(d, ev);
  std::vector<std::pair<fs::path, std::string>> inputs{{o.data, d.hash}};
  if (ev) inputs.emplace_back(o.eval, ev->hash);

  TrainConfig a = make_config(o);
  TrainConfig b = a;
  std::string b_name = "control";
  if (!o.control) {
    if (o.importance.empty()) throw ConfigError("compare needs --importance (or --control)");
    b.sampler = SamplerKind::importance;
    b.importance_probs = load_matching_importance(o.importance, d.size(), o.model.model).probs;
    inputs.emplace_back(o.importance, io::content_hash(io::read_file(o.importance)));
    b_name = "importance";
  }
  const MetricsLog la = run_training(o, d, ev ? &*ev : nullptr, a);
  const MetricsLog lb = run_training(o, d, ev ? &*ev : nullptr, b);

  MetricsLog combined;
  combined.seed = o.seed;
  for (auto [name, log] : {std::pair{std::string("uniform"), &la}, std::pair{b_name, &lb}}) {
    for (auto r : log->records) {
      r.split = name + "/" + r.split;
      combined.records.push_back(std::move(r));
    }
  }
  io::save_metrics(o.out, combined);

  fs::path svg_path = o.svg;
  if (svg_path.empty()) svg_path = fs::path(o.out).replace_extension(".svg");
  std::vector<svg::Series> series;
  for (auto [name, log] : {std::pair{std::string("uniform"), &la}, std::pair{b_name, &lb}}) {
    svg::Series s{name, {}, log->losses("train")};
    for (const auto& r : log->records)
      if (r.split == "train") s.x.push_back(static_cast<double>(r.epoch));
    series.push_back(std::move(s));
  }
  io::write_file(svg_path, svg::line_chart(series, "training loss", "epoch", "loss"));

  json config = train_config_json(o);
  config["compare"] = b_name;
  const std::vector<fs::path> outputs{o.out, svg_path};
  for (const auto& out : outputs) write_run_record(ctx, out, config, o.seed, inputs, outputs);
  print_final("uniform", la, o.target_loss, "train");
  print_final(b_name, lb, o.target_loss, "train");
}

// ---- variance ----

struct VarianceOpts {
  fs::path data;
  ModelOpts model;
  std::string kind;  // svm or a sequence model; taken from --model when empty
  double reg = 1.0;
  bool at_optimum = false;
  fs::path importance;
  std::uint64_t seed = 0;
  fs::path out;
};

json variance_report(std::span<const Vec> grads, std::span<const double> bounds,
                     const std::optional<std::vector<double>>& mined) {
  json report;
  json notes = json::array();
  const std::size_t n = grads.size();
  auto guarded = [&](const char* key, auto&& compute) {
    try {
      report[key] = compute();
    } catch (const Error& e) {
      report[key] = nullptr;
      notes.push_back(std::string(key) + ": " + e.what());
    }
  };
  guarded("uniform", [&] { return analysis::gradient_variance(grads, uniform_probs(n)); });
  guarded("optimal", [&] {
    return analysis::gradient_variance(grads, analysis::optimal_distribution(grads));
  });
  if (mined) {
    guarded("mined", [&] { return analysis::gradient_variance(grads, *mined); });
  } else {
    report["mined"] = nullptr;
    notes.push_back("mined: no importance file given");
  }
  guarded("lipschitz", [&] {
    return analysis::gradient_variance(grads, analysis::lipschitz_distribution(bounds));
  });
  guarded("bound_ratio", [&] {
    if (std::all_of(bounds.begin(), bounds.end(), [](double b) { return b == 0.0; })) {
      throw DegenerateDistribution("all Lipschitz bounds are zero");
    }
    return analysis::bound_ratio(bounds);
  });
  report["notes"] = notes;
  return report;
}

void cmd_variance(const Context& ctx, const VarianceOpts& o) {
  std::vector<Vec> grads;
  std::vector<double> bounds;
  std::string input_hash;
  json config = {{"seed", o.seed}};
  if (o.kind == "svm") {
    const auto prob = io::load_convex(o.data, o.reg);
    input_hash = io::content_hash(io::read_file(o.data));
    const Vec w = o.at_optimum ? analysis::svm_minimize(prob) : Vec(prob.dim());
    for (std::size_t i = 0; i < prob.size(); ++i) {
      grads.push_back(analysis::svm_loss_grad(prob, i, w).grad);
      bounds.push_back(analysis::svm_lipschitz_bound(prob.points[i], o.reg));
    }
    config.update({{"model", "svm"}, {"reg", o.reg}, {"at_optimum", o.at_optimum}});
  } else {
    const Data d = load_data(o.data, o.model);
    input_hash = d.hash;
    with_model(o.model, d, [&](const auto& model, auto samples, const auto& p0) {
      using M = std::decay_t<decltype(model)>;
      for (std::size_t i = 0; i < samples.size(); ++i) {
        Rng rng(derive_seed(o.seed, i));
        auto [loss, g] = model.loss_and_grad(p0, samples[i], rng);
        (void)loss;
        grads.emplace_back(flatten(g));
        bounds.push_back(grad_norm(g, M::default_base));
      }
    });
    config.update(o.model.to_json());
  }
  std::optional<std::vector<double>> mined;
  std::vector<std::pair<fs::path, std::string>> inputs{{o.data, input_hash}};
  if (!o.importance.empty()) {
    mined = load_matching_importance(o.importance, grads.size(), o.kind).probs;
    inputs.emplace_back(o.importance, io::content_hash(io::read_file(o.importance)));
  }
  const json report = variance_report(grads, bounds, mined);
  const std::string text = report.dump(2);
  if (!o.out.empty()) {
    io::write_file(o.out, text + "\n");
    write_run_record(ctx, o.out, config, o.seed, inputs, {o.out});
  }
  std::cout << text << "\n";
}

}  // namespace

int run(int argc, char** argv) {
  Context ctx;
  ctx.argv.assign(argv, argv + argc);

  CLI::App app{"Importance-sampled SGD for recurrent models"};
  app.require_subcommand(1);

  GenOpts gen;
  auto* g = app.add_subcommand("gen", "Generate a synthetic dataset");
  g->add_option("--task", gen.task)->check(CLI::IsMember({"seqclass", "pianoroll"}))->capture_default_str();
  g->add_option("--n", gen.n, "Number of samples")->capture_default_str();
  g->add_option("--vocab", gen.vocab, "Vocabulary size (seqclass)")->capture_default_str();
  g->add_option("--hard", gen.hard, "Fraction of hard samples (seqclass)")->capture_default_str();
  g->add_option("--min-len", gen.min_len, "Shortest sequence (0: task default)");
  g->add_option("--max-len", gen.max_len, "Longest sequence (0: task default)");
  g->add_option("--n-v", gen.n_v, "Visible units (pianoroll)")->capture_default_str();
  g->add_option("--patterns", gen.patterns, "Motif count (pianoroll)")->capture_default_str();
  g->add_option("--seed", gen.seed)->capture_default_str();
  g->add_option("--out", gen.out, "Output JSONL")->required();

  MineOpts mine;
  auto* m = app.add_subcommand("mine", "Mine per-sample importance");
  m->add_option("--data", mine.data, "Dataset JSONL")->required()->check(CLI::ExistingFile);
  mine.model.add_to(m);
  m->add_option("--epsilon", mine.epsilon, "Per-sample target loss (default: 0.01 * target loss)");
  m->add_option("--target-loss", mine.target_loss, "Whole-dataset training target")->capture_default_str();
  m->add_option("--lr-fim", mine.lr, "Private training step size")->capture_default_str();
  m->add_option("--t-max", mine.t_max, "Iteration cap per sample")->capture_default_str();
  m->add_option("--seed", mine.seed)->capture_default_str();
  m->add_option("--base", mine.base, "Parameter block used as importance proxy");
  m->add_option("--norm", mine.norm)->check(CLI::IsMember({"frobenius", "spectral"}))->capture_default_str();
  m->add_option("--smoothing", mine.smoothing, "Mix in kappa * mean norm")->capture_default_str();
  m->add_option("--workers", mine.workers, "Worker threads (0: all cores)")->capture_default_str();
  m->add_option("--out", mine.out, "Importance JSON")->required();

  TrainOpts tr;
  auto add_train_opts = [](CLI::App* sub, TrainOpts& o) {
    sub->add_option("--data", o.data, "Training set JSONL")->required()->check(CLI::ExistingFile);
    sub->add_option("--eval", o.eval, "Held-out set JSONL")->check(CLI::ExistingFile);
    o.model.add_to(sub);
    sub->add_option("--importance", o.importance, "Importance JSON from mine")->check(CLI::ExistingFile);
    sub->add_option("--lr", o.lr)->capture_default_str();
    sub->add_option("--epochs", o.epochs)->capture_default_str();
    sub->add_option("--seed", o.seed)->capture_default_str();
    sub->add_option("--eval-every", o.eval_every)->capture_default_str();
    sub->add_option("--clip", o.clip, "Cap on (N p_i)^-1");
    sub->add_flag("--no-grad-var", o.no_grad_var, "Skip the per-epoch gradient variance");
    sub->add_option("--target-loss", o.target_loss, "Report the first epoch reaching this loss");
    sub->add_option("--out", o.out, "Metrics CSV")->required();
    sub->add_option("--svg", o.svg, "Loss plot");
    sub->add_option("--preset", o.preset, "RNN-RBM frame grouping and step size")
        ->check(CLI::IsMember({"rnnrbm-50", "rnnrbm-100"}));
  };
  auto* t = app.add_subcommand("train", "Train one model");
  add_train_opts(t, tr);
  t->add_option("--sampler", tr.sampler)->check(CLI::IsMember({"uniform", "importance"}))->capture_default_str();

  TrainOpts cmp;
  auto* c = app.add_subcommand("compare", "Train uniform and importance runs side by side");
  add_train_opts(c, cmp);
  c->add_flag("--control", cmp.control, "Run uniform against uniform");

  VarianceOpts var;
  auto* v = app.add_subcommand("variance", "Report estimator variance under several distributions");
  v->add_option("--data", var.data, "Dataset JSONL")->required()->check(CLI::ExistingFile);
  var.model.add_to(v, true);
  v->add_option("--reg", var.reg, "Regularization (svm)")->capture_default_str();
  v->add_flag("--at-optimum", var.at_optimum, "Evaluate at the minimizer (svm)");
  v->add_option("--importance", var.importance, "Importance JSON")->check(CLI::ExistingFile);
  v->add_option("--seed", var.seed)->capture_default_str();
  v->add_option("--out", var.out, "Report JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (g->parsed()) cmd_gen(ctx, gen);
    if (m->parsed()) cmd_mine(ctx, mine);
    if (t->parsed()) {
      apply_preset(*t, tr);
      cmd_train(ctx, tr);
    }
    if (c->parsed()) {
      apply_preset(*c, cmp);
      cmd_compare(ctx, cmp);
    }
    if (v->parsed()) {
      var.kind = var.model.model;
      cmd_variance(ctx, var);
    }
  } catch (const DivergenceError& e) {
    std::cerr << "diverged: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitOk;
}

int run(const std::vector<std::string>& args) {
  std::vector<std::string> copy = args;
  std::vector<char*> argv;
  for (auto& a : copy) argv.push_back(a.data());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace gradmine::cli
