#include "gradmine/data_io.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "gradmine/rng.hpp"

namespace gradmine::io {

using nlohmann::json;

namespace {

std::size_t uniform_between(Rng& rng, std::size_t lo, std::size_t hi) {
  return lo + uniform_index(rng, hi - lo + 1);
}

// Cue and filler tokens of one vocabulary band [begin, begin + size).
struct Band {
  std::size_t begin = 0;
  std::size_t cues_per_label = 1;
  std::size_t filler_count = 0;

  Band(std::size_t b, std::size_t size) : begin(b) {
    cues_per_label = std::max<std::size_t>(1, size / 6);
    filler_count = size - 2 * cues_per_label;
  }

  std::size_t cue(std::size_t label, Rng& rng) const {
    return begin + label * cues_per_label + uniform_index(rng, cues_per_label);
  }

  std::size_t filler(std::size_t label, Rng& rng) const {
    if (filler_count == 0) return cue(label, rng);
    return begin + 2 * cues_per_label + uniform_index(rng, filler_count);
  }
};

template <class F>
void for_each_line(const std::filesystem::path& path, F&& f) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(lineno, e.what());
    }
    try {
      f(j, lineno);
    } catch (const json::exception& e) {
      throw ParseError(lineno, e.what());
    }
  }
}

std::vector<std::size_t> index_list(const json& j, std::size_t lineno, const char* key) {
  if (!j.contains(key) || !j[key].is_array()) {
    throw ParseError(lineno, std::string("missing array '") + key + "'");
  }
  std::vector<std::size_t> out;
  for (const auto& v : j[key]) {
    if (!v.is_number_integer() || v.get<long long>() < 0) {
      throw ParseError(lineno, std::string("'") + key + "' must hold non-negative integers");
    }
    out.push_back(v.get<std::size_t>());
  }
  return out;
}

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

std::string_view to_string(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::seqclass: return "seqclass";
    case DatasetKind::seqlabel: return "seqlabel";
    case DatasetKind::pianoroll: return "pianoroll";
  }
  return "";
}

DatasetKind parse_dataset_kind(std::string_view name) {
  if (name == "seqclass") return DatasetKind::seqclass;
  if (name == "seqlabel") return DatasetKind::seqlabel;
  if (name == "pianoroll") return DatasetKind::pianoroll;
  throw ConfigError("unknown dataset kind '" + std::string(name) + "'");
}

std::size_t SeqDataset::num_classes() const {
  std::size_t k = 0;
  for (const auto& s : samples)
    for (auto t : s.targets) k = std::max(k, t + 1);
  return std::max<std::size_t>(k, 2);
}

SeqDataset gen_seqclass(const SeqClassParams& prm) {
  if (prm.n == 0) throw InvalidInput("dataset must have at least one sample");
  if (prm.vocab < 4) throw InvalidInput("vocabulary needs at least 4 tokens (common + rare bands)");
  if (!(prm.hard_fraction >= 0.0 && prm.hard_fraction <= 1.0)) {
    throw InvalidInput("hard fraction must lie in [0, 1]");
  }
  if (prm.min_len < 1 || prm.max_len < prm.min_len) throw InvalidInput("invalid length range");

  Rng rng(prm.seed);
  const std::size_t common_size = prm.vocab / 2;
  const Band common(0, common_size);
  const Band rare(common_size, prm.vocab - common_size);
  const std::size_t mid = (prm.min_len + prm.max_len) / 2;

  const auto n_hard = static_cast<std::size_t>(std::llround(prm.hard_fraction * static_cast<double>(prm.n)));
  std::vector<std::size_t> order(prm.n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = prm.n; i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);
  std::vector<bool> hard(prm.n, false);
  for (std::size_t k = 0; k < n_hard; ++k) hard[order[k]] = true;

  std::vector<std::size_t> labels(prm.n);
  for (auto& y : labels) y = uniform_index(rng, 2);
  if (prm.n >= 2 && std::all_of(labels.begin(), labels.end(), [&](auto y) { return y == labels[0]; })) {
    labels.back() = 1 - labels[0];
  }

  SeqDataset out;
  out.kind = DatasetKind::seqclass;
  out.vocab = prm.vocab;
  out.hard = hard;
  out.samples.reserve(prm.n);
  for (std::size_t i = 0; i < prm.n; ++i) {
    SequenceSample s;
    const std::size_t y = labels[i];
    if (!hard[i]) {
      const std::size_t len = uniform_between(rng, prm.min_len, mid);
      s.tokens.push_back(common.cue(y, rng));
      for (std::size_t t = 1; t < len; ++t) s.tokens.push_back(common.filler(y, rng));
    } else {
      const std::size_t len = uniform_between(rng, std::min(mid + 1, prm.max_len), prm.max_len);
      const std::size_t fill = rare.filler(y, rng);
      s.tokens.assign(len, fill);
      const std::size_t at = len > 1 ? 1 + uniform_index(rng, len - 1) : 0;
      s.tokens[at] = rare.cue(y, rng);
    }
    s.targets = {y};
    out.samples.push_back(std::move(s));
  }
  return out;
}

PianoRollDataset gen_pianoroll(const PianoRollParams& prm) {
  if (prm.n_v < 4) throw InvalidInput("piano roll needs at least 4 visible units");
  if (prm.patterns < 1) throw InvalidInput("pattern count must be at least 1");
  if (prm.min_len < 1 || prm.max_len < prm.min_len) throw InvalidInput("invalid length range");
  Rng rng(prm.seed);

  // motif[j][phase] = notes sounding at that phase
  std::vector<std::vector<std::vector<std::size_t>>> motifs(prm.patterns);
  const std::size_t span = std::min<std::size_t>(12, prm.n_v);
  for (auto& motif : motifs) {
    const std::size_t period = uniform_between(rng, 2, 8);
    const std::size_t base = uniform_index(rng, prm.n_v - span + 1);
    motif.resize(period);
    for (auto& chord : motif) {
      const std::size_t notes = uniform_between(rng, 1, 3);
      for (std::size_t k = 0; k < notes; ++k) chord.push_back(base + uniform_index(rng, span));
    }
  }

  PianoRollDataset out;
  out.n_v = prm.n_v;
  for (std::size_t i = 0; i < prm.n; ++i) {
    const std::size_t len = uniform_between(rng, prm.min_len, prm.max_len);
    std::vector<std::size_t> chosen{uniform_index(rng, prm.patterns)};
    if (prm.patterns > 1 && bernoulli(rng, 0.5)) {
      std::size_t other = uniform_index(rng, prm.patterns - 1);
      if (other >= chosen[0]) ++other;
      chosen.push_back(other);
    }
    std::vector<std::size_t> offsets;
    for (auto j : chosen) offsets.push_back(uniform_index(rng, motifs[j].size()));
    rnnrbm::FrameSequence seq;
    for (std::size_t t = 0; t < len; ++t) {
      Vec frame(prm.n_v);
      for (std::size_t c = 0; c < chosen.size(); ++c) {
        const auto& motif = motifs[chosen[c]];
        for (auto note : motif[(t + offsets[c]) % motif.size()]) frame[note] = 1.0;
      }
      seq.frames.push_back(std::move(frame));
    }
    out.sequences.push_back(std::move(seq));
  }
  return out;
}

std::vector<rnnrbm::FrameSequence> chunk_frames(const PianoRollDataset& data, std::size_t frames) {
  if (frames == 0) throw ConfigError("frame group size must be at least 1");
  std::vector<rnnrbm::FrameSequence> out;
  for (const auto& seq : data.sequences) {
    for (std::size_t start = 0; start < seq.length(); start += frames) {
      rnnrbm::FrameSequence chunk;
      const std::size_t stop = std::min(seq.length(), start + frames);
      chunk.frames.assign(seq.frames.begin() + static_cast<std::ptrdiff_t>(start),
                          seq.frames.begin() + static_cast<std::ptrdiff_t>(stop));
      out.push_back(std::move(chunk));
    }
  }
  return out;
}

std::string manifest_json(const SeqDataset& data, const SeqClassParams& p) {
  json j;
  j["kind"] = std::string(to_string(data.kind));
  j["n_samples"] = data.samples.size();
  j["vocab"] = data.vocab;
  j["generator"] = {{"min_len", p.min_len},
                    {"max_len", p.max_len},
                    {"hard_fraction", p.hard_fraction},
                    {"seed", p.seed}};
  j["n_hard"] = std::count(data.hard.begin(), data.hard.end(), true);
  return j.dump();
}

std::string manifest_json(const PianoRollDataset& data, const PianoRollParams& p) {
  json j;
  j["kind"] = "pianoroll";
  j["n_samples"] = data.sequences.size();
  j["n_v"] = data.n_v;
  j["generator"] = {{"min_len", p.min_len},
                    {"max_len", p.max_len},
                    {"patterns", p.patterns},
                    {"seed", p.seed}};
  return j.dump();
}

void save_seq_dataset(const std::filesystem::path& path, const SeqDataset& data) {
  std::ostringstream out;
  for (const auto& s : data.samples) {
    json j;
    j["tokens"] = s.tokens;
    if (data.kind == DatasetKind::seqclass) {
      if (!s.single_label()) throw InvalidInput("classification sample without a single label");
      j["label"] = s.targets[0];
    } else {
      j["targets"] = s.targets;
    }
    out << j.dump() << '\n';
  }
  write_file(path, out.str());
}

SeqDataset load_seq_dataset(const std::filesystem::path& path) {
  SeqDataset data;
  bool first = true;
  for_each_line(path, [&](const json& j, std::size_t lineno) {
    if (!j.is_object()) throw ParseError(lineno, "expected a JSON object");
    const bool labelled = j.contains("label");
    const DatasetKind kind = labelled ? DatasetKind::seqclass : DatasetKind::seqlabel;
    if (first) {
      data.kind = kind;
      first = false;
    } else if (kind != data.kind) {
      throw ParseError(lineno, "mixed classification and labelling lines");
    }
    SequenceSample s;
    s.tokens = index_list(j, lineno, "tokens");
    if (s.tokens.empty()) throw ParseError(lineno, "empty token list");
    if (labelled) {
      if (!j["label"].is_number_integer() || j["label"].get<long long>() < 0) {
        throw ParseError(lineno, "'label' must be a non-negative integer");
      }
      s.targets = {j["label"].get<std::size_t>()};
    } else {
      s.targets = index_list(j, lineno, "targets");
      if (s.targets.size() != s.tokens.size()) {
        throw ParseError(lineno, "targets and tokens differ in length");
      }
    }
    for (auto t : s.tokens) data.vocab = std::max(data.vocab, t + 1);
    if (!labelled)
      for (auto t : s.targets) data.vocab = std::max(data.vocab, t + 1);
    data.samples.push_back(std::move(s));
  });
  if (data.samples.empty()) throw InvalidInput(path.string() + " holds no samples");
  return data;
}

void save_pianoroll(const std::filesystem::path& path, const PianoRollDataset& data) {
  std::ostringstream out;
  for (const auto& seq : data.sequences) {
    json frames = json::array();
    for (const auto& f : seq.frames) {
      json row = json::array();
      for (double x : f.data) row.push_back(static_cast<int>(x));
      frames.push_back(std::move(row));
    }
    out << json{{"n_v", data.n_v}, {"frames", std::move(frames)}}.dump() << '\n';
  }
  write_file(path, out.str());
}

PianoRollDataset load_pianoroll(const std::filesystem::path& path) {
  PianoRollDataset data;
  for_each_line(path, [&](const json& j, std::size_t lineno) {
    if (!j.is_object() || !j.contains("frames") || !j["frames"].is_array()) {
      throw ParseError(lineno, "missing array 'frames'");
    }
    rnnrbm::FrameSequence seq;
    for (const auto& row : j["frames"]) {
      if (!row.is_array()) throw ParseError(lineno, "frame must be an array");
      Vec f(row.size());
      for (std::size_t i = 0; i < row.size(); ++i) {
        const auto& v = row[i];
        if (!v.is_number_integer() || (v.get<int>() != 0 && v.get<int>() != 1)) {
          throw ParseError(lineno, "frame entries must be 0 or 1");
        }
        f[i] = v.get<int>();
      }
      seq.frames.push_back(std::move(f));
    }
    if (seq.frames.empty()) throw ParseError(lineno, "empty frame sequence");
    const std::size_t width = j.contains("n_v") ? j["n_v"].get<std::size_t>() : seq.width();
    if (data.n_v == 0) data.n_v = width;
    if (width != data.n_v) throw ParseError(lineno, "n_v differs from earlier lines");
    for (const auto& f : seq.frames)
      if (f.size() != data.n_v) throw ParseError(lineno, "frame width differs from n_v");
    data.sequences.push_back(std::move(seq));
  });
  if (data.sequences.empty()) throw InvalidInput(path.string() + " holds no sequences");
  return data;
}

void save_convex(const std::filesystem::path& path, const analysis::ConvexProblem& prob) {
  std::ostringstream out;
  for (std::size_t i = 0; i < prob.size(); ++i) {
    out << json{{"x", prob.points[i].data}, {"y", prob.labels[i]}}.dump() << '\n';
  }
  write_file(path, out.str());
}

analysis::ConvexProblem load_convex(const std::filesystem::path& path, double reg) {
  analysis::ConvexProblem prob;
  prob.reg = reg;
  for_each_line(path, [&](const json& j, std::size_t lineno) {
    if (!j.is_object() || !j.contains("x") || !j.contains("y")) {
      throw ParseError(lineno, "expected {\"x\": [...], \"y\": -1|1}");
    }
    prob.points.emplace_back(j["x"].get<std::vector<double>>());
    prob.labels.push_back(j["y"].get<int>());
  });
  prob.validate();
  return prob;
}

std::string importance_to_json(const ImportanceTable& t) {
  json j;
  j["model"] = t.model;
  j["base_selector"] = t.base_selector;
  j["epsilon"] = t.epsilon;
  j["seed"] = t.seed;
  j["norm_kind"] = t.norm_kind;
  j["norms"] = t.norms;
  j["probs"] = t.probs;
  j["iterations"] = t.iterations;
  j["converged"] = t.converged;
  return j.dump(2);
}

ImportanceTable importance_from_json(const std::string& text) {
  ImportanceTable t;
  try {
    const json j = json::parse(text);
    t.model = j.at("model").get<std::string>();
    t.base_selector = j.at("base_selector").get<std::string>();
    t.epsilon = j.at("epsilon").get<double>();
    t.seed = j.at("seed").get<std::uint64_t>();
    t.norm_kind = j.at("norm_kind").get<std::string>();
    t.norms = j.at("norms").get<std::vector<double>>();
    t.probs = j.at("probs").get<std::vector<double>>();
    t.iterations = j.at("iterations").get<std::vector<std::size_t>>();
    t.converged = j.at("converged").get<std::vector<bool>>();
  } catch (const json::exception& e) {
    throw ParseError(1, std::string("importance file: ") + e.what());
  }
  t.validate();
  return t;
}

void save_importance(const std::filesystem::path& path, const ImportanceTable& table) {
  write_file(path, importance_to_json(table) + "\n");
}

ImportanceTable load_importance(const std::filesystem::path& path) {
  return importance_from_json(read_file(path));
}

std::string metrics_to_csv(const MetricsLog& log, bool header) {
  std::ostringstream out;
  if (header) out << kMetricsHeader << '\n';
  for (const auto& r : log.records) {
    out << r.epoch << ',' << r.split << ',' << fmt17(r.loss) << ',' << fmt17(r.error_rate) << ','
        << fmt17(r.grad_var) << ',' << fmt17(r.wall_ms) << '\n';
  }
  return out.str();
}

void save_metrics(const std::filesystem::path& path, const MetricsLog& log) {
  write_file(path, metrics_to_csv(log));
}

MetricsLog load_metrics(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::string line;
  std::size_t lineno = 0;
  MetricsLog log;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno == 1) {
      if (line != kMetricsHeader) throw ParseError(1, "unexpected metrics header");
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 6) throw ParseError(lineno, "expected 6 columns");
    EpochRecord r;
    try {
      r.epoch = std::stoull(cells[0]);
      r.split = cells[1];
      r.loss = std::stod(cells[2]);
      r.error_rate = std::stod(cells[3]);
      r.grad_var = std::stod(cells[4]);
      r.wall_ms = std::stod(cells[5]);
    } catch (const std::exception&) {
      throw ParseError(lineno, "malformed number");
    }
    log.records.push_back(std::move(r));
  }
  if (lineno == 0) throw ParseError(1, "empty metrics file");
  return log;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidInput("cannot write " + path.string());
  out << contents;
  if (!out) throw InvalidInput("failed writing " + path.string());
}

std::string content_hash(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

}  // namespace gradmine::io
