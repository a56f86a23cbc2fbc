#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gradmine/analysis.hpp"
#include "gradmine/fim.hpp"
#include "gradmine/optimizer.hpp"
#include "gradmine/rnnrbm.hpp"
#include "gradmine/sequence.hpp"

namespace gradmine::io {

enum class DatasetKind { seqclass, seqlabel, pianoroll };

std::string_view to_string(DatasetKind kind);
DatasetKind parse_dataset_kind(std::string_view name);

// Token sequences with labels. vocab is at least one past the largest token.
struct SeqDataset {
  DatasetKind kind = DatasetKind::seqclass;
  std::size_t vocab = 0;
  std::vector<SequenceSample> samples;
  std::vector<bool> hard;  // generator bookkeeping, empty for loaded files

  std::size_t num_classes() const;
  bool operator==(const SeqDataset&) const = default;
};

struct PianoRollDataset {
  std::size_t n_v = 0;
  std::vector<rnnrbm::FrameSequence> sequences;

  bool operator==(const PianoRollDataset&) const = default;
};

struct SeqClassParams {
  std::size_t n = 200;
  std::size_t vocab = 50;
  std::size_t min_len = 4;
  std::size_t max_len = 16;
  double hard_fraction = 0.25;
  std::uint64_t seed = 0;
};

struct PianoRollParams {
  std::size_t n = 50;
  std::size_t n_v = 88;
  std::size_t min_len = 50;
  std::size_t max_len = 200;
  std::size_t patterns = 4;
  std::uint64_t seed = 0;
};

// Binary sentiment-like classification. The vocabulary splits into a common
// band and a rare band; each band holds label cue tokens and neutral filler.
// Easy samples are short, carry their label cue in the first token, and use
// common filler. Hard samples are longer, use rare filler, and hide a rare cue
// at a random position after the first step.
SeqDataset gen_seqclass(const SeqClassParams& params);

// Frame sequences built by overlaying periodic chord motifs.
PianoRollDataset gen_pianoroll(const PianoRollParams& params);

// Cuts every sequence into consecutive groups of `frames` slices (the last
// partial group is kept if non-empty).
std::vector<rnnrbm::FrameSequence> chunk_frames(const PianoRollDataset& data, std::size_t frames);

// Manifest printed by the CLI and stored alongside generated data.
std::string manifest_json(const SeqDataset& data, const SeqClassParams& params);
std::string manifest_json(const PianoRollDataset& data, const PianoRollParams& params);

// JSONL, one sample per line. Malformed input throws ParseError with the line number.
void save_seq_dataset(const std::filesystem::path& path, const SeqDataset& data);
SeqDataset load_seq_dataset(const std::filesystem::path& path);
void save_pianoroll(const std::filesystem::path& path, const PianoRollDataset& data);
PianoRollDataset load_pianoroll(const std::filesystem::path& path);

// Convex problems: {"x": [...], "y": -1|1} per line.
void save_convex(const std::filesystem::path& path, const analysis::ConvexProblem& prob);
analysis::ConvexProblem load_convex(const std::filesystem::path& path, double reg);

std::string importance_to_json(const ImportanceTable& table);
ImportanceTable importance_from_json(const std::string& text);
void save_importance(const std::filesystem::path& path, const ImportanceTable& table);
// Validates the table; probs must sum to one.
ImportanceTable load_importance(const std::filesystem::path& path);

inline constexpr std::string_view kMetricsHeader = "epoch,split,loss,error_rate,grad_var,wall_ms";

std::string metrics_to_csv(const MetricsLog& log, bool header = true);
void save_metrics(const std::filesystem::path& path, const MetricsLog& log);
MetricsLog load_metrics(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& contents);

// FNV-1a 64 of the bytes, as 16 hex digits.
std::string content_hash(std::string_view bytes);

}  // namespace gradmine::io
