#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "arunet/rng.hpp"

namespace arunet {

// Byte vocabulary layout: raw bytes 0..255, then specials.
inline constexpr int64_t kBosId = 256;
inline constexpr int64_t kPadId = 257;  // reserved; unused at fixed length
inline constexpr int64_t kByteVocab = 258;

// A batch of fixed-length sequences: ids are BOS + L content bytes, targets
// are the content bytes (next-byte ids, shifted left by one).
struct ByteBatch {
  std::vector<std::vector<int64_t>> ids;      // B x (L+1)
  std::vector<std::vector<int64_t>> targets;  // B x L
  int64_t batch_size() const { return static_cast<int64_t>(ids.size()); }
  int64_t content_len() const { return ids.empty() ? 0 : static_cast<int64_t>(targets[0].size()); }
};

std::vector<int64_t> encode_with_bos(const std::string& doc, int64_t content_len);

// Corpus files: newline-delimited text (one document per line), or the
// length-prefixed binary container for documents with arbitrary bytes.
// Format sniffed by magic; see README.
std::vector<std::string> read_corpus_file(const std::string& path);
void write_corpus_text(const std::string& path, const std::vector<std::string>& docs);
void write_corpus_binary(const std::string& path, const std::vector<std::string>& docs);

struct IngestStats {
  int64_t docs_read = 0;
  int64_t docs_kept = 0;
  int64_t bytes_emitted = 0;
};

// Drops documents shorter than min_len, truncates the rest to exactly
// target_len, shuffles deterministically under seed.
std::vector<std::string> ingest_corpus(const std::string& path, int64_t min_len,
                                       int64_t target_len, uint64_t seed,
                                       IngestStats* stats = nullptr);

struct SyntheticSpec {
  std::vector<std::string> lexicon;  // word lengths 2..12
  std::string separator = "space";   // "none" | "space"
  double zipf_s = 1.2;
  uint64_t seed = 1;

  void validate() const;
};

struct SyntheticCorpus {
  std::vector<std::string> docs;                 // each exactly doc_len bytes
  std::vector<std::vector<int64_t>> boundaries;  // true word-start offsets per doc
};

// Documents are concatenations of Zipf-sampled lexicon words; the recorded
// boundaries are the byte offsets where each word starts.
SyntheticCorpus gen_synthetic(const SyntheticSpec& spec, int64_t n_docs, int64_t doc_len);

// Ground-truth boundary file: one line per document, comma-separated offsets.
void write_boundaries(const std::string& path, const std::vector<std::vector<int64_t>>& b);
std::vector<std::vector<int64_t>> read_boundaries(const std::string& path);

// SyntheticSpec file: key=value lines (words, separator, zipf_s, seed, n_docs,
// doc_len, val_docs); see README.
struct SynthJob {
  SyntheticSpec spec;
  int64_t n_docs = 256;
  int64_t doc_len = 256;
  int64_t val_docs = 32;
};
SynthJob parse_synth_spec_file(const std::string& path);

// Deterministic batch schedule over a fixed sequence pool: epoch e's order is
// a seed-derived permutation, batches are consecutive slices, the trailing
// partial batch of each epoch is dropped. batch(step) is pure, which is what
// makes resume exact.
class Batcher {
 public:
  Batcher(std::vector<std::string> sequences, int64_t batch_size, int64_t content_len,
          uint64_t seed);

  ByteBatch batch(int64_t step) const;
  int64_t batches_per_epoch() const { return batches_per_epoch_; }
  int64_t num_sequences() const { return static_cast<int64_t>(sequences_.size()); }

 private:
  std::vector<std::string> sequences_;
  int64_t batch_size_;
  int64_t content_len_;
  uint64_t seed_;
  int64_t batches_per_epoch_;
};

}  // namespace arunet
