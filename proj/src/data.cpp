#include "arunet/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace arunet {

namespace {
constexpr char kBinaryMagic[8] = {'A', 'R', 'U', 'C', 'O', 'R', 'P', '1'};

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r");
  size_t e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}
}  // namespace

std::vector<int64_t> encode_with_bos(const std::string& doc, int64_t content_len) {
  if (static_cast<int64_t>(doc.size()) < content_len) {
    throw std::runtime_error("encode_with_bos: document of " + std::to_string(doc.size()) +
                             " bytes is shorter than " + std::to_string(content_len));
  }
  std::vector<int64_t> ids(static_cast<size_t>(content_len) + 1);
  ids[0] = kBosId;
  for (int64_t i = 0; i < content_len; ++i) {
    ids[static_cast<size_t>(i) + 1] = static_cast<unsigned char>(doc[static_cast<size_t>(i)]);
  }
  return ids;
}

std::vector<std::string> read_corpus_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("corpus: cannot open '" + path + "'");
  char magic[8] = {};
  in.read(magic, 8);
  std::vector<std::string> docs;
  if (in.gcount() == 8 && std::memcmp(magic, kBinaryMagic, 8) == 0) {
    uint64_t count = 0;
    in.read(reinterpret_cast<char*>(&count), sizeof(count));
    if (!in) throw std::runtime_error("corpus: truncated binary header in '" + path + "'");
    for (uint64_t i = 0; i < count; ++i) {
      uint64_t len = 0;
      in.read(reinterpret_cast<char*>(&len), sizeof(len));
      std::string doc(len, '\0');
      in.read(doc.data(), static_cast<std::streamsize>(len));
      if (!in) throw std::runtime_error("corpus: truncated document in '" + path + "'");
      docs.push_back(std::move(doc));
    }
    return docs;
  }
  in.clear();
  in.seekg(0);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    docs.push_back(line);
  }
  return docs;
}

void write_corpus_text(const std::string& path, const std::vector<std::string>& docs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("corpus: cannot write '" + path + "'");
  for (const std::string& d : docs) {
    if (d.find('\n') != std::string::npos) {
      throw std::runtime_error("corpus: document contains newline; use the binary format");
    }
    out << d << '\n';
  }
}

void write_corpus_binary(const std::string& path, const std::vector<std::string>& docs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("corpus: cannot write '" + path + "'");
  out.write(kBinaryMagic, 8);
  uint64_t count = docs.size();
  out.write(reinterpret_cast<const char*>(&count), sizeof(count));
  for (const std::string& d : docs) {
    uint64_t len = d.size();
    out.write(reinterpret_cast<const char*>(&len), sizeof(len));
    out.write(d.data(), static_cast<std::streamsize>(len));
  }
}

std::vector<std::string> ingest_corpus(const std::string& path, int64_t min_len,
                                       int64_t target_len, uint64_t seed, IngestStats* stats) {
  if (min_len < target_len) {
    // Keeping shorter-than-target docs would produce ragged sequences.
    min_len = target_len;
  }
  std::vector<std::string> docs = read_corpus_file(path);
  IngestStats st;
  st.docs_read = static_cast<int64_t>(docs.size());
  std::vector<std::string> kept;
  for (std::string& d : docs) {
    if (static_cast<int64_t>(d.size()) < min_len) continue;
    d.resize(static_cast<size_t>(target_len));
    st.bytes_emitted += target_len;
    kept.push_back(std::move(d));
  }
  st.docs_kept = static_cast<int64_t>(kept.size());
  if (kept.empty()) throw std::runtime_error("ingest: no documents of length >= " +
                                             std::to_string(min_len) + " in '" + path + "'");
  Rng rng(derive_seed(seed, 0x696e67657374ULL));  // "ingest"
  rng.shuffle(kept);
  if (stats) *stats = st;
  return kept;
}

void SyntheticSpec::validate() const {
  if (lexicon.empty()) throw std::runtime_error("SyntheticSpec: empty lexicon");
  for (const std::string& w : lexicon) {
    if (w.size() < 2 || w.size() > 12) {
      throw std::runtime_error("SyntheticSpec: word '" + w + "' outside length range 2..12");
    }
  }
  if (separator != "none" && separator != "space") {
    throw std::runtime_error("SyntheticSpec: separator must be 'none' or 'space'");
  }
  if (zipf_s <= 0.0) throw std::runtime_error("SyntheticSpec: zipf_s must be positive");
}

namespace {

// Zipf over ranks 1..K: p(k) proportional to k^-s. Inverse-CDF sampling.
struct ZipfSampler {
  std::vector<double> cdf;
  explicit ZipfSampler(size_t k, double s) {
    cdf.resize(k);
    double z = 0.0;
    for (size_t i = 0; i < k; ++i) {
      z += std::pow(static_cast<double>(i + 1), -s);
      cdf[i] = z;
    }
    for (double& c : cdf) c /= z;
  }
  size_t sample(Rng& rng) const {
    double u = rng.uniform();
    return static_cast<size_t>(std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
  }
};

}  // namespace

SyntheticCorpus gen_synthetic(const SyntheticSpec& spec, int64_t n_docs, int64_t doc_len) {
  spec.validate();
  if (n_docs < 1 || doc_len < 1) throw std::runtime_error("gen_synthetic: bad sizes");
  ZipfSampler zipf(spec.lexicon.size(), spec.zipf_s);
  const bool space = spec.separator == "space";

  SyntheticCorpus out;
  out.docs.reserve(static_cast<size_t>(n_docs));
  out.boundaries.reserve(static_cast<size_t>(n_docs));
  for (int64_t d = 0; d < n_docs; ++d) {
    Rng rng(derive_seed(spec.seed, 0x646f63ULL, static_cast<uint64_t>(d)));  // "doc"
    std::string doc;
    std::vector<int64_t> starts;
    while (static_cast<int64_t>(doc.size()) < doc_len) {
      if (space && !doc.empty()) doc.push_back(' ');
      int64_t start = static_cast<int64_t>(doc.size());
      if (start < doc_len) starts.push_back(start);
      doc += spec.lexicon[zipf.sample(rng)];
    }
    doc.resize(static_cast<size_t>(doc_len));
    out.docs.push_back(std::move(doc));
    out.boundaries.push_back(std::move(starts));
  }
  return out;
}

void write_boundaries(const std::string& path, const std::vector<std::vector<int64_t>>& b) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("boundaries: cannot write '" + path + "'");
  for (const auto& row : b) {
    for (size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      out << row[i];
    }
    out << '\n';
  }
}

std::vector<std::vector<int64_t>> read_boundaries(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("boundaries: cannot open '" + path + "'");
  std::vector<std::vector<int64_t>> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<int64_t> row;
    std::istringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      if (!cell.empty()) row.push_back(std::stoll(cell));
    }
    out.push_back(std::move(row));
  }
  return out;
}

SynthJob parse_synth_spec_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("synth spec: cannot open '" + path + "'");
  SynthJob job;
  job.spec.lexicon.clear();
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("synth spec: line " + std::to_string(lineno) +
                               " is not key=value");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key == "words") {
      std::istringstream ss(value);
      std::string w;
      while (std::getline(ss, w, ',')) {
        w = trim(w);
        if (!w.empty()) job.spec.lexicon.push_back(w);
      }
    } else if (key == "separator") {
      job.spec.separator = value;
    } else if (key == "zipf_s") {
      job.spec.zipf_s = std::stod(value);
    } else if (key == "seed") {
      job.spec.seed = static_cast<uint64_t>(std::stoull(value));
    } else if (key == "n_docs") {
      job.n_docs = std::stoll(value);
    } else if (key == "doc_len") {
      job.doc_len = std::stoll(value);
    } else if (key == "val_docs") {
      job.val_docs = std::stoll(value);
    } else {
      throw std::runtime_error("synth spec: unknown key '" + key + "'");
    }
  }
  job.spec.validate();
  return job;
}

Batcher::Batcher(std::vector<std::string> sequences, int64_t batch_size, int64_t content_len,
                 uint64_t seed)
    : sequences_(std::move(sequences)), batch_size_(batch_size), content_len_(content_len),
      seed_(seed) {
  if (batch_size_ < 1) throw std::runtime_error("batcher: batch_size must be positive");
  for (const std::string& s : sequences_) {
    if (static_cast<int64_t>(s.size()) < content_len_) {
      throw std::runtime_error("batcher: sequence of " + std::to_string(s.size()) +
                               " bytes is shorter than seq_len " + std::to_string(content_len_));
    }
  }
  batches_per_epoch_ = static_cast<int64_t>(sequences_.size()) / batch_size_;
  if (batches_per_epoch_ < 1) {
    throw std::runtime_error("batcher: " + std::to_string(sequences_.size()) +
                             " sequences cannot fill a batch of " + std::to_string(batch_size_));
  }
}

ByteBatch Batcher::batch(int64_t step) const {
  if (step < 0) throw std::runtime_error("batcher: negative step");
  const int64_t epoch = step / batches_per_epoch_;
  const int64_t slot = step % batches_per_epoch_;

  std::vector<int64_t> perm(sequences_.size());
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(derive_seed(seed_, 0x64617461ULL, static_cast<uint64_t>(epoch)));  // "data"
  rng.shuffle(perm);

  ByteBatch b;
  for (int64_t r = 0; r < batch_size_; ++r) {
    const std::string& doc = sequences_[static_cast<size_t>(perm[slot * batch_size_ + r])];
    std::vector<int64_t> ids = encode_with_bos(doc, content_len_);
    b.targets.emplace_back(ids.begin() + 1, ids.end());
    b.ids.push_back(std::move(ids));
  }
  return b;
}

}  // namespace arunet
