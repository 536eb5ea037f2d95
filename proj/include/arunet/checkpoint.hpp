#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "arunet/config.hpp"
#include "arunet/model.hpp"
#include "arunet/optim.hpp"

namespace arunet {

// On-disk container: 8-byte magic "ARUCKPT1", u64 LE header length, JSON
// header, then raw little-endian f64 payloads. See docs/checkpoint_format.md
// for the exact layout.
struct Checkpoint {
  Config config;
  int64_t step = 0;
  int64_t bytes_seen = 0;
  int64_t adam_t = 0;
  bool has_optimizer = false;
  struct Entry {
    std::vector<int64_t> shape;
    std::vector<double> values;
  };
  std::map<std::string, Entry> tensors;  // params, plus <name>.adam_m / .adam_v
};

void save_checkpoint(const std::string& path, const AruModel& model, const AdamW* opt,
                     int64_t step, int64_t bytes_seen, const Config& cfg);
Checkpoint load_checkpoint(const std::string& path);

// Overwrites model parameters (and optimizer moments when present) in place.
void restore_model(AruModel& model, const Checkpoint& ckpt);
void restore_optimizer(AdamW& opt, const Checkpoint& ckpt);

}  // namespace arunet
