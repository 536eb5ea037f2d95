#pragma once

#include <cstdint>
#include <string>

namespace arunet {

// Architecture and loss hyperparameters. Defaults are the desk-scale setup;
// see README for the full key reference.
struct ModelConfig {
  int64_t embedding_dim = 64;
  int64_t num_heads = 4;
  int64_t n_down_layers = 2;
  int64_t n_mid_layers = 2;
  int64_t n_up_layers = 2;
  int64_t byte_window = 64;  // sliding window of byte-level layers; kFullAttention for "full"
  int64_t vocab_size = 258;  // 256 bytes + BOS + PAD
  int64_t seq_len = 256;     // content bytes per training sequence
  int64_t policy_window = 8;
  double logit_scale = 16.0;  // D
  double target_rate = 0.2;   // pi_bar_target
  double softcap = 30.0;      // policy and LM logit cap
  double gamma = 0.99;
  double lambda_pi = 1e-2;
  double lambda_target = 1e-2;
  double lambda_early = 1e-1;
  double rope_base = 10000.0;

  void validate() const;  // throws on violated invariants
};

struct TrainConfig {
  double learning_rate = 3e-3;
  int64_t warmup_bytes = 100000;
  int64_t training_bytes = 1000000;
  int64_t effective_batch_size = 16;
  int64_t micro_batch_size = 0;  // 0: one backward pass per batch
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double weight_decay = 0.0;
  uint64_t seed = 42;
  int64_t checkpoint_every = 200;  // steps
  bool grad_clip = false;
  double grad_clip_norm = 1.0;
  std::string boundary_mode = "policy";  // "policy" or "uniform"
  std::string data_path;
  std::string out_dir = ".";

  void validate() const;
};

struct Config {
  ModelConfig model;
  TrainConfig train;
};

// Flat key=value file, '#' comments. Unknown keys are an error.
Config parse_config_file(const std::string& path);
Config parse_config_text(const std::string& text);
void apply_config_line(Config& cfg, const std::string& key, const std::string& value);
std::string config_to_text(const Config& cfg);

}  // namespace arunet
