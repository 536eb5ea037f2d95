#include "arunet/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "arunet/nn.hpp"

namespace arunet {

void ModelConfig::validate() const {
  auto fail = [](const std::string& msg) { throw std::runtime_error("ModelConfig: " + msg); };
  if (embedding_dim < 1 || num_heads < 1) fail("embedding_dim and num_heads must be positive");
  if (embedding_dim % num_heads != 0) fail("embedding_dim must be divisible by num_heads");
  if ((embedding_dim / num_heads) % 2 != 0) fail("head dimension must be even for RoPE");
  if (n_down_layers < 1 || n_mid_layers < 1 || n_up_layers < 1) fail("layer counts must be positive");
  if (byte_window < 1) fail("byte_window must be >= 1");
  if (vocab_size < 257) fail("vocab_size must be >= 257 (256 bytes + BOS)");
  if (seq_len < 1) fail("seq_len must be positive");
  if (policy_window < 0) fail("policy_window must be >= 0");
  if (logit_scale <= 0.0) fail("logit_scale must be positive");
  if (!(target_rate > 0.0 && target_rate < 1.0)) fail("target_rate must be in (0,1)");
  if (softcap <= 0.0) fail("softcap must be positive");
  if (gamma < 0.0 || gamma > 1.0) fail("gamma must be in [0,1]");
  if (lambda_pi < 0.0 || lambda_target < 0.0 || lambda_early < 0.0) fail("lambdas must be >= 0");
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& msg) { throw std::runtime_error("TrainConfig: " + msg); };
  if (learning_rate < 0.0) fail("learning_rate must be >= 0");
  if (warmup_bytes < 1 || training_bytes < 1) fail("warmup_bytes and training_bytes must be positive");
  if (warmup_bytes >= training_bytes) fail("warmup_bytes must be < training_bytes");
  if (effective_batch_size < 1) fail("effective_batch_size must be positive");
  if (micro_batch_size < 0) fail("micro_batch_size must be >= 0");
  if (micro_batch_size > 0 && effective_batch_size % micro_batch_size != 0) {
    fail("micro_batch_size must divide effective_batch_size");
  }
  if (weight_decay < 0.0) fail("weight_decay must be >= 0");
  if (checkpoint_every < 1) fail("checkpoint_every must be positive");
  if (boundary_mode != "policy" && boundary_mode != "uniform") {
    fail("boundary_mode must be 'policy' or 'uniform', got '" + boundary_mode + "'");
  }
}

namespace {

int64_t parse_i64(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    double d = std::stod(v, &pos);  // accepts 1e6 style counts
    if (pos != v.size()) throw std::invalid_argument(v);
    int64_t i = static_cast<int64_t>(d);
    if (static_cast<double>(i) != d) throw std::invalid_argument(v);
    return i;
  } catch (const std::exception&) {
    throw std::runtime_error("config: key '" + key + "' expects an integer, got '" + v + "'");
  }
}

double parse_f64(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw std::runtime_error("config: key '" + key + "' expects a number, got '" + v + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  throw std::runtime_error("config: key '" + key + "' expects a boolean, got '" + v + "'");
}

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r");
  size_t e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

}  // namespace

void apply_config_line(Config& cfg, const std::string& key, const std::string& value) {
  ModelConfig& m = cfg.model;
  TrainConfig& t = cfg.train;
  if (key == "embedding_dim") m.embedding_dim = parse_i64(key, value);
  else if (key == "num_heads") m.num_heads = parse_i64(key, value);
  else if (key == "n_down_layers") m.n_down_layers = parse_i64(key, value);
  else if (key == "n_mid_layers") m.n_mid_layers = parse_i64(key, value);
  else if (key == "n_up_layers") m.n_up_layers = parse_i64(key, value);
  else if (key == "byte_window") m.byte_window = value == "full" ? kFullAttention : parse_i64(key, value);
  else if (key == "vocab_size") m.vocab_size = parse_i64(key, value);
  else if (key == "seq_len") m.seq_len = parse_i64(key, value);
  else if (key == "policy_window") m.policy_window = parse_i64(key, value);
  else if (key == "logit_scale") m.logit_scale = parse_f64(key, value);
  else if (key == "target_rate") m.target_rate = parse_f64(key, value);
  else if (key == "softcap") m.softcap = parse_f64(key, value);
  else if (key == "gamma") m.gamma = parse_f64(key, value);
  else if (key == "lambda_pi") m.lambda_pi = parse_f64(key, value);
  else if (key == "lambda_target") m.lambda_target = parse_f64(key, value);
  else if (key == "lambda_early") m.lambda_early = parse_f64(key, value);
  else if (key == "rope_base") m.rope_base = parse_f64(key, value);
  else if (key == "learning_rate") t.learning_rate = parse_f64(key, value);
  else if (key == "warmup_bytes") t.warmup_bytes = parse_i64(key, value);
  else if (key == "training_bytes") t.training_bytes = parse_i64(key, value);
  else if (key == "effective_batch_size") t.effective_batch_size = parse_i64(key, value);
  else if (key == "micro_batch_size") t.micro_batch_size = parse_i64(key, value);
  else if (key == "beta1") t.beta1 = parse_f64(key, value);
  else if (key == "beta2") t.beta2 = parse_f64(key, value);
  else if (key == "adam_eps") t.adam_eps = parse_f64(key, value);
  else if (key == "weight_decay") t.weight_decay = parse_f64(key, value);
  else if (key == "seed") t.seed = static_cast<uint64_t>(parse_i64(key, value));
  else if (key == "checkpoint_every") t.checkpoint_every = parse_i64(key, value);
  else if (key == "grad_clip") t.grad_clip = parse_bool(key, value);
  else if (key == "grad_clip_norm") t.grad_clip_norm = parse_f64(key, value);
  else if (key == "boundary_mode") t.boundary_mode = value;
  else if (key == "data") t.data_path = value;
  else if (key == "out_dir") t.out_dir = value;
  else throw std::runtime_error("config: unknown key '" + key + "'");
}

Config parse_config_text(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
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
      throw std::runtime_error("config: line " + std::to_string(lineno) + " is not key=value: '" +
                               line + "'");
    }
    apply_config_line(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  cfg.model.validate();
  cfg.train.validate();
  return cfg;
}

Config parse_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("config: cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

std::string config_to_text(const Config& cfg) {
  std::ostringstream os;
  os.precision(17);
  const ModelConfig& m = cfg.model;
  const TrainConfig& t = cfg.train;
  os << "embedding_dim=" << m.embedding_dim << '\n'
     << "num_heads=" << m.num_heads << '\n'
     << "n_down_layers=" << m.n_down_layers << '\n'
     << "n_mid_layers=" << m.n_mid_layers << '\n'
     << "n_up_layers=" << m.n_up_layers << '\n'
     << "byte_window=" << (m.byte_window == kFullAttention ? std::string("full")
                                                           : std::to_string(m.byte_window)) << '\n'
     << "vocab_size=" << m.vocab_size << '\n'
     << "seq_len=" << m.seq_len << '\n'
     << "policy_window=" << m.policy_window << '\n'
     << "logit_scale=" << m.logit_scale << '\n'
     << "target_rate=" << m.target_rate << '\n'
     << "softcap=" << m.softcap << '\n'
     << "gamma=" << m.gamma << '\n'
     << "lambda_pi=" << m.lambda_pi << '\n'
     << "lambda_target=" << m.lambda_target << '\n'
     << "lambda_early=" << m.lambda_early << '\n'
     << "rope_base=" << m.rope_base << '\n'
     << "learning_rate=" << t.learning_rate << '\n'
     << "warmup_bytes=" << t.warmup_bytes << '\n'
     << "training_bytes=" << t.training_bytes << '\n'
     << "effective_batch_size=" << t.effective_batch_size << '\n'
     << "micro_batch_size=" << t.micro_batch_size << '\n'
     << "beta1=" << t.beta1 << '\n'
     << "beta2=" << t.beta2 << '\n'
     << "adam_eps=" << t.adam_eps << '\n'
     << "weight_decay=" << t.weight_decay << '\n'
     << "seed=" << t.seed << '\n'
     << "checkpoint_every=" << t.checkpoint_every << '\n'
     << "grad_clip=" << (t.grad_clip ? "true" : "false") << '\n'
     << "grad_clip_norm=" << t.grad_clip_norm << '\n'
     << "boundary_mode=" << t.boundary_mode << '\n';
  if (!t.data_path.empty()) os << "data=" << t.data_path << '\n';
  if (!t.out_dir.empty()) os << "out_dir=" << t.out_dir << '\n';
  return os.str();
}

}  // namespace arunet
