#include "arunet/trainer.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "arunet/checkpoint.hpp"
#include "arunet/eval.hpp"
#include "arunet/ops.hpp"

namespace arunet {

namespace {

Tensor stack_rows(const std::vector<Tensor>& rows) {
  Tensor m = reshape(rows[0], {1, rows[0].numel()});
  for (size_t i = 1; i < rows.size(); ++i) {
    m = concat_rows(m, reshape(rows[i], {1, rows[i].numel()}));
  }
  return m;
}

std::string format_row(int64_t step, const LossReport& r, double grad_norm) {
  std::ostringstream os;
  os.precision(17);
  os << step << ',' << r.auto_nats << ',' << r.early_nats << ',' << r.policy << ',' << r.target
     << ',' << r.total << ',' << r.bits_per_byte << ',' << r.mean_boundary_prob << ','
     << r.downsample_rate << ',' << grad_norm;
  return os.str();
}

}  // namespace

std::string metrics_csv_header() {
  return "step,L_auto,L_early,L_pi,L_target,L_total,bits_per_byte,mean_p,downsample_rate,"
         "grad_norm";
}

TrainStepResult train_step(AruModel& model, AdamW& opt, const ByteBatch& batch,
                           const Config& cfg, int64_t step, int64_t bytes_before) {
  const int64_t b = batch.batch_size();
  const int64_t content_len = batch.content_len();
  const int64_t n = content_len + 1;
  const bool uniform = cfg.train.boundary_mode == "uniform";
  const double gamma = cfg.model.gamma;

  std::vector<int> uniform_mask;
  if (uniform) uniform_mask = uniform_baseline_mask(n, cfg.model.target_rate);

  std::vector<ForwardTrace> traces;
  std::vector<SequenceLoss> seq_losses;
  std::vector<Rng> rngs;
  rngs.reserve(static_cast<size_t>(b));
  traces.reserve(static_cast<size_t>(b));
  for (int64_t row = 0; row < b; ++row) {
    rngs.emplace_back(derive_seed(cfg.train.seed, static_cast<uint64_t>(step),
                                  static_cast<uint64_t>(row)));
    BoundaryDecision decision = uniform ? BoundaryDecision::forced(uniform_mask)
                                        : BoundaryDecision::sample(rngs.back());
    traces.push_back(model.forward(batch.ids[static_cast<size_t>(row)], decision,
                                   /*train_mode=*/true));
    seq_losses.push_back(autoregressive_losses(traces.back().lm_logits,
                                               traces.back().early_logits,
                                               batch.targets[static_cast<size_t>(row)]));
  }

  // Batch totals for the autoregressive heads.
  Tensor auto_total = seq_losses[0].auto_loss;
  Tensor early_total = seq_losses[0].early_loss;
  for (int64_t row = 1; row < b; ++row) {
    auto_total = add(auto_total, seq_losses[static_cast<size_t>(row)].auto_loss);
    early_total = add(early_total, seq_losses[static_cast<size_t>(row)].early_loss);
  }

  Tensor pi_loss = Tensor::scalar(0.0);
  Tensor tgt_loss = Tensor::scalar(0.0);
  if (!uniform) {
    // Rewards and returns are detached by construction; decision position i
    // earns the discounted rewards of strictly later bytes.
    Tensor returns = Tensor::zeros({b, n});
    for (int64_t row = 0; row < b; ++row) {
      const SequenceLoss& sl = seq_losses[static_cast<size_t>(row)];
      std::vector<double> r(static_cast<size_t>(n), 0.0);
      std::vector<double> slot = rewards(sl.lm_logprobs, sl.early_logprobs);
      for (int64_t k = 0; k < content_len; ++k) r[static_cast<size_t>(k) + 1] = slot[static_cast<size_t>(k)];
      std::vector<double> g = discounted_returns(r, gamma);
      for (int64_t i = 0; i < n; ++i) returns.at(row, i) = g[static_cast<size_t>(i)];
    }
    Tensor advantages = batch_advantages(returns);

    std::vector<Tensor> logpi_rows, l_rows, p_rows;
    for (const ForwardTrace& t : traces) {
      logpi_rows.push_back(t.boundary.logpi);
      l_rows.push_back(t.boundary.l);
      p_rows.push_back(t.boundary.p);
    }
    pi_loss = policy_loss(stack_rows(logpi_rows), advantages);
    tgt_loss = target_loss(stack_rows(l_rows), stack_rows(p_rows), cfg.model.target_rate);
  }

  const double lambda_pi = uniform ? 0.0 : cfg.model.lambda_pi;
  const double lambda_target = uniform ? 0.0 : cfg.model.lambda_target;
  Tensor total = total_loss(auto_total, pi_loss, tgt_loss, early_total, lambda_pi, lambda_target,
                            cfg.model.lambda_early);

  const int64_t micro = cfg.train.micro_batch_size;
  if (micro == 0 || micro >= b) {
    backward(total);
  } else {
    // Gradient accumulation: per-chunk autoregressive sums, plus the batch-level
    // policy and target terms once. Equivalent to the single backward by
    // linearity; leaf grads accumulate across calls.
    for (int64_t lo = 0; lo < b; lo += micro) {
      int64_t hi = std::min(b, lo + micro);
      Tensor chunk = seq_losses[static_cast<size_t>(lo)].auto_loss;
      chunk = add(chunk, scale(seq_losses[static_cast<size_t>(lo)].early_loss,
                               cfg.model.lambda_early));
      for (int64_t row = lo + 1; row < hi; ++row) {
        chunk = add(chunk, seq_losses[static_cast<size_t>(row)].auto_loss);
        chunk = add(chunk, scale(seq_losses[static_cast<size_t>(row)].early_loss,
                                 cfg.model.lambda_early));
      }
      backward(chunk);
    }
    if (!uniform) {
      backward(add(scale(pi_loss, lambda_pi), scale(tgt_loss, lambda_target)));
    }
  }

  TrainStepResult res;
  res.grad_norm = global_grad_norm(opt.params());
  if (cfg.train.grad_clip) clip_gradients(opt.params(), cfg.train.grad_clip_norm);

  const int64_t batch_bytes = b * content_len;
  const double lr = lr_at(bytes_before + batch_bytes, cfg.train);
  res.applied = opt.step(lr);
  opt.zero_grad();

  LossReport& rep = res.report;
  rep.auto_nats = auto_total.scalar_value();
  rep.early_nats = early_total.scalar_value();
  rep.policy = pi_loss.scalar_value();
  rep.target = tgt_loss.scalar_value();
  rep.total = total.scalar_value();
  rep.bits_per_byte = bits_per_byte(rep.auto_nats, batch_bytes);
  double p_sum = 0.0;
  int64_t m_sum = 0;
  for (const ForwardTrace& t : traces) {
    for (double v : *t.boundary.p.data) p_sum += v;
    m_sum += t.num_tokens;
  }
  rep.mean_boundary_prob = p_sum / static_cast<double>(b * n);
  rep.downsample_rate = static_cast<double>(m_sum) / static_cast<double>(b * n);
  return res;
}

TrainResult train(AruModel& model, std::vector<std::string> sequences, const Config& cfg,
                  std::ostream* log, const std::string& resume_path) {
  cfg.model.validate();
  cfg.train.validate();
  namespace fs = std::filesystem;
  fs::create_directories(cfg.train.out_dir);

  Batcher batcher(std::move(sequences), cfg.train.effective_batch_size, cfg.model.seq_len,
                  cfg.train.seed);
  AdamW opt(model.params(), cfg.train.beta1, cfg.train.beta2, cfg.train.adam_eps,
            cfg.train.weight_decay);

  int64_t step = 0;
  int64_t bytes_seen = 0;
  if (!resume_path.empty()) {
    Checkpoint ckpt = load_checkpoint(resume_path);
    restore_model(model, ckpt);
    restore_optimizer(opt, ckpt);
    step = ckpt.step;
    bytes_seen = ckpt.bytes_seen;
    if (log) *log << "resumed from " << resume_path << " at step " << step << "\n";
  }

  const std::string metrics_path = cfg.train.out_dir + "/metrics.csv";
  const bool fresh_metrics = resume_path.empty() || !fs::exists(metrics_path);
  std::ofstream metrics(metrics_path, fresh_metrics ? std::ios::trunc : std::ios::app);
  if (!metrics) throw std::runtime_error("train: cannot write " + metrics_path);
  if (fresh_metrics) metrics << metrics_csv_header() << '\n';

  TrainResult result;
  const int64_t batch_bytes = cfg.train.effective_batch_size * cfg.model.seq_len;
  while (bytes_seen < cfg.train.training_bytes) {
    ByteBatch batch = batcher.batch(step);
    TrainStepResult sr = train_step(model, opt, batch, cfg, step, bytes_seen);
    bytes_seen += batch_bytes;
    ++step;
    if (!sr.applied) {
      ++result.aborted_steps;
      if (log) *log << "step " << step << ": non-finite gradient, update skipped\n";
    }
    metrics << format_row(step, sr.report, sr.grad_norm) << '\n';
    metrics.flush();
    if (log && step % 50 == 0) {
      *log << "step " << step << " bytes " << bytes_seen << " bpb " << sr.report.bits_per_byte
           << " p_mean " << sr.report.mean_boundary_prob << " rate "
           << sr.report.downsample_rate << "\n";
    }
    if (step % cfg.train.checkpoint_every == 0) {
      std::string path = cfg.train.out_dir + "/ckpt_" + std::to_string(step) + ".bin";
      save_checkpoint(path, model, &opt, step, bytes_seen, cfg);
      result.final_checkpoint = path;
    }
  }

  std::string final_path = cfg.train.out_dir + "/ckpt_final.bin";
  save_checkpoint(final_path, model, &opt, step, bytes_seen, cfg);
  result.final_checkpoint = final_path;
  result.steps = step;
  result.bytes_seen = bytes_seen;
  return result;
}

}  // namespace arunet
