#include "arunet/eval.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

#include "arunet/data.hpp"
#include "arunet/objective.hpp"

namespace arunet {

std::vector<int> uniform_baseline_mask(int64_t n, double rate) {
  if (!(rate > 0.0 && rate <= 1.0)) {
    throw std::runtime_error("uniform_baseline_mask: rate must be in (0,1], got " +
                             std::to_string(rate));
  }
  int64_t count = std::llround(static_cast<double>(n) * rate);
  count = std::max<int64_t>(1, std::min(count, n));
  std::vector<int> mask(static_cast<size_t>(n), 0);
  for (int64_t i = 0; i < count; ++i) {
    mask[static_cast<size_t>(i * n / count)] = 1;
  }
  return mask;
}

ParamCensus matrix_param_census(const AruModel& model) {
  ParamCensus c;
  for (const auto& [name, t] : model.params()) {
    if (t.ndim() != 2) continue;           // norm gains are vectors
    if (name == "embed.table") continue;   // lookup, no matmul
    if (name.rfind("mid.", 0) == 0) {
      c.token_level += t.numel();
    } else {
      c.byte_level += t.numel();
    }
  }
  return c;
}

int64_t flops_per_sequence(const ParamCensus& census, int64_t n, int64_t m) {
  if (m > n) throw std::runtime_error("flops_per_sequence: m > n");
  return 6 * (census.byte_level * n + census.token_level * m);
}

std::string EvalReport::csv_header() {
  return "bits_per_byte,achieved_rate,flops_per_sequence,precision,recall,"
         "precision_pm1,recall_pm1,mean_p_at_starts,mean_p_at_nonstarts";
}

namespace {
std::string opt_cell(const std::optional<double>& v) {
  if (!v) return "";
  std::ostringstream os;
  os.precision(17);
  os << *v;
  return os.str();
}
}  // namespace

std::string EvalReport::csv_row() const {
  std::ostringstream os;
  os.precision(17);
  os << bits_per_byte << ',' << achieved_rate << ',' << flops_per_sequence << ','
     << opt_cell(precision) << ',' << opt_cell(recall) << ',' << opt_cell(precision_pm1) << ','
     << opt_cell(recall_pm1) << ',' << opt_cell(mean_p_at_starts) << ','
     << opt_cell(mean_p_at_nonstarts);
  return os.str();
}

EvalReport evaluate(const AruModel& model, const std::vector<std::string>& docs,
                    const EvalOptions& opts,
                    const std::vector<std::vector<int64_t>>* ground_truth) {
  if (docs.empty()) throw std::runtime_error("evaluate: empty corpus");
  if (ground_truth && ground_truth->size() != docs.size()) {
    throw std::runtime_error("evaluate: ground truth rows do not match documents");
  }

  double total_nats = 0.0;
  int64_t total_bytes = 0;
  int64_t total_positions = 0, total_tokens = 0;
  int64_t flops_sum = 0;

  double p_at_starts = 0.0, p_at_nonstarts = 0.0;
  int64_t n_starts = 0, n_nonstarts = 0;
  int64_t pred_total = 0, gt_total = 0, hits_exact = 0, hits_pm1 = 0;
  int64_t gt_hit_exact = 0, gt_hit_pm1 = 0;

  const ParamCensus census = matrix_param_census(model);

  for (size_t di = 0; di < docs.size(); ++di) {
    const std::string& doc = docs[di];
    std::vector<int64_t> ids = encode_with_bos(doc, static_cast<int64_t>(doc.size()));
    std::vector<int64_t> targets(ids.begin() + 1, ids.end());

    Rng rng(derive_seed(opts.seed, 0x6576616cULL, static_cast<uint64_t>(di)));  // "eval"
    std::vector<int> forced;
    BoundaryDecision decision = BoundaryDecision::sample(rng);
    if (opts.uniform_mask) {
      forced = uniform_baseline_mask(static_cast<int64_t>(ids.size()), opts.uniform_rate);
      decision = BoundaryDecision::forced(forced);
    }

    ForwardTrace trace = model.forward(ids, decision, /*train_mode=*/opts.train_mode);
    SequenceLoss loss = autoregressive_losses(trace.lm_logits, trace.early_logits, targets);

    total_nats += loss.auto_loss.scalar_value();
    total_bytes += static_cast<int64_t>(targets.size());
    total_positions += static_cast<int64_t>(ids.size());
    total_tokens += trace.num_tokens;
    flops_sum += flops_per_sequence(census, static_cast<int64_t>(ids.size()), trace.num_tokens);

    if (ground_truth) {
      // Content byte c maps to model position c + 1 (position 0 is BOS).
      const std::vector<int64_t>& gt = (*ground_truth)[di];
      std::set<int64_t> gt_set(gt.begin(), gt.end());
      const Tensor& p = trace.boundary.p;
      for (int64_t c = 0; c < static_cast<int64_t>(doc.size()); ++c) {
        double prob = p.at(c + 1);
        if (gt_set.count(c)) {
          p_at_starts += prob;
          ++n_starts;
        } else {
          p_at_nonstarts += prob;
          ++n_nonstarts;
        }
      }
      std::vector<int64_t> predicted;
      for (int64_t c = 0; c < static_cast<int64_t>(doc.size()); ++c) {
        if (p.at(c + 1) > opts.boundary_threshold) predicted.push_back(c);
      }
      pred_total += static_cast<int64_t>(predicted.size());
      gt_total += static_cast<int64_t>(gt.size());
      for (int64_t c : predicted) {
        if (gt_set.count(c)) ++hits_exact;
        if (gt_set.count(c) || gt_set.count(c - 1) || gt_set.count(c + 1)) ++hits_pm1;
      }
      std::set<int64_t> pred_set(predicted.begin(), predicted.end());
      for (int64_t g : gt) {
        if (pred_set.count(g)) ++gt_hit_exact;
        if (pred_set.count(g) || pred_set.count(g - 1) || pred_set.count(g + 1)) ++gt_hit_pm1;
      }
    }
  }

  EvalReport rep;
  rep.bits_per_byte = bits_per_byte(total_nats, total_bytes);
  rep.achieved_rate = static_cast<double>(total_tokens) / static_cast<double>(total_positions);
  rep.flops_per_sequence = flops_sum / static_cast<int64_t>(docs.size());
  if (ground_truth) {
    if (n_starts > 0) rep.mean_p_at_starts = p_at_starts / static_cast<double>(n_starts);
    if (n_nonstarts > 0) rep.mean_p_at_nonstarts = p_at_nonstarts / static_cast<double>(n_nonstarts);
    if (pred_total > 0) {
      rep.precision = static_cast<double>(hits_exact) / static_cast<double>(pred_total);
      rep.precision_pm1 = static_cast<double>(hits_pm1) / static_cast<double>(pred_total);
    }
    if (gt_total > 0) {
      rep.recall = static_cast<double>(gt_hit_exact) / static_cast<double>(gt_total);
      rep.recall_pm1 = static_cast<double>(gt_hit_pm1) / static_cast<double>(gt_total);
    }
  }
  return rep;
}

}  // namespace arunet
