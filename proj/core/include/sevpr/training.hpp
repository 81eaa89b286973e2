#ifndef SEVPR_TRAINING_HPP
#define SEVPR_TRAINING_HPP

#include <optional>
#include <string>
#include <vector>

#include "sevpr/dataset.hpp"
#include "sevpr/descriptor.hpp"

namespace sevpr::train {

struct TrainConfig {
  double margin = 0.1;
  int negatives = 5;
  double lr = 0.001;
  int batch = 2;           // triplets per optimizer step
  int cache_batch = 100;   // cache refresh period, in processed queries
  double r_pos_m = 15.0;
  double r_neg_m = 75.0;
  int epochs = 30;
  int max_steps = 500; // 0 = unlimited
  std::uint64_t seed = 1;
  std::string optimizer = "sgd"; // sgd | momentum | adam
  double momentum = 0.9;
  int checkpoint_every = 0; // 0 = final checkpoint only
  int hard_negative_pool = 1000;
  double bn_momentum = 0.1;
  int threads = 1;
};

// Hinge contrastive loss over one query:
//   sum_i max(0, |q - pos|^2 - |q - neg_i|^2 + margin)
double triplet_loss(const std::vector<double>& q, const std::vector<double>& pos,
                    const std::vector<std::vector<double>>& negs, double margin);

// Loss plus gradients w.r.t. every descriptor involved.
double triplet_loss_grad(const std::vector<double>& q,
                         const std::vector<double>& pos,
                         const std::vector<std::vector<double>>& negs,
                         double margin, std::vector<double>& g_q,
                         std::vector<double>& g_pos,
                         std::vector<std::vector<double>>& g_negs);

struct Triplet {
  int query = 0; // index into dataset.queries
  int positive = 0; // index into dataset.db
  std::vector<int> negatives; // indices into dataset.db
};

// Inference descriptors for mining, refreshed every cache_batch queries.
struct DescriptorCache {
  std::vector<std::vector<double>> db;
  std::vector<std::vector<double>> queries;
  int since_refresh = 0;

  void refresh(const desc::DescriptorModel& model, const DatasetVolumes& data,
               int threads);
};

// Positive: geographically nearest database volume within r_pos (none ->
// nullopt, the query is skipped). Negatives: the hardest (closest in
// descriptor space) of a seed-keyed random pool of database volumes beyond
// r_neg.
std::optional<Triplet> mine_triplet(int query_idx, const DatasetVolumes& data,
                                    const DescriptorCache& cache,
                                    const TrainConfig& cfg,
                                    std::uint64_t draw_key);

struct TraceRow {
  int step = 0;
  double loss = 0.0;
  int skipped_queries = 0;
};

struct TrainResult {
  int steps = 0;
  int skipped_queries = 0;
  std::vector<TraceRow> trace;
  double best_val_recall = 0.0;
  std::string final_checkpoint;
};

// Runs weakly supervised triplet training, writing loss_trace.csv plus
// final.sewckpt (and periodic/best checkpoints when configured) under
// out_dir. Deterministic for a fixed seed. A non-finite loss or gradient
// aborts with the last good checkpoint retained on disk.
TrainResult train(desc::DescriptorModel& model, const DatasetVolumes& data,
                  const TrainConfig& cfg, const std::string& out_dir);

} // namespace sevpr::train

#endif
