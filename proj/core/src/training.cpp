#include "sevpr/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "sevpr/errors.hpp"
#include "sevpr/event_io.hpp"
#include "sevpr/parallel.hpp"
#include "sevpr/rng.hpp"

namespace sevpr::train {

namespace fs = std::filesystem;

double triplet_loss(const std::vector<double>& q, const std::vector<double>& pos,
                    const std::vector<std::vector<double>>& negs, double margin) {
  if (margin <= 0) throw config_error("triplet_loss: margin must be > 0");
  const double dp = desc::descriptor_distance_sq(q, pos);
  double loss = 0.0;
  for (const auto& n : negs) {
    const double dn = desc::descriptor_distance_sq(q, n);
    loss += std::max(0.0, dp - dn + margin);
  }
  return loss;
}

double triplet_loss_grad(const std::vector<double>& q,
                         const std::vector<double>& pos,
                         const std::vector<std::vector<double>>& negs,
                         double margin, std::vector<double>& g_q,
                         std::vector<double>& g_pos,
                         std::vector<std::vector<double>>& g_negs) {
  if (margin <= 0) throw config_error("triplet_loss: margin must be > 0");
  const std::size_t d = q.size();
  g_q.assign(d, 0.0);
  g_pos.assign(d, 0.0);
  g_negs.assign(negs.size(), std::vector<double>(d, 0.0));
  const double dp = desc::descriptor_distance_sq(q, pos);
  double loss = 0.0;
  for (std::size_t i = 0; i < negs.size(); ++i) {
    const double dn = desc::descriptor_distance_sq(q, negs[i]);
    const double h = dp - dn + margin;
    if (h <= 0.0) continue;
    loss += h;
    for (std::size_t j = 0; j < d; ++j) {
      const double qp = q[j] - pos[j];
      const double qn = q[j] - negs[i][j];
      g_q[j] += 2.0 * qp - 2.0 * qn;
      g_pos[j] += -2.0 * qp;
      g_negs[i][j] += 2.0 * qn;
    }
  }
  return loss;
}

void DescriptorCache::refresh(const desc::DescriptorModel& model,
                              const DatasetVolumes& data, int threads) {
  db.assign(data.db.size(), {});
  queries.assign(data.queries.size(), {});
  parallel_for(data.db.size(), threads, [&](std::size_t i) {
    db[i] = model.describe_volume(data.db[i].vol, data.db[i].tss_seed).descriptor;
  });
  parallel_for(data.queries.size(), threads, [&](std::size_t i) {
    queries[i] =
        model.describe_volume(data.queries[i].vol, data.queries[i].tss_seed)
            .descriptor;
  });
  since_refresh = 0;
}

std::optional<Triplet> mine_triplet(int query_idx, const DatasetVolumes& data,
                                    const DescriptorCache& cache,
                                    const TrainConfig& cfg,
                                    std::uint64_t draw_key) {
  const auto& q = data.queries[query_idx];
  if (!q.vol.pose) return std::nullopt;

  int best_pos = -1;
  double best_d = 0.0;
  std::vector<int> eligible_neg;
  for (std::size_t i = 0; i < data.db.size(); ++i) {
    if (!data.db[i].vol.pose) continue;
    const double d = io::geo_distance(*q.vol.pose, *data.db[i].vol.pose);
    if (d <= cfg.r_pos_m && (best_pos < 0 || d < best_d)) {
      best_pos = int(i);
      best_d = d;
    }
    if (d > cfg.r_neg_m) eligible_neg.push_back(int(i));
  }
  if (best_pos < 0) return std::nullopt;
  if (eligible_neg.empty())
    throw config_error("mine_triplet: no database volume beyond r_neg; "
                       "dataset cannot supply negatives");

  // Seed-keyed random pool, then the hardest by cached descriptor distance.
  if (int(eligible_neg.size()) > cfg.hard_negative_pool) {
    rng::Stream st(cfg.seed, rng::hash(0, {rng::label("train.negpool"), draw_key}));
    for (int j = 0; j < cfg.hard_negative_pool; ++j) {
      const int pick = j + int(st.below(std::uint64_t(eligible_neg.size() - j)));
      std::swap(eligible_neg[j], eligible_neg[pick]);
    }
    eligible_neg.resize(cfg.hard_negative_pool);
  }
  std::vector<std::pair<double, int>> scored;
  scored.reserve(eligible_neg.size());
  for (int id : eligible_neg)
    scored.emplace_back(
        desc::descriptor_distance_sq(cache.queries[query_idx], cache.db[id]), id);
  std::sort(scored.begin(), scored.end());

  Triplet t;
  t.query = query_idx;
  t.positive = best_pos;
  const int n = std::min<int>(cfg.negatives, int(scored.size()));
  for (int i = 0; i < n; ++i) t.negatives.push_back(scored[i].second);
  return t;
}

namespace {

class Optimizer {
public:
  Optimizer(const TrainConfig& cfg, std::size_t n) : cfg_(cfg) {
    if (cfg.optimizer == "momentum" || cfg.optimizer == "adam") m_.assign(n, 0.0);
    if (cfg.optimizer == "adam") v_.assign(n, 0.0);
    if (cfg.optimizer != "sgd" && cfg.optimizer != "momentum" &&
        cfg.optimizer != "adam")
      throw config_error("unknown optimizer: " + cfg.optimizer);
  }

  void step(const snn::ParamRegistry& reg, const std::vector<double>& g) {
    ++t_;
    for (const auto& e : reg.entries()) {
      if (!e.trainable) continue;
      for (std::size_t i = 0; i < e.n; ++i) {
        const std::size_t k = e.grad_off + i;
        if (cfg_.optimizer == "sgd") {
          e.w[i] -= cfg_.lr * g[k];
        } else if (cfg_.optimizer == "momentum") {
          m_[k] = cfg_.momentum * m_[k] + g[k];
          e.w[i] -= cfg_.lr * m_[k];
        } else {
          constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
          m_[k] = b1 * m_[k] + (1 - b1) * g[k];
          v_[k] = b2 * v_[k] + (1 - b2) * g[k] * g[k];
          const double mh = m_[k] / (1 - std::pow(b1, t_));
          const double vh = v_[k] / (1 - std::pow(b2, t_));
          e.w[i] -= cfg_.lr * mh / (std::sqrt(vh) + eps);
        }
      }
    }
  }

private:
  TrainConfig cfg_;
  std::vector<double> m_, v_;
  int t_ = 0;
};

void check_finite_grads(const snn::ParamRegistry& reg,
                        const std::vector<double>& g) {
  for (const auto& e : reg.entries()) {
    if (!e.trainable) continue;
    for (std::size_t i = 0; i < e.n; ++i)
      if (!std::isfinite(g[e.grad_off + i]))
        throw numeric_error("non-finite gradient in " + e.name);
  }
}

double validation_recall1(const desc::DescriptorModel& model,
                          const DatasetVolumes& data, double phi_m, int threads) {
  std::vector<std::vector<double>> db(data.db.size()), qs(data.queries.size());
  parallel_for(data.db.size(), threads, [&](std::size_t i) {
    db[i] = model.describe_volume(data.db[i].vol, data.db[i].tss_seed).descriptor;
  });
  parallel_for(data.queries.size(), threads, [&](std::size_t i) {
    qs[i] = model.describe_volume(data.queries[i].vol, data.queries[i].tss_seed)
                .descriptor;
  });
  int total = 0, hit = 0;
  for (std::size_t i = 0; i < qs.size(); ++i) {
    if (!data.queries[i].vol.pose) continue;
    ++total;
    int best = -1;
    double best_d = 0.0;
    for (std::size_t j = 0; j < db.size(); ++j) {
      const double d = desc::descriptor_distance_sq(qs[i], db[j]);
      if (best < 0 || d < best_d) {
        best = int(j);
        best_d = d;
      }
    }
    if (best >= 0 && data.db[best].vol.pose &&
        io::geo_distance(*data.queries[i].vol.pose, *data.db[best].vol.pose) <=
            phi_m)
      ++hit;
  }
  return total > 0 ? double(hit) / total : 0.0;
}

void write_trace(const std::vector<TraceRow>& trace, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw io_error("cannot write loss trace: " + path);
  out << "step,loss,skipped_queries\n";
  char buf[96];
  for (const auto& r : trace) {
    std::snprintf(buf, sizeof buf, "%d,%.9g,%d\n", r.step, r.loss,
                  r.skipped_queries);
    out << buf;
  }
}

} // namespace

TrainResult train(desc::DescriptorModel& model, const DatasetVolumes& data,
                  const TrainConfig& cfg, const std::string& out_dir) {
  if (data.queries.empty())
    throw config_error("train: dataset needs at least 2 traverses "
                       "(database + queries)");
  if (cfg.r_pos_m <= 0 || cfg.r_neg_m < cfg.r_pos_m)
    throw config_error("train: require r_neg >= r_pos > 0");
  fs::create_directories(out_dir);
  const std::string final_path = (fs::path(out_dir) / "final.sewckpt").string();

  TrainResult res;
  DescriptorCache cache;
  cache.refresh(model, data, cfg.threads);
  Optimizer opt(cfg, model.params().grad_size());
  snn::Checkpoint last_good = model.snapshot();

  struct Role {
    const DatasetVolumes::Entry* entry;
    std::vector<double> g; // upstream descriptor gradient
  };

  std::uint64_t draw_counter = 0;
  bool done = false;

  auto run_batch = [&](std::vector<Triplet>& batch) {
    const int n_roles_per = 2 + cfg.negatives;
    std::vector<Role> roles;
    roles.reserve(batch.size() * n_roles_per);
    for (const auto& t : batch) {
      roles.push_back({&data.queries[t.query], {}});
      roles.push_back({&data.db[t.positive], {}});
      for (int id : t.negatives) roles.push_back({&data.db[id], {}});
    }
    std::vector<desc::DescriptorModel::ForwardTape> tapes(roles.size());
    std::vector<desc::DescriptorModel::Output> outs(roles.size());
    parallel_for(roles.size(), cfg.threads, [&](std::size_t i) {
      outs[i] = model.forward(roles[i].entry->vol, roles[i].entry->tss_seed,
                              snn::Mode::Spiking, true, tapes[i]);
    });

    double loss_sum = 0.0;
    const double inv_batch = 1.0 / double(batch.size());
    std::size_t r = 0;
    for (const auto& t : batch) {
      const std::size_t q_at = r;
      const auto& q_desc = outs[r].descriptor;
      const auto& p_desc = outs[r + 1].descriptor;
      std::vector<std::vector<double>> negs(t.negatives.size());
      for (std::size_t i = 0; i < t.negatives.size(); ++i)
        negs[i] = outs[r + 2 + i].descriptor;
      std::vector<double> gq, gp;
      std::vector<std::vector<double>> gn;
      loss_sum += triplet_loss_grad(q_desc, p_desc, negs, cfg.margin, gq, gp, gn);
      for (double& v : gq) v *= inv_batch;
      for (double& v : gp) v *= inv_batch;
      roles[q_at].g = std::move(gq);
      roles[q_at + 1].g = std::move(gp);
      for (std::size_t i = 0; i < gn.size(); ++i) {
        for (double& v : gn[i]) v *= inv_batch;
        roles[q_at + 2 + i].g = std::move(gn[i]);
      }
      r += 2 + t.negatives.size();
    }
    const double loss = loss_sum * inv_batch;
    if (!std::isfinite(loss)) throw numeric_error("non-finite training loss");

    std::vector<snn::GradSink> sinks;
    sinks.reserve(roles.size());
    for (std::size_t i = 0; i < roles.size(); ++i)
      sinks.emplace_back(model.params());
    parallel_for(roles.size(), cfg.threads, [&](std::size_t i) {
      bool any = false;
      for (double v : roles[i].g)
        if (v != 0.0) {
          any = true;
          break;
        }
      if (any) model.backward(tapes[i], roles[i].g, sinks[i]);
    });
    snn::GradSink total(model.params());
    for (const auto& s : sinks) total.add(s);
    check_finite_grads(model.params(), total.g);

    for (auto& tape : tapes) model.update_bn_stats(tape, cfg.bn_momentum);
    opt.step(model.params(), total.g);
    return loss;
  };

  try {
    for (int epoch = 0; epoch < cfg.epochs && !done; ++epoch) {
      std::vector<int> order(data.queries.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = int(i);
      rng::Stream shuffle(cfg.seed,
                          rng::hash(0, {rng::label("train.order"),
                                        std::uint64_t(epoch)}));
      for (std::size_t i = 0; i + 1 < order.size(); ++i) {
        const std::size_t pick = i + shuffle.below(order.size() - i);
        std::swap(order[i], order[pick]);
      }

      std::vector<Triplet> batch;
      auto flush = [&](bool force) {
        if (batch.empty()) return;
        if (!force && int(batch.size()) < cfg.batch) return;
        const double loss = run_batch(batch);
        res.trace.push_back({res.steps, loss, res.skipped_queries});
        ++res.steps;
        batch.clear();
        last_good = model.snapshot();
        if (cfg.checkpoint_every > 0 && res.steps % cfg.checkpoint_every == 0) {
          char name[48];
          std::snprintf(name, sizeof name, "ckpt_%06d.sewckpt", res.steps);
          snn::save_checkpoint(last_good, (fs::path(out_dir) / name).string());
          const double rec =
              validation_recall1(model, data, cfg.r_neg_m, cfg.threads);
          if (rec >= res.best_val_recall) {
            res.best_val_recall = rec;
            snn::save_checkpoint(last_good,
                                 (fs::path(out_dir) / "best.sewckpt").string());
          }
        }
      };

      for (int qi : order) {
        if (cfg.max_steps > 0 && res.steps >= cfg.max_steps) {
          done = true;
          break;
        }
        if (cache.since_refresh >= cfg.cache_batch)
          cache.refresh(model, data, cfg.threads);
        ++cache.since_refresh;
        auto t = mine_triplet(qi, data, cache, cfg, draw_counter++);
        if (!t) {
          ++res.skipped_queries;
          continue;
        }
        batch.push_back(std::move(*t));
        flush(false);
      }
      if (!done) flush(true); // partial batch at epoch end
    }
  } catch (const numeric_error&) {
    snn::save_checkpoint(last_good, final_path);
    write_trace(res.trace, (fs::path(out_dir) / "loss_trace.csv").string());
    throw;
  }

  model.save(final_path);
  res.final_checkpoint = final_path;
  write_trace(res.trace, (fs::path(out_dir) / "loss_trace.csv").string());
  return res;
}

} // namespace sevpr::train
