#include "sevpr/cli/commands.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "sevpr/dataset.hpp"
#include "sevpr/descriptor.hpp"
#include "sevpr/energy.hpp"
#include "sevpr/errors.hpp"
#include "sevpr/evaluation.hpp"
#include "sevpr/event_io.hpp"
#include "sevpr/parallel.hpp"
#include "sevpr/rng.hpp"
#include "sevpr/synth.hpp"
#include "sevpr/training.hpp"

namespace sevpr::cli {

namespace fs = std::filesystem;

namespace {

desc::ModelConfig model_config(const Options& o, Resolution res) {
  desc::ModelConfig cfg;
  cfg.t_steps = o.repr.time_steps;
  cfg.smlp_hidden = o.repr.smlp_hidden;
  cfg.eta_s = o.repr.eta_ms * 1e-3;
  cfg.scale = o.net.scale;
  cfg.input = res;
  if (cfg.t_steps < 1) throw config_error("repr.time_steps must be >= 1");
  if (cfg.eta_s <= 0) throw config_error("repr.eta_ms must be > 0");
  if (cfg.scale <= 0) throw config_error("net.scale must be > 0");
  return cfg;
}

std::string dataset_list_path(const std::string& dataset) {
  if (fs::is_directory(dataset))
    return (fs::path(dataset) / "dataset.txt").string();
  return dataset;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw io_error("cannot write: " + path);
  out << content;
}

std::vector<std::vector<double>> compute_descriptors(
    const desc::DescriptorModel& model,
    const std::vector<DatasetVolumes::Entry>& entries, int threads) {
  std::vector<std::vector<double>> out(entries.size());
  parallel_for(entries.size(), threads, [&](std::size_t i) {
    out[i] = model.describe_volume(entries[i].vol, entries[i].tss_seed).descriptor;
  });
  return out;
}

} // namespace

void cmd_synth(const Options& o, const std::string& out_dir, std::ostream& log) {
  io::SynthConfig cfg;
  cfg.n_places = o.synth.places;
  cfg.traverses = o.synth.traverses;
  cfg.resolution = {o.synth.width, o.synth.height};
  cfg.events_per_place = o.synth.events_per_place;
  cfg.noise_rate = o.synth.noise_rate;
  cfg.seed = o.seed;
  cfg.interval_s = o.synth.interval_s;
  cfg.spacing_m = o.synth.spacing_m;
  if (o.synth.format == "csv")
    cfg.csv_events = true;
  else if (o.synth.format != "binary")
    throw config_error("synth.format must be binary or csv");

  auto manifests = io::synth_dataset(cfg, out_dir);
  echo_options(o, out_dir);
  log << "wrote " << manifests.size() << " traverses, " << cfg.n_places
      << " places each, under " << out_dir << "\n";
}

void cmd_convert(const Options& o, const std::string& manifest,
                 const std::optional<std::string>& checkpoint,
                 const std::string& out_dir, std::ostream& log) {
  const DatasetManifest m = io::load_manifest(manifest);
  EventStream stream = io::load_events(m);
  std::vector<GeoPose> poses;
  if (!m.pose_path.empty()) poses = io::load_poses_csv(m.pose_path, m.coord_mode);
  auto volumes = io::slice_volumes(stream, m.interval_s, poses);

  desc::ModelConfig mc = model_config(o, m.resolution);
  snn::ParamRegistry reg;
  repr::SmlpEncoder encoder(mc.smlp_hidden, mc.t_steps, mc.lif);
  encoder.register_params(reg, "smlp");
  std::unique_ptr<desc::DescriptorModel> model;
  const repr::SmlpEncoder* enc = &encoder;
  if (checkpoint) {
    model = std::make_unique<desc::DescriptorModel>(mc);
    model->load(*checkpoint);
    enc = &model->encoder();
  } else {
    reg.init_all(o.seed);
  }

  fs::create_directories(out_dir);
  echo_options(o, out_dir);
  for (std::size_t i = 0; i < volumes.size(); ++i) {
    const std::uint64_t vol_seed =
        rng::hash(o.seed, {rng::label("tss.volume"), 0, std::uint64_t(i)});
    const SpikeTensor mcs = repr::build_mcs_tensor(volumes[i], *enc, mc.t_steps);
    const SpikeTensor tss = repr::sample_tss_tensor(
        repr::build_ts_map(volumes[i], mc.eta_s), mc.t_steps, vol_seed);
    char name[48];
    std::snprintf(name, sizeof name, "vol_%05zu_mcs.spk", i);
    save_spike_tensor(mcs, (fs::path(out_dir) / name).string());
    std::snprintf(name, sizeof name, "vol_%05zu_tss.spk", i);
    save_spike_tensor(tss, (fs::path(out_dir) / name).string());
  }
  write_file((fs::path(out_dir) / "summary.txt").string(),
             std::to_string(volumes.size()) + " volumes\n");
  log << volumes.size() << " volumes\n";
}

void cmd_train(const Options& o, const std::string& dataset,
               const std::string& out_dir, std::ostream& log) {
  auto manifests = io::load_dataset_list(dataset_list_path(dataset));
  if (manifests.size() < 2)
    throw config_error("train: dataset must list at least 2 traverses");
  DatasetVolumes data = load_dataset_volumes(manifests, o.seed);

  desc::DescriptorModel model(model_config(o, data.resolution));
  model.init(o.seed);

  train::TrainConfig tc;
  tc.margin = o.train.margin;
  tc.negatives = o.train.negatives;
  tc.lr = o.train.lr;
  tc.batch = o.train.batch;
  tc.cache_batch = o.train.cache_batch;
  tc.r_pos_m = o.train.r_pos_m;
  tc.r_neg_m = o.train.r_neg_m;
  tc.epochs = o.train.epochs;
  tc.max_steps = o.train.max_steps;
  tc.seed = o.seed;
  tc.optimizer = o.train.optimizer;
  tc.momentum = o.train.momentum;
  tc.checkpoint_every = o.train.checkpoint_every;
  tc.hard_negative_pool = o.train.hard_negative_pool;
  tc.threads = o.threads;

  echo_options(o, out_dir);
  auto res = train::train(model, data, tc, out_dir);
  log << "trained " << res.steps << " steps, skipped " << res.skipped_queries
      << " queries, checkpoint " << res.final_checkpoint << "\n";
}

void cmd_eval(const Options& o, const std::string& dataset,
              const std::string& checkpoint, const std::string& out_dir,
              std::ostream& log) {
  auto manifests = io::load_dataset_list(dataset_list_path(dataset));
  DatasetVolumes data = load_dataset_volumes(manifests, o.seed);
  if (data.queries.empty())
    throw config_error("eval: dataset must list at least 2 traverses");

  desc::DescriptorModel model(model_config(o, data.resolution));
  model.load(checkpoint);

  auto db_desc = compute_descriptors(model, data.db, o.threads);
  auto q_desc = compute_descriptors(model, data.queries, o.threads);
  std::vector<std::optional<GeoPose>> db_poses, q_poses;
  for (const auto& e : data.db) db_poses.push_back(e.vol.pose);
  for (const auto& e : data.queries) q_poses.push_back(e.vol.pose);

  auto result = eval::match_all(q_desc, db_desc, q_poses, db_poses);

  std::vector<double> phis = o.eval.phi_sweep;
  if (phis.empty()) phis = {o.eval.phi_m};
  auto reports = eval::sweep_thresholds(result, phis, o.eval.recall_ns);

  fs::create_directories(out_dir);
  echo_options(o, out_dir);
  write_file((fs::path(out_dir) / "metrics.csv").string(),
             eval::report_csv(reports));
  const std::string table = eval::report_table(reports);
  write_file((fs::path(out_dir) / "metrics.txt").string(), table);
  write_file((fs::path(out_dir) / "pr_curve.csv").string(),
             eval::pr_points_csv(eval::pr_curve(result, o.eval.phi_m)));
  log << table;
}

void cmd_energy(const Options& o, const EnergyArgs& args,
                const std::string& out_dir, std::ostream& log) {
  fs::create_directories(out_dir);
  echo_options(o, out_dir);
  char line[96];

  if (args.inject_mac_g || args.inject_ac_g) {
    const double mac = args.inject_mac_g.value_or(0.0) * 1e9;
    const double ac = args.inject_ac_g.value_or(0.0) * 1e9;
    const double mj = energy::energy_mj(ac, mac);
    std::snprintf(line, sizeof line, "%.3f mJ\n", mj);
    write_file((fs::path(out_dir) / "energy.txt").string(), line);
    log << line;
    return;
  }

  Resolution res{o.synth.width, o.synth.height};
  DatasetVolumes data;
  if (args.dataset) {
    auto manifests = io::load_dataset_list(dataset_list_path(*args.dataset));
    data = load_dataset_volumes(manifests, o.seed);
    res = data.resolution;
  }
  desc::DescriptorModel model(model_config(o, res));
  if (args.checkpoint)
    model.load(*args.checkpoint);
  else
    model.init(o.seed);

  energy::OpCountReport report;
  const auto graph = model.graph_info();
  if (o.energy.mode == "ann") {
    report = energy::count_ops_ann(graph);
  } else if (o.energy.mode == "snn-static") {
    report = energy::count_ops_static(graph, o.energy.static_rate);
  } else if (o.energy.mode == "snn-measured") {
    if (!args.dataset)
      throw config_error("energy: snn-measured mode needs --dataset for a "
                         "recorded input batch");
    const int n = std::min<int>(o.energy.batch_volumes, int(data.db.size()));
    if (n < 1) throw config_error("energy: dataset supplied no volumes");
    snn::OpRecorder rec;
    for (int i = 0; i < n; ++i)
      (void)model.describe_volume(data.db[i].vol, data.db[i].tss_seed, &rec);
    report = energy::count_ops_measured(graph, rec, n);
    auto rates = energy::measure_spike_rates(rec);
    std::string rate_csv = "layer,rate\n";
    for (const auto& r : rates.rows) {
      std::snprintf(line, sizeof line, "%s,%.6f\n", r.layer.c_str(), r.rate);
      rate_csv += line;
    }
    write_file((fs::path(out_dir) / "spike_rates.csv").string(), rate_csv);
  } else {
    throw config_error("energy.mode must be ann, snn-static or snn-measured");
  }

  write_file((fs::path(out_dir) / "energy_report.txt").string(),
             energy::report_table(report));
  write_file((fs::path(out_dir) / "energy_report.csv").string(),
             energy::report_csv(report));
  std::snprintf(line, sizeof line, "%.3f mJ\n", report.energy_mj());
  log << energy::report_table(report) << line;
}

} // namespace sevpr::cli
