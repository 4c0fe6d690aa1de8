#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "repulsor/gradcheck.hpp"
#include "repulsor/train.hpp"

namespace {

using namespace repulsor;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_samples_csv(const std::string& path, const SampleSet& s,
                       bool with_labels) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  for (int i = 0; i < s.size(); ++i) {
    out << fmt(s.row(i)[0]);
    for (int j = 1; j < s.dim; ++j) out << ',' << fmt(s.row(i)[j]);
    if (with_labels) out << ',' << s.labels[i];
    out << "\n";
  }
}

SampleSet read_samples_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  SampleSet s;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> vals;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) vals.push_back(std::stod(cell));
    if (vals.size() < 2) throw std::runtime_error("samples: bad row '" + line + "'");
    const bool labeled = vals.size() == 3;
    if (s.dim == 0) s.dim = 2;
    s.points.push_back(vals[0]);
    s.points.push_back(vals[1]);
    if (labeled) s.labels.push_back(static_cast<int>(vals[2]));
  }
  if (!s.labels.empty() && static_cast<int>(s.labels.size()) != s.size())
    throw std::runtime_error("samples: mixed labeled and unlabeled rows");
  s.validate();
  return s;
}

std::vector<int> parse_int_list(const std::string& csv) {
  std::vector<int> out;
  std::stringstream ss(csv);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(std::stoi(cell));
  return out;
}

int cmd_train(const std::string& config_path, const std::string& metrics_path,
              const std::string& ckpt_path) {
  RunConfig cfg = RunConfig::from_file(config_path);
  TrainResult res = train(cfg);
  res.log.write_csv(metrics_path);
  res.checkpoint.save(ckpt_path);
  std::cout << "wrote " << metrics_path << " (" << res.log.rows.size()
            << " rows) and " << ckpt_path << "\n";
  return 0;
}

int cmd_sample(const std::string& ckpt_path, int n, int class_id, double w,
               bool w_set, int steps, uint64_t seed, const std::string& out_path) {
  LoadedModel m = model_from_checkpoint(Checkpoint::load(ckpt_path));
  if (!w_set) w = m.guidance_w;
  if (class_id < 0) w = 1.0;  // unconditional: guidance has nothing to contrast
  Rng rng(seed, "sample-cli");
  SampleSet s = generate_samples(m.net, m.process, m.stats, steps, w,
                                 std::vector<int>(n, class_id), rng);
  write_samples_csv(out_path, s, class_id >= 0);
  std::cout << "wrote " << out_path << " (" << n << " samples)\n";
  return 0;
}

int cmd_eval(const std::string& samples_path, const std::string& config_path) {
  const SampleSet samples = read_samples_csv(samples_path);
  RunConfig cfg = RunConfig::from_file(config_path);
  const SampleSet ref = make_dataset(cfg.dataset, cfg.dataset_n, cfg.seed, true);
  auto centers = dataset_mode_centers(cfg.dataset);
  if (centers.empty()) centers = class_means(ref);

  const double swd =
      sliced_wasserstein(samples, ref, cfg.eval_n_projections, cfg.seed);
  const double ed = energy_distance(samples, ref);
  const auto mc = mode_coverage(samples, centers, cfg.eval_mode_radius);
  std::cout << "swd," << fmt(swd) << "\n"
            << "energy_dist," << fmt(ed) << "\n"
            << "modes_covered," << mc.covered << "/" << centers.size() << "\n"
            << "high_quality_fraction," << fmt(mc.high_quality_fraction) << "\n";
  return 0;
}

int cmd_check_grad() {
  const auto results = run_gradient_suite();
  bool ok = true;
  for (const auto& r : results) {
    std::printf("%-28s max_rel_err=%.3e tol=%.0e %s\n", r.name.c_str(),
                r.max_rel_err, r.tol, r.pass ? "ok" : "FAIL");
    ok = ok && r.pass;
  }
  std::cout << (ok ? "gradient suite: all checks passed\n"
                   : "gradient suite: FAILURES\n");
  return ok ? 0 : 1;
}

int cmd_bench(const std::string& config_path, const std::string& k_list,
              const std::string& seed_list, int steps_override,
              const std::string& out_path) {
  RunConfig cfg = RunConfig::from_file(config_path);
  if (steps_override > 0) cfg.steps = steps_override;
  const std::vector<int> ks = parse_int_list(k_list);
  std::vector<uint64_t> seeds;
  for (int s : parse_int_list(seed_list)) seeds.push_back(static_cast<uint64_t>(s));

  const auto rows = bench_negatives(cfg, ks, seeds);
  const std::string table = bench_table_csv(rows);
  std::cout << table;
  if (!out_path.empty()) {
    std::ofstream out(out_path, std::ios::trunc);
    out << table;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"2-D diffusion trainer with a memory-bank dispersive regularizer"};
  app.require_subcommand(1);

  std::string config_path, metrics_path = "metrics.csv",
              ckpt_path = "checkpoint.rpls";
  auto* tr = app.add_subcommand("train", "train a model from a config file");
  tr->add_option("config", config_path, "run config file")->required();
  tr->add_option("--metrics", metrics_path, "metrics CSV output path");
  tr->add_option("--checkpoint", ckpt_path, "checkpoint output path");

  std::string s_ckpt, s_out = "samples.csv";
  int s_n = 256, s_class = -1, s_steps = 250;
  double s_w = 1.5;
  uint64_t s_seed = 1;
  auto* sa = app.add_subcommand("sample", "draw samples from a checkpoint");
  sa->add_option("checkpoint", s_ckpt, "checkpoint file")->required();
  sa->add_option("--n", s_n, "number of samples");
  sa->add_option("--class", s_class, "class id (< 0 for unconditional)");
  auto* w_opt = sa->add_option("--w", s_w, "guidance weight");
  sa->add_option("--steps", s_steps, "integrator steps");
  sa->add_option("--seed", s_seed, "sampling seed");
  sa->add_option("--out", s_out, "output CSV path");

  std::string e_samples, e_config;
  auto* ev = app.add_subcommand("eval", "score a samples file against a dataset");
  ev->add_option("samples", e_samples, "samples CSV")->required();
  ev->add_option("config", e_config, "reference run config")->required();

  app.add_subcommand("check-grad", "run the finite-difference gradient suite");

  std::string b_config, b_klist = "256,1024,4096", b_seeds = "1,2,3", b_out;
  int b_steps = 0;
  auto* be = app.add_subcommand("bench-negatives",
                                "sweep the memory bank capacity");
  be->add_option("config", b_config, "base run config")->required();
  be->add_option("--K-list", b_klist, "comma-separated capacities");
  be->add_option("--seeds", b_seeds, "comma-separated seeds");
  be->add_option("--steps", b_steps, "override training steps (0 keeps config)");
  be->add_option("--out", b_out, "also write the table to this path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand("train")) return cmd_train(config_path, metrics_path, ckpt_path);
    if (app.got_subcommand("sample"))
      return cmd_sample(s_ckpt, s_n, s_class, s_w, w_opt->count() > 0, s_steps,
                        s_seed, s_out);
    if (app.got_subcommand("eval")) return cmd_eval(e_samples, e_config);
    if (app.got_subcommand("check-grad")) return cmd_check_grad();
    if (app.got_subcommand("bench-negatives"))
      return cmd_bench(b_config, b_klist, b_seeds, b_steps, b_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
