#include "repulsor/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "repulsor/optimizer.hpp"
#include "repulsor/rng.hpp"
#include "repulsor/sampler.hpp"

namespace repulsor {

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

DataStats compute_stats(const SampleSet& s) {
  DataStats st;
  st.mean.assign(s.dim, 0.0);
  st.stddev.assign(s.dim, 0.0);
  const int n = s.size();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < s.dim; ++j) st.mean[j] += s.row(i)[j];
  for (double& m : st.mean) m /= n;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < s.dim; ++j) {
      const double d = s.row(i)[j] - st.mean[j];
      st.stddev[j] += d * d;
    }
  for (double& v : st.stddev) v = std::max(std::sqrt(v / n), 1e-8);
  return st;
}

struct StepData {
  Tensor xt, target;
  std::vector<double> t_net;
  std::vector<int> classes;
};

struct Streams {
  Rng batch, noise, time, drop;
};

StepData draw_batch(const RunConfig& cfg, const NoiseProcess& process,
                    const std::vector<double>& std_points,
                    const std::vector<int>& labels, int n_classes,
                    Streams& rs) {
  const int b = cfg.batch_size, d = 2;
  const int n = static_cast<int>(labels.size());
  StepData sd;
  std::vector<int> idx(b);
  for (int i = 0; i < b; ++i) idx[i] = static_cast<int>(rs.batch.below(n));

  sd.classes.resize(b);
  for (int i = 0; i < b; ++i) {
    const bool drop = rs.drop.uniform() < cfg.drop_prob;
    sd.classes[i] = drop ? n_classes : labels[idx[i]];
  }

  std::vector<double> t_raw(b);
  sd.t_net.resize(b);
  if (process.kind == ProcessKind::FlowMatching) {
    for (int i = 0; i < b; ++i) {
      t_raw[i] = rs.time.uniform();
      sd.t_net[i] = t_raw[i];
    }
  } else {
    for (int i = 0; i < b; ++i) {
      t_raw[i] = 1.0 + static_cast<double>(rs.time.below(process.T));
      sd.t_net[i] = t_raw[i] / process.T;
    }
  }

  Tensor eps = Tensor::zeros({b, d});
  for (double& v : eps.data()) v = rs.noise.normal();

  sd.xt = Tensor::zeros({b, d});
  sd.target = Tensor::zeros({b, d});
  for (int i = 0; i < b; ++i) {
    const double* x0 = std_points.data() + static_cast<size_t>(idx[i]) * d;
    const double* e = eps.data().data() + static_cast<size_t>(i) * d;
    double* xt = sd.xt.data().data() + static_cast<size_t>(i) * d;
    double* tg = sd.target.data().data() + static_cast<size_t>(i) * d;
    if (process.kind == ProcessKind::FlowMatching) {
      const double t = t_raw[i];
      for (int j = 0; j < d; ++j) {
        xt[j] = (1.0 - t) * x0[j] + t * e[j];
        tg[j] = e[j] - x0[j];  // constant velocity of the linear path
      }
    } else {
      const double abar = process.alpha_bar(static_cast<int>(t_raw[i]));
      const double ca = std::sqrt(abar), ce = std::sqrt(1.0 - abar);
      for (int j = 0; j < d; ++j) {
        xt[j] = ca * x0[j] + ce * e[j];
        tg[j] = e[j];  // eps prediction
      }
    }
  }
  return sd;
}

struct ForwardOut {
  Tensor h_tap, l_diff, l_disp, total;
};

ForwardOut forward_step(const RunConfig& cfg, const Denoiser& net,
                        const ProjectionHead& head, MemoryBank* bank,
                        const StepData& sd,
                        const std::function<void(StepEvent)>& emit) {
  ForwardOut fo;
  fo.h_tap = net.forward_to_tap(sd.xt, sd.t_net, sd.classes);
  if (emit) emit(StepEvent::TapComputed);

  fo.l_disp = Tensor::scalar(0.0);
  if (cfg.regularizer != RegularizerKind::None) {
    Tensor z = head.project(fo.h_tap);
    if (emit) emit(StepEvent::Projected);
    if (cfg.regularizer == RegularizerKind::Repulsor) {
      bank->enqueue(z.detach());  // enqueue current batch, dequeue the oldest
      if (emit) emit(StepEvent::Enqueued);
      fo.l_disp = dispersive_loss_bank(z, *bank, cfg.tau);
    } else {
      fo.l_disp = dispersive_loss_inbatch(z, cfg.tau);
    }
    if (emit) emit(StepEvent::DispLossComputed);
  }

  Tensor pred = net.forward_from_tap(fo.h_tap);
  if (emit) emit(StepEvent::FullForwardDone);
  fo.l_diff = diff_loss(pred, sd.target);
  if (emit) emit(StepEvent::DiffLossComputed);
  const double gamma = cfg.regularizer == RegularizerKind::None ? 0.0 : cfg.gamma;
  fo.total = total_loss(fo.l_diff, fo.l_disp, gamma);
  if (emit) emit(StepEvent::TotalLossComputed);
  return fo;
}

SampleSet subset(const SampleSet& s, int k, Rng& rng) {
  if (k >= s.size()) return s;
  std::vector<int> idx(s.size());
  std::iota(idx.begin(), idx.end(), 0);
  for (int i = 0; i < k; ++i)
    std::swap(idx[i], idx[i + static_cast<int>(rng.below(s.size() - i))]);
  SampleSet out;
  out.dim = s.dim;
  for (int i = 0; i < k; ++i) {
    out.points.insert(out.points.end(), s.row(idx[i]), s.row(idx[i]) + s.dim);
    if (!s.labels.empty()) out.labels.push_back(s.labels[idx[i]]);
  }
  return out;
}

}  // namespace

const char* RunLog::header() {
  return "step,loss_diff,loss_disp,loss_total,swd,energy_dist,"
         "mean_pairwise_cos,uniformity,modes_covered,wallclock_seconds";
}

std::string RunLog::to_csv() const {
  std::ostringstream o;
  o << header() << "\n";
  for (const auto& r : rows) {
    o << r.step << ',' << fmt_double(r.loss_diff) << ',' << fmt_double(r.loss_disp)
      << ',' << fmt_double(r.loss_total) << ',' << fmt_double(r.swd) << ','
      << fmt_double(r.energy_dist) << ',' << fmt_double(r.mean_pairwise_cos) << ','
      << fmt_double(r.uniformity) << ',' << r.modes_covered << ','
      << fmt_double(r.wallclock_seconds) << "\n";
  }
  return o.str();
}

void RunLog::write_csv(const std::string& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("run log: cannot write '" + path + "'");
  out << to_csv();
}

std::vector<BenchRow> bench_negatives(const RunConfig& base,
                                      const std::vector<int>& capacities,
                                      const std::vector<uint64_t>& seeds) {
  if (capacities.empty() || seeds.empty())
    throw std::invalid_argument("bench-negatives: empty sweep");
  std::vector<BenchRow> rows;
  for (int k : capacities) {
    BenchRow row;
    row.bank_capacity = k;
    for (uint64_t s : seeds) {
      RunConfig cfg = base;
      cfg.regularizer = RegularizerKind::Repulsor;
      cfg.bank_capacity = k;
      cfg.seed = s;
      TrainResult res = train(cfg);
      row.final_swd.push_back(res.log.rows.back().swd);
    }
    std::vector<double> sorted = row.final_swd;
    std::sort(sorted.begin(), sorted.end());
    const size_t n = sorted.size();
    row.median_final_swd =
        n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string bench_table_csv(const std::vector<BenchRow>& rows) {
  std::ostringstream o;
  o << "K,median_final_swd,min_final_swd,max_final_swd\n";
  for (const auto& r : rows) {
    const auto [mn, mx] = std::minmax_element(r.final_swd.begin(), r.final_swd.end());
    o << r.bank_capacity << ',' << fmt_double(r.median_final_swd) << ','
      << fmt_double(*mn) << ',' << fmt_double(*mx) << "\n";
  }
  return o.str();
}

SampleSet generate_samples(const Denoiser& net, const NoiseProcess& process,
                           const DataStats& stats, int heun_steps,
                           double guidance_w, const std::vector<int>& classes,
                           Rng& rng) {
  SamplerConfig sc;
  sc.steps = heun_steps;
  sc.guidance_w = guidance_w;
  Tensor x = sample_classes(net, process, sc, classes, rng);
  const int n = x.rows(), d = x.cols();
  SampleSet out;
  out.dim = d;
  out.points.resize(static_cast<size_t>(n) * d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j)
      out.points[static_cast<size_t>(i) * d + j] =
          x.data()[static_cast<size_t>(i) * d + j] * stats.stddev[j] + stats.mean[j];
  out.labels = classes;
  return out;
}

Checkpoint make_checkpoint(const RunConfig& cfg, const Denoiser& net,
                           const ProjectionHead* head, const DataStats& stats) {
  Checkpoint ck;
  const auto& dc = net.config();
  ck.add_scalar("meta/data_dim", dc.data_dim);
  ck.add_scalar("meta/hidden", dc.hidden);
  ck.add_scalar("meta/blocks", dc.blocks);
  ck.add_scalar("meta/tap_index", dc.tap_index);
  ck.add_scalar("meta/n_classes", dc.n_classes);
  ck.add_scalar("meta/process", cfg.process == "ddpm" ? 1.0 : 0.0);
  ck.add_scalar("meta/ddpm_T", cfg.ddpm_T);
  ck.add_scalar("meta/beta_min", cfg.beta_min);
  ck.add_scalar("meta/beta_max", cfg.beta_max);
  ck.add_scalar("meta/guidance_w", cfg.guidance_w);
  ck.entries.push_back({"data/mean", {static_cast<int>(stats.mean.size())}, stats.mean});
  ck.entries.push_back(
      {"data/std", {static_cast<int>(stats.stddev.size())}, stats.stddev});
  for (const auto& [name, t] : net.named_parameters()) ck.add(name, t);
  if (head) {
    ck.add("head/weight", head->weight());
    ck.add("head/bias", head->bias());
  }
  return ck;
}

LoadedModel model_from_checkpoint(const Checkpoint& ck) {
  DenoiserConfig dc;
  dc.data_dim = static_cast<int>(ck.scalar("meta/data_dim"));
  dc.hidden = static_cast<int>(ck.scalar("meta/hidden"));
  dc.blocks = static_cast<int>(ck.scalar("meta/blocks"));
  dc.tap_index = static_cast<int>(ck.scalar("meta/tap_index"));
  dc.n_classes = static_cast<int>(ck.scalar("meta/n_classes"));

  Denoiser net(dc);
  for (auto& [name, t] : net.named_parameters()) {
    const auto& e = ck.require(name);
    if (e.shape != t.shape())
      throw std::runtime_error("checkpoint: shape mismatch for '" + name + "'");
    t.data() = e.data;
  }

  NoiseProcess process = ck.scalar("meta/process") == 1.0
                             ? linear_beta_schedule(
                                   static_cast<int>(ck.scalar("meta/ddpm_T")),
                                   ck.scalar("meta/beta_min"), ck.scalar("meta/beta_max"))
                             : flow_matching_process();

  DataStats stats;
  stats.mean = ck.require("data/mean").data;
  stats.stddev = ck.require("data/std").data;

  return LoadedModel{std::move(net), std::move(process), std::move(stats),
                     ck.scalar("meta/guidance_w")};
}

TrainResult train(const RunConfig& cfg, const TrainHooks& hooks) {
  cfg.validate();
  const auto t_start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
        .count();
  };

  SampleSet dataset = make_dataset(cfg.dataset, cfg.dataset_n, cfg.seed, true);
  const int n_classes = dataset_class_count(cfg.dataset);
  const DataStats stats = compute_stats(dataset);
  const int d = dataset.dim;

  std::vector<double> std_points(dataset.points.size());
  for (int i = 0; i < dataset.size(); ++i)
    for (int j = 0; j < d; ++j)
      std_points[static_cast<size_t>(i) * d + j] =
          (dataset.row(i)[j] - stats.mean[j]) / stats.stddev[j];

  const NoiseProcess process = cfg.process == "ddpm"
                                   ? linear_beta_schedule(cfg.ddpm_T, cfg.beta_min,
                                                          cfg.beta_max)
                                   : flow_matching_process();

  DenoiserConfig dc;
  dc.data_dim = d;
  dc.hidden = cfg.hidden;
  dc.blocks = cfg.blocks;
  dc.tap_index = cfg.tap_index;
  dc.n_classes = n_classes;
  Denoiser net(dc);
  {
    Rng init_rng(cfg.seed, "net-init");
    net.init(init_rng);
  }

  ProjectionHead head(cfg.hidden, cfg.proj_dim);
  if (cfg.regularizer != RegularizerKind::None) {
    Rng head_rng(cfg.seed, "head-init");
    head.init(head_rng);
  }

  MemoryBank bank(cfg.bank_capacity, cfg.proj_dim);

  std::vector<Tensor> params = net.parameters();
  if (cfg.regularizer != RegularizerKind::None)
    for (const auto& p : head.parameters()) params.push_back(p);
  AdamW opt(params, cfg.lr, cfg.beta1, cfg.beta2, cfg.weight_decay);

  Streams rs{Rng(cfg.seed, "batch"), Rng(cfg.seed, "noise"), Rng(cfg.seed, "time"),
             Rng(cfg.seed, "cfg-drop")};

  SampleSet ref_subset;
  {
    Rng ref_rng(cfg.seed, "eval-ref");
    ref_subset = subset(dataset, cfg.eval_n_samples, ref_rng);
  }
  auto centers = dataset_mode_centers(cfg.dataset);
  if (centers.empty()) centers = class_means(dataset);

  RunLog log;
  auto evaluate = [&](long step, const ForwardOut& fo) {
    Rng erng = Rng(cfg.seed, "eval").split(std::to_string(step));
    std::vector<int> classes(cfg.eval_n_samples);
    for (int& c : classes) c = static_cast<int>(erng.below(n_classes));
    SampleSet gen = generate_samples(net, process, stats, cfg.eval_sampler_steps,
                                     cfg.guidance_w, classes, erng);
    RunLogRow row;
    row.step = step;
    row.loss_diff = fo.l_diff.item();
    row.loss_disp = fo.l_disp.item();
    row.loss_total = fo.total.item();
    row.swd = sliced_wasserstein(gen, dataset, cfg.eval_n_projections, cfg.seed);
    row.energy_dist = energy_distance(gen, ref_subset);
    {
      NoGradGuard ng;
      const auto diag = dispersion_diagnostic(l2_normalize_rows(fo.h_tap.detach()));
      row.mean_pairwise_cos = diag.mean_pairwise_cos;
      row.uniformity = diag.uniformity;
    }
    row.modes_covered = mode_coverage(gen, centers, cfg.eval_mode_radius).covered;
    row.wallclock_seconds = elapsed();
    log.rows.push_back(row);
  };

  // Step-0 row: losses of the would-be first batch under the initial
  // parameters, computed on copies so no stream or bank state is consumed.
  {
    NoGradGuard ng;
    Streams probe_rs = rs;
    MemoryBank probe_bank = bank;
    StepData sd = draw_batch(cfg, process, std_points, dataset.labels, n_classes,
                             probe_rs);
    ForwardOut fo = forward_step(cfg, net, head, &probe_bank, sd, nullptr);
    evaluate(0, fo);
  }

  for (long step = 1; step <= cfg.steps; ++step) {
    auto emit = hooks.on_event
                    ? std::function<void(StepEvent)>(
                          [&](StepEvent e) { hooks.on_event(step, e); })
                    : std::function<void(StepEvent)>();
    StepData sd = draw_batch(cfg, process, std_points, dataset.labels, n_classes, rs);
    if (emit) emit(StepEvent::BatchSampled);
    ForwardOut fo = forward_step(cfg, net, head, &bank, sd, emit);
    opt.zero_grad();
    fo.total.backward();
    if (emit) emit(StepEvent::BackwardDone);
    opt.step();
    if (emit) emit(StepEvent::OptimizerStepDone);

    if (step % cfg.eval_every == 0 || step == cfg.steps) {
      if (!log.rows.empty() && log.rows.back().step == step) continue;
      evaluate(step, fo);
    }
  }

  Checkpoint ck = make_checkpoint(
      cfg, net, cfg.regularizer != RegularizerKind::None ? &head : nullptr, stats);

  return TrainResult{std::move(net),     std::move(head), std::move(log),
                     std::move(ck),      stats,           std::move(dataset)};
}

}  // namespace repulsor
