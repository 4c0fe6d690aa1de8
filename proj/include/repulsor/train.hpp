#pragma once

#include <functional>
#include <string>
#include <vector>

#include "repulsor/checkpoint.hpp"
#include "repulsor/config.hpp"
#include "repulsor/dataset.hpp"
#include "repulsor/denoiser.hpp"
#include "repulsor/metrics.hpp"
#include "repulsor/process.hpp"
#include "repulsor/repulsor_loss.hpp"

namespace repulsor {

// Step stages in execution order, for order-fidelity instrumentation.
enum class StepEvent {
  BatchSampled,
  TapComputed,
  Projected,
  Enqueued,
  DispLossComputed,
  FullForwardDone,
  DiffLossComputed,
  TotalLossComputed,
  BackwardDone,
  OptimizerStepDone,
};

struct TrainHooks {
  std::function<void(long step, StepEvent)> on_event;
};

struct RunLogRow {
  long step = 0;
  double loss_diff = 0.0;
  double loss_disp = 0.0;
  double loss_total = 0.0;
  double swd = 0.0;
  double energy_dist = 0.0;
  double mean_pairwise_cos = 0.0;
  double uniformity = 0.0;
  int modes_covered = 0;
  double wallclock_seconds = 0.0;
};

struct RunLog {
  static const char* header();  // exact CSV header line
  std::vector<RunLogRow> rows;

  std::string to_csv() const;
  void write_csv(const std::string& path) const;
};

// Per-dimension standardization computed on the training set.
struct DataStats {
  std::vector<double> mean, stddev;
};

struct TrainResult {
  Denoiser net;
  ProjectionHead head;  // meaningful only when a regularizer was active
  RunLog log;
  Checkpoint checkpoint;
  DataStats stats;
  SampleSet dataset;  // raw (unstandardized) training data, with labels
};

// The full training loop: sample batch, corrupt, forward to the tap,
// project, enqueue, dispersive loss against the bank, finish the forward,
// diffusion loss, weighted sum, backward, AdamW step.
TrainResult train(const RunConfig& cfg, const TrainHooks& hooks = {});

// Checkpoint <-> model plumbing shared by the trainer and the CLI.
Checkpoint make_checkpoint(const RunConfig& cfg, const Denoiser& net,
                           const ProjectionHead* head, const DataStats& stats);

struct LoadedModel {
  Denoiser net;
  NoiseProcess process;
  DataStats stats;
  double guidance_w = 1.5;
};
LoadedModel model_from_checkpoint(const Checkpoint& ck);

// One sweep point per bank capacity: the base config re-run across seeds.
struct BenchRow {
  int bank_capacity = 0;
  double median_final_swd = 0.0;
  std::vector<double> final_swd;  // one per seed, in seed order
};
std::vector<BenchRow> bench_negatives(const RunConfig& base,
                                      const std::vector<int>& capacities,
                                      const std::vector<uint64_t>& seeds);
std::string bench_table_csv(const std::vector<BenchRow>& rows);

// Guided sampling in data space: standardized integration + unstandardize.
SampleSet generate_samples(const Denoiser& net, const NoiseProcess& process,
                           const DataStats& stats, int heun_steps,
                           double guidance_w, const std::vector<int>& classes,
                           Rng& rng);

}  // namespace repulsor
