#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "repulsor/optimizer.hpp"
#include "repulsor/rng.hpp"
#include "repulsor/sampler.hpp"
#include "repulsor/train.hpp"

using namespace repulsor;

namespace {

RunConfig tiny_config() {
  RunConfig c;
  c.dataset_n = 512;
  c.batch_size = 32;
  c.steps = 30;
  c.eval_every = 10;
  c.hidden = 32;
  c.blocks = 2;
  c.tap_index = 1;
  c.bank_capacity = 64;
  c.proj_dim = 8;
  c.eval_n_samples = 32;
  c.eval_sampler_steps = 6;
  c.eval_n_projections = 8;
  return c;
}

// CSV text with the wallclock column cut off (the only non-deterministic one)
std::string strip_wallclock(const std::string& csv) {
  std::istringstream in(csv);
  std::ostringstream out;
  std::string line;
  while (std::getline(in, line)) {
    const auto pos = line.rfind(',');
    out << line.substr(0, pos) << "\n";
  }
  return out.str();
}

}  // namespace

TEST_CASE("rng streams are named, independent, and splittable") {
  Rng a(1, "alpha"), b(1, "beta"), a2(1, "alpha");
  CHECK(a.next_u64() != b.next_u64());
  Rng fresh(1, "alpha");
  CHECK(fresh.next_u64() == a2.next_u64());

  Rng parent(7, "p");
  Rng c1 = parent.split("x"), c2 = parent.split("y");
  CHECK(c1.next_u64() != c2.next_u64());

  // draws stay in range and normals are finite
  Rng r(3, "range");
  for (int i = 0; i < 1000; ++i) {
    const double u = r.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(r.below(17) < 17);
    CHECK(std::isfinite(r.normal()));
  }
}

TEST_CASE("config parsing and validation") {
  RunConfig c;
  const std::string text = c.to_text();
  RunConfig back = RunConfig::from_text(text);
  CHECK(back.to_text() == text);

  RunConfig parsed = RunConfig::from_text(
      "dataset.name = moons  # comment\n\n# full-line comment\ntrain.steps = 5\n");
  CHECK(parsed.dataset == "moons");
  CHECK(parsed.steps == 5);

  CHECK_THROWS(RunConfig::from_text("no.such.key = 1\n"));
  CHECK_THROWS(RunConfig::from_text("dataset.name\n"));
  CHECK_THROWS(RunConfig::from_text("repulsor.K = 64\ntrain.batch_size = 128\n"));
  CHECK_THROWS(RunConfig::from_text("dataset.name = unknown\n"));
  CHECK_THROWS(RunConfig::from_text("model.tap_index = 9\n"));
  CHECK_THROWS(RunConfig::from_text("repulsor.tau = 0\n"));

  // K < B is fine without the bank
  RunConfig ok = RunConfig::from_text(
      "regularizer.kind = none\nrepulsor.K = 64\ntrain.batch_size = 128\n");
  CHECK(ok.bank_capacity == 64);
}

TEST_CASE("datasets are stratified and reproducible") {
  SampleSet a = make_dataset("gauss8", 8000, 4, true);
  REQUIRE(a.size() == 8000);
  std::vector<int> counts(8, 0);
  for (int l : a.labels) ++counts[l];
  for (int c : counts) CHECK(c == 1000);

  SampleSet b = make_dataset("gauss8", 8000, 4, true);
  CHECK(a.points == b.points);
  CHECK(a.labels == b.labels);

  // per-mode sample mean within 3 sigma / sqrt(n/8) of the analytic center
  const auto centers = dataset_mode_centers("gauss8");
  const double bound = 3.0 * 0.05 / std::sqrt(1000.0);
  for (int k = 0; k < 8; ++k) {
    double mx = 0, my = 0;
    int cnt = 0;
    for (int i = 0; i < a.size(); ++i)
      if (a.labels[i] == k) {
        mx += a.row(i)[0];
        my += a.row(i)[1];
        ++cnt;
      }
    mx /= cnt;
    my /= cnt;
    CHECK(std::abs(mx - centers[k][0]) < bound);
    CHECK(std::abs(my - centers[k][1]) < bound);
  }

  SampleSet cb = make_dataset("checkerboard", 1000, 1, true);
  for (int i = 0; i < cb.size(); ++i) {
    CHECK(cb.row(i)[0] >= -2.0);
    CHECK(cb.row(i)[0] <= 2.0);
    CHECK(cb.row(i)[1] >= -2.0);
    CHECK(cb.row(i)[1] <= 2.0);
  }
  CHECK_THROWS(make_dataset("nope", 100, 1, true));

  CHECK(class_means(cb).size() == 8);
}

TEST_CASE("adamw basics") {
  Tensor p = Tensor::from({1}, {1.0}, true);
  AdamW opt({p}, 0.1);
  opt.step();  // no grad: zero gradient at zero state
  CHECK(p.data()[0] == 1.0);

  // g = 1 at step 1 moves the parameter down by about lr
  Tensor q = Tensor::from({1}, {1.0}, true);
  AdamW o2({q}, 0.1);
  mul(q, 1.0).backward();
  o2.step();
  CHECK(q.data()[0] == doctest::Approx(0.9).epsilon(1e-7));
}

TEST_CASE("adamw matches a scalar reference trace") {
  const double lr = 0.05, b1 = 0.9, b2 = 0.95, wd = 0.01, eps = 1e-8;
  Tensor p = Tensor::from({1}, {0.7}, true);
  AdamW opt({p}, lr, b1, b2, wd);

  double ref = 0.7, m = 0, v = 0;
  Rng rng(5, "adam-trace");
  for (int t = 1; t <= 10; ++t) {
    const double g = rng.uniform(-1, 1);
    opt.zero_grad();
    mul(p, g).backward();
    opt.step();

    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const double mhat = m / (1 - std::pow(b1, t));
    const double vhat = v / (1 - std::pow(b2, t));
    ref -= lr * (mhat / (std::sqrt(vhat) + eps) + wd * ref);
    CHECK(std::abs(p.data()[0] - ref) < 1e-12);
  }
}

TEST_CASE("checkpoint round trip") {
  Checkpoint ck;
  ck.add_scalar("meta/x", 2.5);
  ck.add("w", Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6}));
  const auto bytes = ck.serialize();
  Checkpoint back = Checkpoint::deserialize(bytes);
  CHECK(back.scalar("meta/x") == 2.5);
  CHECK(back.require("w").shape == std::vector<int>{2, 3});
  CHECK(back.require("w").data == ck.require("w").data);
  CHECK(back.serialize() == bytes);  // save -> load -> save is byte-identical

  auto corrupted = bytes;
  corrupted[bytes.size() / 2] ^= 0x40;
  CHECK_THROWS(Checkpoint::deserialize(corrupted));
  CHECK_THROWS(ck.scalar("missing"));
  CHECK_THROWS(ck.scalar("w"));  // tensor entry is not a scalar
}

TEST_CASE("training is deterministic and logs the exact header") {
  RunConfig cfg = tiny_config();
  TrainResult r1 = train(cfg);
  TrainResult r2 = train(cfg);
  CHECK(std::string(RunLog::header()) ==
        "step,loss_diff,loss_disp,loss_total,swd,energy_dist,mean_pairwise_cos,"
        "uniformity,modes_covered,wallclock_seconds");
  CHECK(strip_wallclock(r1.log.to_csv()) == strip_wallclock(r2.log.to_csv()));
  CHECK(r1.checkpoint.serialize() == r2.checkpoint.serialize());

  // steps strictly increasing, one row per eval point plus step 0
  long prev = -1;
  for (const auto& row : r1.log.rows) {
    CHECK(row.step > prev);
    prev = row.step;
  }
  CHECK(r1.log.rows.front().step == 0);
  CHECK(r1.log.rows.back().step == cfg.steps);

  // bounded dispersive loss at every logged step
  for (const auto& row : r1.log.rows) {
    CHECK(row.loss_disp <= 1e-12);
    CHECK(row.loss_disp >= -4.0 / cfg.tau - 1e-12);
  }
}

TEST_CASE("gamma = 0 reproduces the unregularized loss_diff column") {
  RunConfig none = tiny_config();
  none.regularizer = RegularizerKind::None;
  RunConfig zero = tiny_config();
  zero.gamma = 0.0;

  TrainResult a = train(none);
  TrainResult b = train(zero);
  REQUIRE(a.log.rows.size() == b.log.rows.size());
  for (size_t i = 0; i < a.log.rows.size(); ++i)
    CHECK(a.log.rows[i].loss_diff == b.log.rows[i].loss_diff);
}

TEST_CASE("training emits step events in the prescribed order") {
  RunConfig cfg = tiny_config();
  cfg.steps = 5;
  cfg.eval_every = 5;
  std::vector<std::vector<StepEvent>> per_step(cfg.steps + 1);
  TrainHooks hooks;
  hooks.on_event = [&](long step, StepEvent e) { per_step[step].push_back(e); };
  train(cfg, hooks);

  const std::vector<StepEvent> expect{
      StepEvent::BatchSampled,     StepEvent::TapComputed,
      StepEvent::Projected,        StepEvent::Enqueued,
      StepEvent::DispLossComputed, StepEvent::FullForwardDone,
      StepEvent::DiffLossComputed, StepEvent::TotalLossComputed,
      StepEvent::BackwardDone,     StepEvent::OptimizerStepDone};
  for (int s = 1; s <= cfg.steps; ++s) CHECK(per_step[s] == expect);
  CHECK(per_step[0].empty());
}

TEST_CASE("invalid configs are rejected before any training") {
  RunConfig bad = tiny_config();
  bad.bank_capacity = 8;  // < batch_size with the bank active
  TrainHooks hooks;
  bool touched = false;
  hooks.on_event = [&](long, StepEvent) { touched = true; };
  CHECK_THROWS(train(bad, hooks));
  CHECK_FALSE(touched);
}

TEST_CASE("checkpointed model reproduces in-memory samples") {
  RunConfig cfg = tiny_config();
  TrainResult res = train(cfg);

  LoadedModel m = model_from_checkpoint(
      Checkpoint::deserialize(res.checkpoint.serialize()));
  const std::vector<int> classes{0, 1, 2, 3, 4, 5};
  Rng r1(9, "cmp"), r2(9, "cmp");
  NoiseProcess proc = flow_matching_process();
  SampleSet a = generate_samples(res.net, proc, res.stats, 6, cfg.guidance_w,
                                 classes, r1);
  SampleSet b = generate_samples(m.net, m.process, m.stats, 6, m.guidance_w,
                                 classes, r2);
  REQUIRE(a.points.size() == b.points.size());
  for (size_t i = 0; i < a.points.size(); ++i) CHECK(a.points[i] == b.points[i]);
}

TEST_CASE("bank capacity sweep emits one row per K") {
  RunConfig cfg = tiny_config();
  cfg.steps = 12;
  cfg.eval_every = 12;
  const auto rows = bench_negatives(cfg, {32, 64}, {1, 2});
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].bank_capacity == 32);
  CHECK(rows[1].bank_capacity == 64);
  CHECK(rows[0].final_swd.size() == 2);
  const std::string table = bench_table_csv(rows);
  CHECK(table.find("K,median_final_swd") == 0);
  CHECK_THROWS(bench_negatives(cfg, {}, {1}));
}

TEST_CASE("csv writing round-trips through a file") {
  RunConfig cfg = tiny_config();
  cfg.steps = 10;
  TrainResult res = train(cfg);
  const std::string path = "harness_test_metrics.csv";
  res.log.write_csv(path);
  std::ifstream in(path);
  std::stringstream buf;
  buf << in.rdbuf();
  CHECK(buf.str() == res.log.to_csv());
  std::remove(path.c_str());
}
