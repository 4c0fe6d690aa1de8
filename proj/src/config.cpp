#include "repulsor/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "repulsor/dataset.hpp"

namespace repulsor {

std::string to_string(RegularizerKind k) {
  switch (k) {
    case RegularizerKind::None: return "none";
    case RegularizerKind::InBatch: return "inbatch";
    case RegularizerKind::Repulsor: return "repulsor";
  }
  return "?";
}

RegularizerKind regularizer_from_string(const std::string& s) {
  if (s == "none") return RegularizerKind::None;
  if (s == "inbatch") return RegularizerKind::InBatch;
  if (s == "repulsor") return RegularizerKind::Repulsor;
  throw std::invalid_argument("config: unknown regularizer '" + s + "'");
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::map<std::string, std::string> parse_flat_config(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                  " is not a key = value assignment");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw std::invalid_argument("config: empty key or value on line " +
                                  std::to_string(lineno));
    kv[key] = value;
  }
  return kv;
}

void RunConfig::validate() const {
  dataset_class_count(dataset);  // throws on unknown dataset
  if (process != "flow-matching" && process != "ddpm")
    throw std::invalid_argument("config: process must be flow-matching or ddpm");
  if (process == "ddpm") {
    if (ddpm_T < 1) throw std::invalid_argument("config: process.T must be >= 1");
    if (!(beta_min > 0.0 && beta_min <= beta_max && beta_max < 1.0))
      throw std::invalid_argument("config: invalid beta range");
  }
  if (blocks < 1 || hidden < 2 || hidden % 2 != 0)
    throw std::invalid_argument("config: invalid model dimensions");
  if (tap_index < 1 || tap_index > blocks)
    throw std::invalid_argument("config: tap_index must be in [1, blocks]");
  if (!(tau > 0.0)) throw std::invalid_argument("config: tau must be > 0");
  if (gamma < 0.0) throw std::invalid_argument("config: gamma must be >= 0");
  if (bank_capacity < 1 || proj_dim < 1)
    throw std::invalid_argument("config: K and D must be >= 1");
  if (regularizer == RegularizerKind::Repulsor && bank_capacity < batch_size)
    throw std::invalid_argument("config: repulsor requires K >= batch size");
  if (!(lr > 0.0) || !(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0))
    throw std::invalid_argument("config: invalid optimizer settings");
  if (weight_decay < 0.0)
    throw std::invalid_argument("config: weight decay must be >= 0");
  if (batch_size < 1 || steps < 1 || dataset_n < batch_size)
    throw std::invalid_argument("config: invalid batch/steps/dataset sizes");
  if (guidance_w < 0.0 || drop_prob < 0.0 || drop_prob > 1.0)
    throw std::invalid_argument("config: invalid cfg settings");
  if (sampler_steps < 1 || eval_every < 1 || eval_n_samples < 2 ||
      eval_sampler_steps < 1 || eval_n_projections < 1 || !(eval_mode_radius > 0.0))
    throw std::invalid_argument("config: invalid sampler/eval settings");
}

std::string RunConfig::to_text() const {
  std::ostringstream o;
  o.precision(17);
  o << "dataset.name = " << dataset << "\n";
  o << "dataset.n = " << dataset_n << "\n";
  o << "process.kind = " << process << "\n";
  o << "process.T = " << ddpm_T << "\n";
  o << "process.beta_min = " << beta_min << "\n";
  o << "process.beta_max = " << beta_max << "\n";
  o << "model.blocks = " << blocks << "\n";
  o << "model.hidden = " << hidden << "\n";
  o << "model.tap_index = " << tap_index << "\n";
  o << "regularizer.kind = " << to_string(regularizer) << "\n";
  o << "repulsor.tau = " << tau << "\n";
  o << "repulsor.gamma = " << gamma << "\n";
  o << "repulsor.K = " << bank_capacity << "\n";
  o << "repulsor.D = " << proj_dim << "\n";
  o << "optimizer.lr = " << lr << "\n";
  o << "optimizer.beta1 = " << beta1 << "\n";
  o << "optimizer.beta2 = " << beta2 << "\n";
  o << "optimizer.weight_decay = " << weight_decay << "\n";
  o << "train.batch_size = " << batch_size << "\n";
  o << "train.steps = " << steps << "\n";
  o << "train.seed = " << seed << "\n";
  o << "cfg.guidance_w = " << guidance_w << "\n";
  o << "cfg.drop_prob = " << drop_prob << "\n";
  o << "sampler.steps = " << sampler_steps << "\n";
  o << "eval.every = " << eval_every << "\n";
  o << "eval.n_samples = " << eval_n_samples << "\n";
  o << "eval.sampler_steps = " << eval_sampler_steps << "\n";
  o << "eval.n_projections = " << eval_n_projections << "\n";
  o << "eval.mode_radius = " << eval_mode_radius << "\n";
  return o.str();
}

RunConfig RunConfig::from_text(const std::string& text) {
  RunConfig c;
  auto kv = parse_flat_config(text);
  auto take_str = [&](const char* k, std::string& out) {
    auto it = kv.find(k);
    if (it != kv.end()) {
      out = it->second;
      kv.erase(it);
    }
  };
  auto take_int = [&](const char* k, int& out) {
    auto it = kv.find(k);
    if (it != kv.end()) {
      out = std::stoi(it->second);
      kv.erase(it);
    }
  };
  auto take_u64 = [&](const char* k, uint64_t& out) {
    auto it = kv.find(k);
    if (it != kv.end()) {
      out = std::stoull(it->second);
      kv.erase(it);
    }
  };
  auto take_dbl = [&](const char* k, double& out) {
    auto it = kv.find(k);
    if (it != kv.end()) {
      out = std::stod(it->second);
      kv.erase(it);
    }
  };

  take_str("dataset.name", c.dataset);
  take_int("dataset.n", c.dataset_n);
  take_str("process.kind", c.process);
  take_int("process.T", c.ddpm_T);
  take_dbl("process.beta_min", c.beta_min);
  take_dbl("process.beta_max", c.beta_max);
  take_int("model.blocks", c.blocks);
  take_int("model.hidden", c.hidden);
  take_int("model.tap_index", c.tap_index);
  std::string reg = to_string(c.regularizer);
  take_str("regularizer.kind", reg);
  c.regularizer = regularizer_from_string(reg);
  take_dbl("repulsor.tau", c.tau);
  take_dbl("repulsor.gamma", c.gamma);
  take_int("repulsor.K", c.bank_capacity);
  take_int("repulsor.D", c.proj_dim);
  take_dbl("optimizer.lr", c.lr);
  take_dbl("optimizer.beta1", c.beta1);
  take_dbl("optimizer.beta2", c.beta2);
  take_dbl("optimizer.weight_decay", c.weight_decay);
  take_int("train.batch_size", c.batch_size);
  take_int("train.steps", c.steps);
  take_u64("train.seed", c.seed);
  take_dbl("cfg.guidance_w", c.guidance_w);
  take_dbl("cfg.drop_prob", c.drop_prob);
  take_int("sampler.steps", c.sampler_steps);
  take_int("eval.every", c.eval_every);
  take_int("eval.n_samples", c.eval_n_samples);
  take_int("eval.sampler_steps", c.eval_sampler_steps);
  take_int("eval.n_projections", c.eval_n_projections);
  take_dbl("eval.mode_radius", c.eval_mode_radius);

  if (!kv.empty())
    throw std::invalid_argument("config: unknown key '" + kv.begin()->first + "'");
  c.validate();
  return c;
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_text(buf.str());
}

}  // namespace repulsor
