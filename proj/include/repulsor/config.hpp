#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace repulsor {

enum class RegularizerKind { None, InBatch, Repulsor };

std::string to_string(RegularizerKind k);
RegularizerKind regularizer_from_string(const std::string& s);

// One experiment. Parsed from flat `section.key = value` text, `#` comments.
struct RunConfig {
  // dataset
  std::string dataset = "gauss8";
  int dataset_n = 8000;

  // process
  std::string process = "flow-matching";  // or "ddpm"
  int ddpm_T = 1000;
  double beta_min = 1e-4;
  double beta_max = 0.02;

  // model
  int blocks = 6;
  int hidden = 128;
  int tap_index = 4;  // round(2/3 * blocks) for the default depth

  // regularizer
  RegularizerKind regularizer = RegularizerKind::Repulsor;
  double tau = 0.5;
  double gamma = 0.25;
  int bank_capacity = 4096;  // K
  int proj_dim = 32;         // D

  // optimizer
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.95;
  double weight_decay = 0.0;

  // training
  int batch_size = 128;
  int steps = 20000;
  uint64_t seed = 1;

  // classifier-free guidance
  double guidance_w = 1.5;
  double drop_prob = 0.1;

  // sampling
  int sampler_steps = 250;

  // periodic evaluation
  int eval_every = 1000;
  int eval_n_samples = 256;
  int eval_sampler_steps = 64;
  int eval_n_projections = 64;
  double eval_mode_radius = 0.15;

  void validate() const;  // throws on invariant violations, before any compute
  std::string to_text() const;

  static RunConfig from_text(const std::string& text);
  static RunConfig from_file(const std::string& path);
};

// `section.key = value` lines into a map; unknown keys are an error upstream.
std::map<std::string, std::string> parse_flat_config(const std::string& text);

}  // namespace repulsor
