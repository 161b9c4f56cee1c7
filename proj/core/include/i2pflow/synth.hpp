#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "i2pflow/dataset.hpp"

namespace i2pflow {

enum class DistKind { Gaussian, LogNormal };

// Per-feature sampling distribution. For LogNormal, mu/sigma parameterize
// the underlying normal of log(x).
struct FeatureDist {
  DistKind kind = DistKind::Gaussian;
  double mu = 0.0;
  double sigma = 1.0;
};

// One mixture component: a class label plus its per-feature distributions.
struct MixtureComponent {
  std::string name;
  int label = kClassNegative;  // 0/1; phase-1 specs use Normal vs I2P
  std::optional<Activity> activity;
  double prior = 0.0;
  std::vector<FeatureDist> features;
};

struct GeneratorSpec {
  std::vector<std::string> feature_names;
  std::vector<MixtureComponent> components;
  std::array<std::string, 2> class_names{"Normal", "I2P"};

  std::size_t feature_count() const { return feature_names.size(); }
  void validate() const;  // sigma > 0, priors sum to 1 (1e-12), shapes align
};

struct SyntheticDataset {
  Dataset data;
  std::vector<double> posterior;  // exact P(label 1 | x) per row
  std::vector<int> component;     // generating component index per row
};

// Seed-deterministic sampling: class by priors, then independent features.
SyntheticDataset generate(const GeneratorSpec& spec, std::size_t n, std::uint64_t seed);

// Exact class-1 posterior from the spec's densities and priors, computed in
// the log domain over the mixture.
double bayes_posterior(const GeneratorSpec& spec, std::span<const double> x);

double log_density(const FeatureDist& dist, double x);

// Built-in spec shaped like the flow problem: a heavy-separation lognormal
// duration feature for phase 1 and byte-volume features separating FTP/P2P
// from Browsing for phase 2. `separation_sigmas` is the phase-1 class
// separation of the duration feature in its log domain.
GeneratorSpec default_synth_spec(double separation_sigmas = 4.0);

// Structured-text spec file.
std::string synth_spec_text(const GeneratorSpec& spec);
GeneratorSpec parse_synth_spec(const std::string& text, const std::string& origin);

std::string oracle_csv(const SyntheticDataset& sd);

}  // namespace i2pflow
