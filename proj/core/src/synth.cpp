#include "i2pflow/synth.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <set>

#include "i2pflow/errors.hpp"
#include "i2pflow/io_util.hpp"
#include "i2pflow/rng.hpp"

namespace i2pflow {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_sum_exp(const std::vector<double>& terms) {
  double mx = kNegInf;
  for (const double t : terms) mx = std::max(mx, t);
  if (mx == kNegInf) return kNegInf;
  double acc = 0.0;
  for (const double t : terms) {
    if (t != kNegInf) acc += std::exp(t - mx);
  }
  return mx + std::log(acc);
}

}  // namespace

void GeneratorSpec::validate() const {
  if (feature_names.empty()) throw ConfigError("generator spec needs at least one feature");
  std::set<std::string> seen;
  for (const auto& name : feature_names) {
    if (name.empty()) throw ConfigError("generator spec has an empty feature name");
    if (!seen.insert(name).second) throw ConfigError("duplicate feature name `" + name + "` in generator spec");
  }
  if (components.empty()) throw ConfigError("generator spec needs at least one component");
  double prior_sum = 0.0;
  for (const auto& comp : components) {
    if (comp.label != 0 && comp.label != 1) throw ConfigError("component label must be 0 or 1");
    if (comp.activity && comp.label != kClassPositive) {
      throw ConfigError("component `" + comp.name + "`: activity requires the positive class");
    }
    if (comp.prior < 0.0) throw ConfigError("component `" + comp.name + "` has a negative prior");
    prior_sum += comp.prior;
    if (comp.features.size() != feature_names.size()) {
      throw ConfigError("component `" + comp.name + "` has " + std::to_string(comp.features.size()) +
                        " feature distributions, expected " + std::to_string(feature_names.size()));
    }
    for (const auto& dist : comp.features) {
      if (!(dist.sigma > 0.0)) throw ConfigError("component `" + comp.name + "`: sigma must be > 0");
    }
  }
  if (std::abs(prior_sum - 1.0) > 1e-12) {
    throw ConfigError("component priors sum to " + format_double(prior_sum) + ", expected 1");
  }
}

double log_density(const FeatureDist& dist, double x) {
  constexpr double half_log_2pi = 0.9189385332046727;  // log(2*pi)/2
  if (dist.kind == DistKind::Gaussian) {
    const double z = (x - dist.mu) / dist.sigma;
    return -0.5 * z * z - std::log(dist.sigma) - half_log_2pi;
  }
  if (!(x > 0.0)) return kNegInf;
  const double lx = std::log(x);
  const double z = (lx - dist.mu) / dist.sigma;
  return -0.5 * z * z - std::log(dist.sigma) - half_log_2pi - lx;
}

double bayes_posterior(const GeneratorSpec& spec, std::span<const double> x) {
  if (x.size() != spec.feature_count()) {
    throw SchemaError("bayes_posterior: vector has " + std::to_string(x.size()) + " features, spec expects " +
                      std::to_string(spec.feature_count()));
  }
  std::vector<double> all;
  std::vector<double> positive;
  for (const auto& comp : spec.components) {
    if (comp.prior <= 0.0) continue;
    double ll = std::log(comp.prior);
    for (std::size_t f = 0; f < x.size(); ++f) {
      ll += log_density(comp.features[f], x[f]);
      if (ll == kNegInf) break;
    }
    all.push_back(ll);
    if (comp.label == kClassPositive) positive.push_back(ll);
  }
  const double denom = log_sum_exp(all);
  if (denom == kNegInf) return 0.5;  // x impossible under every component
  const double num = log_sum_exp(positive);
  if (num == kNegInf) return 0.0;
  return std::exp(num - denom);
}

SyntheticDataset generate(const GeneratorSpec& spec, std::size_t n, std::uint64_t seed) {
  spec.validate();
  if (n < 1) throw ConfigError("generate: n must be >= 1");

  bool any_activity = false;
  for (const auto& comp : spec.components) any_activity = any_activity || comp.activity.has_value();

  SyntheticDataset sd;
  sd.data.schema.feature_names = spec.feature_names;
  sd.data.schema.label_column = "label";
  sd.data.schema.activity_column = any_activity ? "activity" : "";
  sd.data.class_names = spec.class_names;
  sd.data.provenance = "synthetic seed=" + std::to_string(seed);
  sd.data.rows.reserve(n);
  sd.posterior.reserve(n);
  sd.component.reserve(n);

  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.uniform_real();
    std::size_t comp_idx = spec.components.size() - 1;
    double cum = 0.0;
    for (std::size_t c = 0; c < spec.components.size(); ++c) {
      cum += spec.components[c].prior;
      if (u < cum) {
        comp_idx = c;
        break;
      }
    }
    const MixtureComponent& comp = spec.components[comp_idx];

    LabeledFlow row;
    row.label = comp.label;
    row.activity = comp.activity;
    row.record.values.resize(spec.feature_count());
    for (std::size_t f = 0; f < spec.feature_count(); ++f) {
      const FeatureDist& dist = comp.features[f];
      const double z = rng.normal(dist.mu, dist.sigma);
      row.record.values[f] = dist.kind == DistKind::Gaussian ? z : std::exp(z);
    }
    sd.posterior.push_back(bayes_posterior(spec, row.record.values));
    sd.component.push_back(static_cast<int>(comp_idx));
    sd.data.rows.push_back(std::move(row));
  }
  return sd;
}

GeneratorSpec default_synth_spec(double separation_sigmas) {
  const double sep = separation_sigmas;
  GeneratorSpec spec;
  spec.feature_names = {"flow_duration", "fwd_bytes_total", "bytes_ratio", "pkt_size_var",
                        "iat_mean",      "noise_a",         "noise_b",     "noise_c"};

  const auto gauss = [](double mu, double sigma = 1.0) { return FeatureDist{DistKind::Gaussian, mu, sigma}; };
  const auto logn = [](double mu, double sigma = 1.0) { return FeatureDist{DistKind::LogNormal, mu, sigma}; };

  MixtureComponent normal;
  normal.name = "Normal";
  normal.label = kClassNegative;
  normal.prior = 0.70;
  normal.features = {logn(0.0), gauss(0.0), gauss(0.0), gauss(0.0), gauss(0.0), gauss(0.0), gauss(0.0), gauss(0.0)};

  MixtureComponent ftp;
  ftp.name = "I2P-FTP";
  ftp.label = kClassPositive;
  ftp.activity = Activity::FTP;
  ftp.prior = 0.10;
  ftp.features = {logn(sep), gauss(3.0), gauss(2.0), gauss(-1.0), gauss(1.5), gauss(0.0), gauss(0.0), gauss(0.0)};

  MixtureComponent p2p;
  p2p.name = "I2P-P2P";
  p2p.label = kClassPositive;
  p2p.activity = Activity::P2P;
  p2p.prior = 0.10;
  p2p.features = {logn(sep), gauss(2.5), gauss(2.0), gauss(-0.5), gauss(1.5), gauss(0.0), gauss(0.0), gauss(0.0)};

  MixtureComponent browsing;
  browsing.name = "I2P-Browsing";
  browsing.label = kClassPositive;
  browsing.activity = Activity::Browsing;
  browsing.prior = 0.10;
  browsing.features = {logn(sep), gauss(0.5), gauss(-0.5), gauss(1.0),
                       gauss(1.5), gauss(0.0), gauss(0.0),  gauss(0.0)};

  spec.components = {normal, ftp, p2p, browsing};
  spec.validate();
  return spec;
}

std::string synth_spec_text(const GeneratorSpec& spec) {
  std::string out = "i2pflow-synthspec v1\n";
  out += "features = " + std::to_string(spec.feature_count()) + "\n";
  for (std::size_t f = 0; f < spec.feature_count(); ++f) {
    out += "feature." + std::to_string(f) + " = " + spec.feature_names[f] + "\n";
  }
  out += "class_names.negative = " + spec.class_names[0] + "\n";
  out += "class_names.positive = " + spec.class_names[1] + "\n";
  out += "components = " + std::to_string(spec.components.size()) + "\n";
  for (std::size_t c = 0; c < spec.components.size(); ++c) {
    const auto& comp = spec.components[c];
    const std::string prefix = "component." + std::to_string(c) + ".";
    out += prefix + "name = " + comp.name + "\n";
    out += prefix + "label = " + std::to_string(comp.label) + "\n";
    out += prefix + "prior = " + format_double(comp.prior) + "\n";
    if (comp.activity) out += prefix + "activity = " + activity_name(*comp.activity) + "\n";
    for (std::size_t f = 0; f < comp.features.size(); ++f) {
      const auto& d = comp.features[f];
      out += prefix + "feature." + std::to_string(f) + " = " +
             (d.kind == DistKind::Gaussian ? "gaussian" : "lognormal") + ":" + format_double(d.mu) + ":" +
             format_double(d.sigma) + "\n";
    }
  }
  return out;
}

GeneratorSpec parse_synth_spec(const std::string& text, const std::string& origin) {
  const auto nl = text.find('\n');
  const std::string magic = trim(nl == std::string::npos ? text : text.substr(0, nl));
  if (magic != "i2pflow-synthspec v1") {
    throw ConfigError(origin + ": expected `i2pflow-synthspec v1` header, got `" + magic + "`");
  }
  const KvFile kv = KvFile::parse_text(nl == std::string::npos ? "" : text.substr(nl + 1), origin);

  GeneratorSpec spec;
  const auto nfeat = parse_int(kv.get("features"));
  if (!nfeat || *nfeat < 1) throw ConfigError(origin + ": bad feature count");
  spec.feature_names.resize(static_cast<std::size_t>(*nfeat));
  for (std::size_t f = 0; f < spec.feature_names.size(); ++f) {
    spec.feature_names[f] = kv.get("feature." + std::to_string(f));
  }
  spec.class_names[0] = kv.get_or("class_names.negative", "Normal");
  spec.class_names[1] = kv.get_or("class_names.positive", "I2P");

  const auto ncomp = parse_int(kv.get("components"));
  if (!ncomp || *ncomp < 1) throw ConfigError(origin + ": bad component count");
  for (long long c = 0; c < *ncomp; ++c) {
    const std::string prefix = "component." + std::to_string(c) + ".";
    MixtureComponent comp;
    comp.name = kv.get(prefix + "name");
    const auto label = parse_int(kv.get(prefix + "label"));
    if (!label) throw ConfigError(origin + ": bad label for " + comp.name);
    comp.label = static_cast<int>(*label);
    const auto prior = parse_double(kv.get(prefix + "prior"));
    if (!prior) throw ConfigError(origin + ": bad prior for " + comp.name);
    comp.prior = *prior;
    if (kv.has(prefix + "activity")) {
      const std::string act = kv.get(prefix + "activity");
      const auto a = activity_from_name(act);
      if (!a) throw ConfigError(origin + ": unknown activity `" + act + "`");
      comp.activity = *a;
    }
    for (std::size_t f = 0; f < spec.feature_names.size(); ++f) {
      const std::string raw = kv.get(prefix + "feature." + std::to_string(f));
      const auto parts = split(raw, ':');
      if (parts.size() != 3) throw ConfigError(origin + ": bad distribution `" + raw + "`");
      FeatureDist dist;
      const std::string kind = trim(parts[0]);
      if (kind == "gaussian") dist.kind = DistKind::Gaussian;
      else if (kind == "lognormal") dist.kind = DistKind::LogNormal;
      else throw ConfigError(origin + ": unknown distribution kind `" + kind + "`");
      const auto mu = parse_double(trim(parts[1]));
      const auto sigma = parse_double(trim(parts[2]));
      if (!mu || !sigma) throw ConfigError(origin + ": bad distribution parameters in `" + raw + "`");
      dist.mu = *mu;
      dist.sigma = *sigma;
      comp.features.push_back(dist);
    }
    spec.components.push_back(std::move(comp));
  }
  spec.validate();
  return spec;
}

std::string oracle_csv(const SyntheticDataset& sd) {
  std::string out = "row,component,posterior\n";
  for (std::size_t i = 0; i < sd.data.rows.size(); ++i) {
    out += std::to_string(i) + "," + std::to_string(sd.component[i]) + "," + format_double(sd.posterior[i]) + "\n";
  }
  return out;
}

}  // namespace i2pflow
