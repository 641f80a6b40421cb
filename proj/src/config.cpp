#include "sslab/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "sslab/format.hpp"

namespace sslab {

namespace {

std::string trim(const std::string& s) {
  size_t begin = 0, end = s.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(s[begin]))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
  return s.substr(begin, end - begin);
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected a number, got '" + value + "'");
  }
}

long parse_long(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    const long v = std::stol(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected an integer, got '" + value +
                      "'");
  }
}

int parse_int(const std::string& key, const std::string& value) {
  return static_cast<int>(parse_long(key, value));
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true") return true;
  if (value == "false") return false;
  throw ConfigError("config key '" + key + "': expected true or false, got '" + value +
                    "'");
}

std::vector<int> parse_int_list(const std::string& key, const std::string& value) {
  std::vector<int> out;
  std::istringstream stream(value);
  std::string item;
  while (std::getline(stream, item, ',')) out.push_back(parse_int(key, trim(item)));
  if (out.empty()) throw ConfigError("config key '" + key + "': empty list");
  return out;
}

struct SchemeParams {
  std::string name = "truncated_gaussian";
  double lambda_max = 1.0;
  double tau = 0.95;
  long warmup_steps = 1000;
  int n_sigma = 2;
  double laplacian_mu = 1.0;
  double laplacian_b = 0.3;
};

WeightingScheme build_scheme(const SchemeParams& p) {
  if (p.name == "fixed") return Fixed{p.lambda_max};
  if (p.name == "rampup") return RampUp{p.lambda_max, p.warmup_steps};
  if (p.name == "threshold") return Threshold{p.lambda_max, p.tau};
  if (p.name == "classwise") return ClasswiseThreshold{p.lambda_max, p.tau, {}};
  if (p.name == "linear") return Linear{p.lambda_max};
  if (p.name == "quadratic") return Quadratic{p.lambda_max};
  if (p.name == "laplacian") return Laplacian{p.lambda_max, p.laplacian_mu, p.laplacian_b};
  if (p.name == "truncated_laplacian") return TruncatedLaplacian{p.lambda_max, p.n_sigma};
  if (p.name == "truncated_gaussian") return TruncatedGaussian{p.lambda_max, p.n_sigma};
  throw ConfigError("config key 'scheme': unknown scheme '" + p.name + "'");
}

UaTargetMode parse_ua_target(const std::string& value) {
  if (value == "uniform") return UaTargetMode::kUniform;
  if (value == "true") return UaTargetMode::kTrue;
  if (value == "estimated") return UaTargetMode::kEstimated;
  if (value == "off") return UaTargetMode::kOff;
  throw ConfigError("config key 'ua_target': unknown target '" + value + "'");
}

}  // namespace

std::vector<std::pair<std::string, std::string>> parse_flat_config(
    const std::string& text) {
  std::vector<std::pair<std::string, std::string>> pairs;
  std::istringstream stream(text);
  std::string line;
  int line_no = 0;
  while (std::getline(stream, line)) {
    ++line_no;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": empty key or value");
    }
    for (const auto& [existing, _] : pairs) {
      if (existing == key) throw ConfigError("duplicate config key '" + key + "'");
    }
    pairs.emplace_back(key, value);
  }
  return pairs;
}

void apply_override(std::vector<std::pair<std::string, std::string>>& pairs,
                    const std::string& assignment) {
  const size_t eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw ConfigError("override '" + assignment + "' is not of the form key=value");
  }
  const std::string key = trim(assignment.substr(0, eq));
  const std::string value = trim(assignment.substr(eq + 1));
  if (key.empty() || value.empty()) {
    throw ConfigError("override '" + assignment + "' has an empty key or value");
  }
  for (auto& [existing, existing_value] : pairs) {
    if (existing == key) {
      existing_value = value;
      return;
    }
  }
  pairs.emplace_back(key, value);
}

TrainConfig config_from_pairs(
    const std::vector<std::pair<std::string, std::string>>& pairs) {
  TrainConfig cfg;
  SchemeParams scheme;

  for (const auto& [key, value] : pairs) {
    if (key == "scheme") {
      scheme.name = value;
    } else if (key == "lambda_max") {
      scheme.lambda_max = parse_double(key, value);
    } else if (key == "tau") {
      scheme.tau = parse_double(key, value);
    } else if (key == "warmup_steps") {
      scheme.warmup_steps = parse_long(key, value);
    } else if (key == "n_sigma") {
      scheme.n_sigma = parse_int(key, value);
    } else if (key == "laplacian_mu") {
      scheme.laplacian_mu = parse_double(key, value);
    } else if (key == "laplacian_b") {
      scheme.laplacian_b = parse_double(key, value);
    } else if (key == "ua_target") {
      cfg.ua_target = parse_ua_target(value);
    } else if (key == "use_da") {
      cfg.use_da = parse_bool(key, value);
    } else if (key == "labeled_batch") {
      cfg.labeled_batch = parse_int(key, value);
    } else if (key == "unlabeled_batch") {
      cfg.unlabeled_batch = parse_int(key, value);
    } else if (key == "momentum") {
      cfg.momentum = parse_double(key, value);
    } else if (key == "model_ema_momentum") {
      cfg.model_ema_momentum = parse_double(key, value);
    } else if (key == "total_steps") {
      cfg.total_steps = parse_long(key, value);
    } else if (key == "lr") {
      cfg.lr = parse_double(key, value);
    } else if (key == "sgd_momentum") {
      cfg.sgd_momentum = parse_double(key, value);
    } else if (key == "weight_decay") {
      cfg.weight_decay = parse_double(key, value);
    } else if (key == "eval_interval") {
      cfg.eval_interval = parse_long(key, value);
    } else if (key == "weak_noise") {
      cfg.augment.weak_noise = parse_double(key, value);
    } else if (key == "strong_noise") {
      cfg.augment.strong_noise = parse_double(key, value);
    } else if (key == "strong_scale_min") {
      cfg.augment.strong_scale_min = parse_double(key, value);
    } else if (key == "strong_scale_max") {
      cfg.augment.strong_scale_max = parse_double(key, value);
    } else if (key == "per_class_stats") {
      cfg.per_class_stats = parse_bool(key, value);
    } else if (key == "seed") {
      cfg.seed = static_cast<std::uint64_t>(parse_long(key, value));
    } else if (key == "hidden_dims") {
      cfg.hidden_dims = parse_int_list(key, value);
    } else if (key == "dataset") {
      cfg.dataset = value;
    } else if (key == "n_per_moon") {
      cfg.n_per_moon = parse_int(key, value);
    } else if (key == "data_noise") {
      cfg.data_noise = parse_double(key, value);
    } else if (key == "n_labels") {
      cfg.n_labels = parse_int(key, value);
    } else if (key == "label_mode") {
      cfg.label_mode = value;
    } else if (key == "blob_classes") {
      cfg.blob_classes = parse_int(key, value);
    } else if (key == "blob_head") {
      cfg.blob_head = parse_int(key, value);
    } else if (key == "blob_gamma") {
      cfg.blob_gamma = parse_double(key, value);
    } else if (key == "full_metrics") {
      cfg.full_metrics = parse_bool(key, value);
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }

  cfg.scheme = build_scheme(scheme);
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }
  return cfg;
}

TrainConfig load_config_file(const std::string& path,
                             const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  auto pairs = parse_flat_config(buffer.str());
  for (const auto& assignment : overrides) apply_override(pairs, assignment);
  return config_from_pairs(pairs);
}

std::string scheme_name(const WeightingScheme& scheme) {
  struct Namer {
    std::string operator()(const Fixed&) const { return "fixed"; }
    std::string operator()(const RampUp&) const { return "rampup"; }
    std::string operator()(const Threshold&) const { return "threshold"; }
    std::string operator()(const ClasswiseThreshold&) const { return "classwise"; }
    std::string operator()(const Linear&) const { return "linear"; }
    std::string operator()(const Quadratic&) const { return "quadratic"; }
    std::string operator()(const Laplacian&) const { return "laplacian"; }
    std::string operator()(const TruncatedLaplacian&) const {
      return "truncated_laplacian";
    }
    std::string operator()(const TruncatedGaussian&) const {
      return "truncated_gaussian";
    }
  };
  return std::visit(Namer{}, scheme);
}

std::string ua_target_name(UaTargetMode mode) {
  switch (mode) {
    case UaTargetMode::kUniform:
      return "uniform";
    case UaTargetMode::kTrue:
      return "true";
    case UaTargetMode::kEstimated:
      return "estimated";
    case UaTargetMode::kOff:
      return "off";
  }
  return "uniform";
}

std::string canonical_config_text(const TrainConfig& cfg) {
  std::ostringstream os;
  os << "scheme = " << scheme_name(cfg.scheme) << '\n';
  os << "lambda_max = " << format_double(scheme_lambda_max(cfg.scheme)) << '\n';

  double tau = 0.95;
  if (const auto* t = std::get_if<Threshold>(&cfg.scheme)) tau = t->tau;
  if (const auto* c = std::get_if<ClasswiseThreshold>(&cfg.scheme)) tau = c->tau_base;
  os << "tau = " << format_double(tau) << '\n';

  long warmup = 1000;
  if (const auto* r = std::get_if<RampUp>(&cfg.scheme)) warmup = r->warmup_steps;
  os << "warmup_steps = " << warmup << '\n';

  int n_sigma = 2;
  if (const auto* g = std::get_if<TruncatedGaussian>(&cfg.scheme)) n_sigma = g->n_sigma;
  if (const auto* l = std::get_if<TruncatedLaplacian>(&cfg.scheme)) n_sigma = l->n_sigma;
  os << "n_sigma = " << n_sigma << '\n';

  double mu = 1.0, b = 0.3;
  if (const auto* l = std::get_if<Laplacian>(&cfg.scheme)) {
    mu = l->mu;
    b = l->b;
  }
  os << "laplacian_mu = " << format_double(mu) << '\n';
  os << "laplacian_b = " << format_double(b) << '\n';

  os << "ua_target = " << ua_target_name(cfg.ua_target) << '\n';
  os << "use_da = " << (cfg.use_da ? "true" : "false") << '\n';
  os << "labeled_batch = " << cfg.labeled_batch << '\n';
  os << "unlabeled_batch = " << cfg.unlabeled_batch << '\n';
  os << "momentum = " << format_double(cfg.momentum) << '\n';
  os << "model_ema_momentum = " << format_double(cfg.model_ema_momentum) << '\n';
  os << "total_steps = " << cfg.total_steps << '\n';
  os << "lr = " << format_double(cfg.lr) << '\n';
  os << "sgd_momentum = " << format_double(cfg.sgd_momentum) << '\n';
  os << "weight_decay = " << format_double(cfg.weight_decay) << '\n';
  os << "eval_interval = " << cfg.eval_interval << '\n';
  os << "weak_noise = " << format_double(cfg.augment.weak_noise) << '\n';
  os << "strong_noise = " << format_double(cfg.augment.strong_noise) << '\n';
  os << "strong_scale_min = " << format_double(cfg.augment.strong_scale_min) << '\n';
  os << "strong_scale_max = " << format_double(cfg.augment.strong_scale_max) << '\n';
  os << "per_class_stats = " << (cfg.per_class_stats ? "true" : "false") << '\n';
  os << "seed = " << cfg.seed << '\n';
  os << "hidden_dims = ";
  for (size_t i = 0; i < cfg.hidden_dims.size(); ++i) {
    if (i > 0) os << ',';
    os << cfg.hidden_dims[i];
  }
  os << '\n';
  os << "dataset = " << cfg.dataset << '\n';
  os << "n_per_moon = " << cfg.n_per_moon << '\n';
  os << "data_noise = " << format_double(cfg.data_noise) << '\n';
  os << "n_labels = " << cfg.n_labels << '\n';
  os << "label_mode = " << cfg.label_mode << '\n';
  os << "blob_classes = " << cfg.blob_classes << '\n';
  os << "blob_head = " << cfg.blob_head << '\n';
  os << "blob_gamma = " << format_double(cfg.blob_gamma) << '\n';
  os << "full_metrics = " << (cfg.full_metrics ? "true" : "false") << '\n';
  return os.str();
}

std::uint64_t config_run_id(const TrainConfig& cfg) {
  const std::string text = canonical_config_text(cfg);
  std::uint64_t hash = 1469598103934665603ULL;  // FNV offset basis
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 1099511628211ULL;  // FNV prime
  }
  return hash;
}

std::string run_id_string(const TrainConfig& cfg) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(config_run_id(cfg)));
  return buf;
}

}  // namespace sslab
