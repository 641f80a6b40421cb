#include "sslab/io.hpp"

#include <fstream>
#include <limits>
#include <sstream>

#include "sslab/format.hpp"

namespace sslab {

void write_metrics_csv(const std::string& path,
                       const std::vector<MetricsRecord>& records, int num_classes) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open metrics file for writing: " + path);
  out << metrics_csv_header(num_classes) << '\n';
  for (const auto& rec : records) out << metrics_csv_row(rec) << '\n';
}

void write_outcomes_csv(const std::string& path,
                        const std::vector<BatchOutcome>& outcomes) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open outcomes file for writing: " + path);
  out << "confidence,pseudo_label,weight,true_label\n";
  for (const auto& o : outcomes) {
    out << format_double(o.confidence) << ',' << o.pseudo_label << ','
        << format_double(o.weight) << ',' << (o.true_label ? *o.true_label : -1) << '\n';
  }
}

std::vector<BatchOutcome> read_outcomes_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open outcomes file: " + path);
  std::string line;
  if (!std::getline(in, line) || line != "confidence,pseudo_label,weight,true_label") {
    throw std::runtime_error("malformed outcomes header in " + path);
  }
  std::vector<BatchOutcome> outcomes;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string field;
    BatchOutcome o;
    try {
      if (!std::getline(row, field, ',')) break;
      o.confidence = std::stod(field);
      if (!std::getline(row, field, ',')) throw std::runtime_error("short row");
      o.pseudo_label = std::stoi(field);
      if (!std::getline(row, field, ',')) throw std::runtime_error("short row");
      o.weight = std::stod(field);
      if (!std::getline(row, field, ',')) throw std::runtime_error("short row");
      const int truth = std::stoi(field);
      if (truth >= 0) o.true_label = truth;
    } catch (const std::exception&) {
      throw std::runtime_error("malformed outcomes row in " + path + ": " + line);
    }
    outcomes.push_back(o);
  }
  return outcomes;
}

void write_manifest(const std::string& path, const RunManifest& manifest) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open manifest for writing: " + path);
  out << "run_id = " << manifest.run_id << '\n';
  out << "seed = " << manifest.seed << '\n';
  if (!manifest.created.empty()) out << "created = " << manifest.created << '\n';
  out << "final_mu_hat = " << format_double(manifest.final_mu_hat) << '\n';
  out << "final_var_hat = " << format_double(manifest.final_var_hat) << '\n';
  out << "# --- config snapshot ---\n";
  out << manifest.config_text;
}

RunManifest read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest: " + path);
  RunManifest manifest;
  std::string line;
  std::ostringstream config;
  bool in_config = false;
  while (std::getline(in, line)) {
    if (line == "# --- config snapshot ---") {
      in_config = true;
      continue;
    }
    if (in_config) {
      config << line << '\n';
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = line.substr(0, eq - 1);
    const std::string value = line.substr(eq + 2);
    if (key == "run_id") manifest.run_id = value;
    if (key == "seed") manifest.seed = std::stoull(value);
    if (key == "created") manifest.created = value;
    if (key == "final_mu_hat") manifest.final_mu_hat = std::stod(value);
    if (key == "final_var_hat") manifest.final_var_hat = std::stod(value);
  }
  manifest.config_text = config.str();
  return manifest;
}

void write_histogram_csv(const std::string& path,
                         const std::vector<BatchOutcome>& outcomes, int bins,
                         const WeightingScheme* scheme, const GaussianStats* stats,
                         long step) {
  const ConfidenceHistogram hist = confidence_histogram(outcomes, bins);

  // empirical fallback when no scheme is available
  std::vector<double> weight_sum(bins, 0.0);
  std::vector<long> weight_count(bins, 0);
  for (const auto& o : outcomes) {
    const int b = histogram_bin(o.confidence, bins);
    weight_sum[b] += o.weight;
    ++weight_count[b];
  }

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open histogram file for writing: " + path);
  out << "bin_lo,bin_hi,count_all,count_wrong,weight_curve\n";
  for (int b = 0; b < bins; ++b) {
    const double center = (static_cast<double>(b) + 0.5) / bins;
    double curve;
    if (scheme != nullptr && stats != nullptr) {
      if (const auto* cw = std::get_if<ClasswiseThreshold>(scheme)) {
        curve = step_weight(center, cw->tau_base, cw->lambda_max);
      } else {
        curve = scheme_weight(*scheme, center, 0, step, *stats);
      }
    } else {
      curve = weight_count[b] > 0 ? weight_sum[b] / weight_count[b]
                                  : std::numeric_limits<double>::quiet_NaN();
    }
    out << format_double(static_cast<double>(b) / bins) << ','
        << format_double(static_cast<double>(b + 1) / bins) << ',' << hist.all[b] << ','
        << hist.wrong[b] << ',' << format_double(curve) << '\n';
  }
}

}  // namespace sslab
