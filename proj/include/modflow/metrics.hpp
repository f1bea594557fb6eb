#pragma once

#include <functional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "modflow/model.hpp"

namespace modflow {

struct MetricsReport {
  double validity_pct = 0.0;
  double uniqueness_pct = 0.0;  // among valid molecules
  double novelty_pct = 0.0;     // unique-valid hashes absent from training
  double reconstruction_pct = 0.0;
  int sample_count = 0;
  int valid_count = 0;
  bool empty_valid_set = false;  // uniqueness/novelty forced to 0
};

// Name-based WL digests, comparable across corpora with different alphabets.
std::set<std::uint64_t> hash_set(std::span<const LabeledGraph> graphs,
                                 const AtomAlphabet& alphabet);

// Validity, uniqueness and novelty over a generated sample of atom-mode
// graphs. Reconstruction is measured separately and merged by the caller.
MetricsReport compute_sample_metrics(std::span<const LabeledGraph> generated,
                                     const std::set<std::uint64_t>& training_hashes,
                                     const AtomAlphabet& alphabet);

// Fraction of graphs whose encode/decode round trip reproduces every label.
double reconstruction_rate(const ModFlowModel& model, std::span<const LabeledGraph> graphs);

MetricsReport compute_metrics(const ModFlowModel& model,
                              std::span<const LabeledGraph> generated,
                              const std::set<std::uint64_t>& training_hashes,
                              const AtomAlphabet& alphabet,
                              std::span<const LabeledGraph> held_out);

// --- Properties -------------------------------------------------------------

enum class PropertyKind { molecular_weight, heavy_atoms, rings };

const char* property_name(PropertyKind kind);

// Sum of atomic weights plus 1.008 per implicit hydrogen.
double property_mw(const LabeledGraph& graph, const AtomAlphabet& alphabet);
double property_value(PropertyKind kind, const LabeledGraph& graph,
                      const AtomAlphabet& alphabet);

struct PropertyModel {
  std::vector<double> weights;  // one per label dimension
  double bias = 0.0;
  double r_squared = 0.0;
  std::string property;
};

// Ridge-stabilized least squares from mean-pooled base-side latents to the
// given property values (one per corpus graph). R^2 reported on the fit;
// 0 when the target is constant.
PropertyModel fit_property_regression(const ModFlowModel& model,
                                      std::span<const LabeledGraph> corpus,
                                      std::span<const double> values,
                                      const std::string& property_label);

struct AscentStep {
  double predicted = 0.0;   // linear model value at the shifted latent
  LabeledGraph decoded;
  bool valid = false;       // atom-mode valency check (recorded, not corrected)
};

struct AscentResult {
  std::vector<AscentStep> steps;
};

// Gradient ascent in the base latent: every node row moves by
// step_length * weights / num_nodes per step; each step decodes a molecule.
AscentResult latent_ascent(const ModFlowModel& model, const LabeledGraph& start,
                           const PropertyModel& property, double step_length, int steps);

// --- Histograms -------------------------------------------------------------

struct Histogram {
  std::string property;
  std::vector<double> bin_lo, bin_hi;
  std::vector<long> count_ref, count_gen;
  std::vector<double> density_ref, density_gen;
};

Histogram distribution_report(const std::string& property, std::span<const double> reference,
                              std::span<const double> generated, int bins);

void write_metrics_csv(const std::string& path, const std::vector<MetricsReport>& runs,
                       const std::vector<std::string>& names);
void write_histograms_csv(const std::string& path, std::span<const Histogram> histograms);

// Shortest round-trip decimal text for doubles in all CSV output.
std::string format_double(double v);

}  // namespace modflow
