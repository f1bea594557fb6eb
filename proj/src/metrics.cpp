#include "modflow/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>

#include "modflow/errors.hpp"
#include "modflow/valence.hpp"

namespace modflow {

std::set<std::uint64_t> hash_set(std::span<const LabeledGraph> graphs,
                                 const AtomAlphabet& alphabet) {
  std::set<std::uint64_t> out;
  for (const auto& g : graphs) out.insert(wl_hash(g, alphabet));
  return out;
}

MetricsReport compute_sample_metrics(std::span<const LabeledGraph> generated,
                                     const std::set<std::uint64_t>& training_hashes,
                                     const AtomAlphabet& alphabet) {
  if (generated.empty()) raise(ErrorCode::empty_input, "empty generated sample");
  MetricsReport report;
  report.sample_count = static_cast<int>(generated.size());

  std::vector<const LabeledGraph*> valid;
  for (const auto& g : generated) {
    if (check_valency(g, alphabet).all_ok) valid.push_back(&g);
  }
  report.valid_count = static_cast<int>(valid.size());
  report.validity_pct = 100.0 * valid.size() / static_cast<double>(generated.size());

  if (valid.empty()) {
    report.empty_valid_set = true;
    return report;
  }
  std::set<std::uint64_t> unique_hashes;
  for (const auto* g : valid) unique_hashes.insert(wl_hash(*g, alphabet));
  report.uniqueness_pct = 100.0 * unique_hashes.size() / static_cast<double>(valid.size());

  std::size_t novel = 0;
  for (std::uint64_t h : unique_hashes) {
    if (!training_hashes.count(h)) ++novel;
  }
  report.novelty_pct = 100.0 * novel / static_cast<double>(unique_hashes.size());
  return report;
}

double reconstruction_rate(const ModFlowModel& model, std::span<const LabeledGraph> graphs) {
  if (graphs.empty()) return 0.0;
  std::size_t exact = 0;
  for (const auto& g : graphs) {
    const Encoding enc = encode(model, g);
    const LabeledGraph rec = decode(model, enc.z0, g);
    if (rec.labels == g.labels) ++exact;
  }
  return 100.0 * exact / static_cast<double>(graphs.size());
}

MetricsReport compute_metrics(const ModFlowModel& model,
                              std::span<const LabeledGraph> generated,
                              const std::set<std::uint64_t>& training_hashes,
                              const AtomAlphabet& alphabet,
                              std::span<const LabeledGraph> held_out) {
  MetricsReport report = compute_sample_metrics(generated, training_hashes, alphabet);
  report.reconstruction_pct = reconstruction_rate(model, held_out);
  return report;
}

const char* property_name(PropertyKind kind) {
  switch (kind) {
    case PropertyKind::molecular_weight: return "molecular_weight";
    case PropertyKind::heavy_atoms: return "heavy_atoms";
    case PropertyKind::rings: return "rings";
  }
  return "unknown";
}

double property_mw(const LabeledGraph& graph, const AtomAlphabet& alphabet) {
  if (alphabet.mode != AlphabetMode::atoms) {
    raise(ErrorCode::invalid_argument, "molecular weight needs an atom-mode graph");
  }
  std::vector<int> sums(graph.num_nodes, 0);
  for (const Edge& e : graph.edges) {
    sums[e.a] += e.order;
    sums[e.b] += e.order;
  }
  double total = 0.0;
  for (int i = 0; i < graph.num_nodes; ++i) {
    const std::string& symbol = alphabet.labels[graph.labels[i]];
    total += atomic_weight(symbol);
    total += 1.008 * implicit_hydrogens(symbol, sums[i]);
  }
  return total;
}

double property_value(PropertyKind kind, const LabeledGraph& graph,
                      const AtomAlphabet& alphabet) {
  switch (kind) {
    case PropertyKind::molecular_weight:
      return property_mw(graph, alphabet);
    case PropertyKind::heavy_atoms:
      return static_cast<double>(graph.num_nodes);
    case PropertyKind::rings: {
      // Cycle rank: independent cycles over the connected components.
      std::vector<char> seen(graph.num_nodes, 0);
      const auto adj = graph.adjacency();
      int components = 0;
      for (int s = 0; s < graph.num_nodes; ++s) {
        if (seen[s]) continue;
        ++components;
        std::vector<int> stack = {s};
        seen[s] = 1;
        while (!stack.empty()) {
          const int u = stack.back();
          stack.pop_back();
          for (int v : adj[u]) {
            if (!seen[v]) {
              seen[v] = 1;
              stack.push_back(v);
            }
          }
        }
      }
      return static_cast<double>(static_cast<int>(graph.edges.size()) - graph.num_nodes +
                                 components);
    }
  }
  raise(ErrorCode::invalid_argument, "unknown property kind");
}

namespace {

std::vector<double> pooled_latent(const ModFlowModel& model, const LabeledGraph& graph) {
  const Encoding enc = encode(model, graph);
  std::vector<double> pooled(enc.z0.cols, 0.0);
  for (int i = 0; i < enc.z0.rows; ++i) {
    for (int c = 0; c < enc.z0.cols; ++c) pooled[c] += enc.z0(i, c);
  }
  for (double& v : pooled) v /= static_cast<double>(enc.z0.rows);
  return pooled;
}

// Gaussian elimination with partial pivoting on a dense symmetric system.
std::vector<double> solve_dense(std::vector<double> a, std::vector<double> b, int n) {
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int r = col + 1; r < n; ++r) {
      if (std::abs(a[static_cast<std::size_t>(r) * n + col]) >
          std::abs(a[static_cast<std::size_t>(pivot) * n + col])) {
        pivot = r;
      }
    }
    if (std::abs(a[static_cast<std::size_t>(pivot) * n + col]) < 1e-14) {
      raise(ErrorCode::rank_deficient, "regression design matrix is rank deficient");
    }
    if (pivot != col) {
      for (int c = 0; c < n; ++c) {
        std::swap(a[static_cast<std::size_t>(pivot) * n + c],
                  a[static_cast<std::size_t>(col) * n + c]);
      }
      std::swap(b[pivot], b[col]);
    }
    const double inv = 1.0 / a[static_cast<std::size_t>(col) * n + col];
    for (int r = col + 1; r < n; ++r) {
      const double f = a[static_cast<std::size_t>(r) * n + col] * inv;
      if (f == 0.0) continue;
      for (int c = col; c < n; ++c) {
        a[static_cast<std::size_t>(r) * n + c] -= f * a[static_cast<std::size_t>(col) * n + c];
      }
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n, 0.0);
  for (int r = n - 1; r >= 0; --r) {
    double acc = b[r];
    for (int c = r + 1; c < n; ++c) acc -= a[static_cast<std::size_t>(r) * n + c] * x[c];
    x[r] = acc / a[static_cast<std::size_t>(r) * n + r];
  }
  return x;
}

}  // namespace

PropertyModel fit_property_regression(const ModFlowModel& model,
                                      std::span<const LabeledGraph> corpus,
                                      std::span<const double> values,
                                      const std::string& property_label) {
  const int k = model.label_dim();
  if (static_cast<int>(corpus.size()) < k + 1) {
    raise(ErrorCode::invalid_argument, "regression needs at least label_dim + 1 molecules");
  }
  if (values.size() != corpus.size()) {
    raise(ErrorCode::shape_mismatch, "one property value per corpus graph required");
  }
  const int cols = k + 1;  // weights plus bias column
  const std::size_t n = corpus.size();

  std::vector<double> x(n * cols);
  std::vector<double> y(values.begin(), values.end());
  for (std::size_t r = 0; r < n; ++r) {
    const std::vector<double> pooled = pooled_latent(model, corpus[r]);
    for (int c = 0; c < k; ++c) x[r * cols + c] = pooled[c];
    x[r * cols + k] = 1.0;
  }

  const double ridge = 1e-8;
  std::vector<double> xtx(static_cast<std::size_t>(cols) * cols, 0.0);
  std::vector<double> xty(cols, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    for (int i = 0; i < cols; ++i) {
      xty[i] += x[r * cols + i] * y[r];
      for (int j = 0; j < cols; ++j) {
        xtx[static_cast<std::size_t>(i) * cols + j] += x[r * cols + i] * x[r * cols + j];
      }
    }
  }
  for (int i = 0; i < k; ++i) xtx[static_cast<std::size_t>(i) * cols + i] += ridge;

  const std::vector<double> beta = solve_dense(xtx, xty, cols);

  PropertyModel pm;
  pm.weights.assign(beta.begin(), beta.begin() + k);
  pm.bias = beta[k];
  pm.property = property_label;

  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(n);
  double ss_tot = 0.0, ss_res = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    double pred = pm.bias;
    for (int c = 0; c < k; ++c) pred += pm.weights[c] * x[r * cols + c];
    ss_res += (y[r] - pred) * (y[r] - pred);
    ss_tot += (y[r] - mean) * (y[r] - mean);
  }
  pm.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 0.0;
  return pm;
}

AscentResult latent_ascent(const ModFlowModel& model, const LabeledGraph& start,
                           const PropertyModel& property, double step_length, int steps) {
  if (step_length < 0.0 || steps < 1) {
    raise(ErrorCode::invalid_argument, "latent ascent needs step_length >= 0 and steps >= 1");
  }
  const int k = model.label_dim();
  if (static_cast<int>(property.weights.size()) != k) {
    raise(ErrorCode::shape_mismatch, "property model does not match the alphabet size");
  }
  Encoding enc = encode(model, start);
  Matrix z = enc.z0;
  const double inv_m = 1.0 / static_cast<double>(z.rows);

  AscentResult out;
  for (int s = 0; s < steps; ++s) {
    // d(property)/dz_i = weights / M for the mean-pooled linear model.
    for (int i = 0; i < z.rows; ++i) {
      for (int c = 0; c < k; ++c) z(i, c) += step_length * property.weights[c] * inv_m;
    }
    AscentStep step;
    double pred = property.bias;
    for (int c = 0; c < k; ++c) {
      double pooled = 0.0;
      for (int i = 0; i < z.rows; ++i) pooled += z(i, c);
      pred += property.weights[c] * pooled * inv_m;
    }
    step.predicted = pred;
    step.decoded = decode(model, z, start);
    if (model.mode() == AlphabetMode::atoms) {
      step.valid = check_valency(step.decoded, model.alphabet).all_ok;
    }
    out.steps.push_back(std::move(step));
  }
  return out;
}

Histogram distribution_report(const std::string& property, std::span<const double> reference,
                              std::span<const double> generated, int bins) {
  if (bins < 1) raise(ErrorCode::invalid_argument, "need at least one histogram bin");
  Histogram h;
  h.property = property;

  double lo = 0.0, hi = 0.0;
  bool any = false;
  for (auto values : {reference, generated}) {
    for (double v : values) {
      if (!any) {
        lo = hi = v;
        any = true;
      } else {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
  }
  if (!any) {
    lo = 0.0;
    hi = 1.0;
  }
  if (hi <= lo) hi = lo + 1.0;

  const double width = (hi - lo) / bins;
  h.bin_lo.resize(bins);
  h.bin_hi.resize(bins);
  h.count_ref.assign(bins, 0);
  h.count_gen.assign(bins, 0);
  for (int b = 0; b < bins; ++b) {
    h.bin_lo[b] = lo + b * width;
    h.bin_hi[b] = b + 1 == bins ? hi : lo + (b + 1) * width;
  }
  auto bin_of = [&](double v) {
    int b = static_cast<int>((v - lo) / width);
    return std::clamp(b, 0, bins - 1);
  };
  for (double v : reference) ++h.count_ref[bin_of(v)];
  for (double v : generated) ++h.count_gen[bin_of(v)];

  h.density_ref.assign(bins, 0.0);
  h.density_gen.assign(bins, 0.0);
  const double ref_total = static_cast<double>(reference.size());
  const double gen_total = static_cast<double>(generated.size());
  for (int b = 0; b < bins; ++b) {
    if (ref_total > 0) h.density_ref[b] = h.count_ref[b] / (ref_total * width);
    if (gen_total > 0) h.density_gen[b] = h.count_gen[b] / (gen_total * width);
  }
  return h;
}

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_metrics_csv(const std::string& path, const std::vector<MetricsReport>& runs,
                       const std::vector<std::string>& names) {
  if (runs.size() != names.size()) {
    raise(ErrorCode::shape_mismatch, "one name per metrics run required");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(ErrorCode::io, "cannot open '" + path + "'");
  out << "metric,name,value,std\n";
  const char* metric_names[] = {"validity_pct", "uniqueness_pct", "novelty_pct",
                                "reconstruction_pct", "sample_count"};
  for (int metric = 0; metric < 5; ++metric) {
    // Mean and population standard deviation across runs.
    std::vector<double> values;
    for (const auto& r : runs) {
      switch (metric) {
        case 0: values.push_back(r.validity_pct); break;
        case 1: values.push_back(r.uniqueness_pct); break;
        case 2: values.push_back(r.novelty_pct); break;
        case 3: values.push_back(r.reconstruction_pct); break;
        case 4: values.push_back(r.sample_count); break;
      }
    }
    for (std::size_t i = 0; i < runs.size(); ++i) {
      out << metric_names[metric] << ',' << names[i] << ',' << format_double(values[i])
          << ",0\n";
    }
    if (runs.size() > 1) {
      double mean = 0.0;
      for (double v : values) mean += v;
      mean /= static_cast<double>(values.size());
      double var = 0.0;
      for (double v : values) var += (v - mean) * (v - mean);
      var /= static_cast<double>(values.size());
      out << metric_names[metric] << ",mean," << format_double(mean) << ','
          << format_double(std::sqrt(var)) << '\n';
    }
  }
  if (!out) raise(ErrorCode::io, "failed writing '" + path + "'");
}

void write_histograms_csv(const std::string& path, std::span<const Histogram> histograms) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(ErrorCode::io, "cannot open '" + path + "'");
  out << "property,bin_lo,bin_hi,count_ref,count_gen\n";
  for (const auto& h : histograms) {
    for (std::size_t b = 0; b < h.bin_lo.size(); ++b) {
      out << h.property << ',' << format_double(h.bin_lo[b]) << ','
          << format_double(h.bin_hi[b]) << ',' << h.count_ref[b] << ',' << h.count_gen[b]
          << '\n';
    }
  }
  if (!out) raise(ErrorCode::io, "failed writing '" + path + "'");
}

}  // namespace modflow
