#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "modflow/errors.hpp"
#include "modflow/metrics.hpp"
#include "modflow/molgen.hpp"
#include "modflow/smiles.hpp"
#include "support/test_util.hpp"

using namespace modflow;
using namespace modflow::testing;

namespace {

const AtomAlphabet& alpha() { return qm9_like_alphabet(); }

LabeledGraph mol(const std::string& smiles) { return parse_smiles(smiles, alpha()); }

ModFlowModel frozen_model(std::uint64_t seed = 3) {
  SolverConfig solver;
  solver.rtol = 1e-6;
  solver.atol = 1e-6;
  ModFlowModel m = make_model(alpha(), {}, seed, 0.05, 2, solver);
  return m;
}

ModFlowModel identity_model() {
  ModFlowModel m = frozen_model();
  for (double& v : m.params.w_h2()) v = 0.0;
  for (double& v : m.params.b_h2()) v = 0.0;
  return m;
}

}  // namespace

TEST_CASE("metric definitions on constructed samples") {
  const LabeledGraph valid = mol("CCO");
  const LabeledGraph other = mol("CCN");

  SUBCASE("ten copies of one valid molecule give 10% uniqueness") {
    std::vector<LabeledGraph> sample(10, valid);
    const MetricsReport r = compute_sample_metrics(sample, {}, alpha());
    CHECK(r.validity_pct == 100.0);
    CHECK(r.uniqueness_pct == 10.0);
    CHECK(r.novelty_pct == 100.0);
  }

  SUBCASE("training copies have zero novelty") {
    std::vector<LabeledGraph> training = {valid, other};
    std::vector<LabeledGraph> sample = {valid, other, valid};
    const MetricsReport r =
        compute_sample_metrics(sample, hash_set(training, alpha()), alpha());
    CHECK(r.novelty_pct == 0.0);
    CHECK(r.validity_pct == 100.0);
    CHECK(r.uniqueness_pct == doctest::Approx(100.0 * 2 / 3));
  }

  SUBCASE("all distinct, all novel scores 100/100/100") {
    std::vector<LabeledGraph> training = {mol("CCCC")};
    std::vector<LabeledGraph> sample = {valid, other, mol("CC(C)O")};
    const MetricsReport r =
        compute_sample_metrics(sample, hash_set(training, alpha()), alpha());
    CHECK(r.validity_pct == 100.0);
    CHECK(r.uniqueness_pct == 100.0);
    CHECK(r.novelty_pct == 100.0);
  }

  SUBCASE("empty valid set is flagged, not divided") {
    // Every node over-bonded: F with two neighbors.
    LabeledGraph bad;
    bad.num_nodes = 3;
    bad.labels = {alpha().index_of("F"), alpha().index_of("F"), alpha().index_of("F")};
    bad.edges = {make_edge(0, 1, 1), make_edge(1, 2, 1), make_edge(0, 2, 1)};
    std::vector<LabeledGraph> sample = {bad};
    const MetricsReport r = compute_sample_metrics(sample, {}, alpha());
    CHECK(r.validity_pct == 0.0);
    CHECK(r.empty_valid_set);
    CHECK(r.uniqueness_pct == 0.0);
    CHECK(r.novelty_pct == 0.0);
  }

  SUBCASE("metrics are invariant under sample order and node relabeling") {
    std::vector<LabeledGraph> training = {valid};
    std::vector<LabeledGraph> sample = {valid, other, mol("C=O")};
    const MetricsReport a =
        compute_sample_metrics(sample, hash_set(training, alpha()), alpha());
    std::swap(sample[0], sample[2]);
    sample[1] = permute_graph(sample[1], {2, 0, 1});
    const MetricsReport b =
        compute_sample_metrics(sample, hash_set(training, alpha()), alpha());
    CHECK(a.validity_pct == b.validity_pct);
    CHECK(a.uniqueness_pct == b.uniqueness_pct);
    CHECK(a.novelty_pct == b.novelty_pct);
  }
}

TEST_CASE("molecular weight with implicit hydrogens") {
  CHECK(property_mw(mol("C"), alpha()) == doctest::Approx(16.043).epsilon(1e-9));
  CHECK(property_mw(mol("O"), alpha()) == doctest::Approx(18.015).epsilon(1e-9));
  CHECK(property_mw(mol("C=O"), alpha()) == doctest::Approx(30.026).epsilon(1e-9));
  CHECK(property_value(PropertyKind::heavy_atoms, mol("CCO"), alpha()) == 3.0);
  CHECK(property_value(PropertyKind::rings, mol("C1CCCCC1"), alpha()) == 1.0);
  CHECK(property_value(PropertyKind::rings, mol("CCO"), alpha()) == 0.0);
}

TEST_CASE("reconstruction rate on an identity flow") {
  const ModFlowModel model = identity_model();
  Rng rng(9);
  std::vector<LabeledGraph> graphs;
  for (int i = 0; i < 10; ++i) graphs.push_back(random_molecule(rng, alpha()));
  CHECK(reconstruction_rate(model, graphs) == 100.0);
}

TEST_CASE("planted linear property is recovered exactly") {
  // A generic flow with amplified weights: identity encodings stay on the
  // simplex, where the bias column is collinear with the features and the
  // weights are unidentifiable; a strong flow spreads the features out.
  ModFlowModel model = frozen_model(77);
  for (double& v : model.params.values) v *= 3.0;
  Rng rng(31);
  std::vector<LabeledGraph> corpus;
  for (int i = 0; i < 40; ++i) corpus.push_back(random_molecule(rng, alpha()));

  const int k = model.label_dim();
  std::vector<double> w_star = {1.5, -2.0, 0.7, 3.1};
  const double b_star = 0.25;
  std::vector<double> values;
  for (const auto& g : corpus) {
    const Encoding enc = encode(model, g);
    double pooled_dot = b_star;
    for (int c = 0; c < k; ++c) {
      double pooled = 0.0;
      for (int i = 0; i < enc.z0.rows; ++i) pooled += enc.z0(i, c);
      pooled_dot += w_star[c] * pooled / enc.z0.rows;
    }
    values.push_back(pooled_dot);
  }

  const PropertyModel pm = fit_property_regression(model, corpus, values, "planted");
  for (int c = 0; c < k; ++c) CHECK(std::abs(pm.weights[c] - w_star[c]) < 1e-6);
  CHECK(std::abs(pm.bias - b_star) < 1e-6);
  CHECK(pm.r_squared >= 0.999999);
}

TEST_CASE("constant property reports zero weights and zero R^2") {
  const ModFlowModel model = frozen_model(78);
  Rng rng(32);
  std::vector<LabeledGraph> corpus;
  for (int i = 0; i < 12; ++i) corpus.push_back(random_molecule(rng, alpha()));
  std::vector<double> values(corpus.size(), 4.25);
  const PropertyModel pm = fit_property_regression(model, corpus, values, "constant");
  for (double w : pm.weights) CHECK(std::abs(w) < 1e-6);
  CHECK(pm.bias == doctest::Approx(4.25).epsilon(1e-9));
  CHECK(pm.r_squared == 0.0);
}

TEST_CASE("shuffled targets have near-zero explanatory power") {
  const ModFlowModel model = frozen_model(79);
  Rng rng(33);
  std::vector<LabeledGraph> corpus;
  for (int i = 0; i < 200; ++i) corpus.push_back(random_molecule(rng, alpha()));
  std::vector<double> values;
  for (const auto& g : corpus) values.push_back(property_mw(g, alpha()));
  rng.shuffle(values);
  const PropertyModel pm = fit_property_regression(model, corpus, values, "shuffled");
  CHECK(pm.r_squared <= 0.1);
}

TEST_CASE("latent ascent arithmetic and contracts") {
  const ModFlowModel model = frozen_model(55);
  Rng rng(56);
  const LabeledGraph start = random_molecule(rng, alpha());

  PropertyModel pm;
  pm.weights = {0.8, -0.3, 0.5, 1.1};
  pm.bias = 0.0;
  pm.property = "synthetic";

  SUBCASE("zero step length decodes the original labels at every step") {
    const AscentResult r = latent_ascent(model, start, pm, 0.0, 3);
    REQUIRE(r.steps.size() == 3);
    for (const auto& s : r.steps) CHECK(s.decoded.labels == start.labels);
  }

  SUBCASE("each step raises the predicted value by exactly lambda |w|^2 / M") {
    const double lambda = 0.37;
    const AscentResult r = latent_ascent(model, start, pm, lambda, 4);
    double w2 = 0.0;
    for (double w : pm.weights) w2 += w * w;
    const double inc = lambda * w2 / start.num_nodes;

    const Encoding enc = encode(model, start);
    double first_expected = pm.bias + inc;
    for (int c = 0; c < model.label_dim(); ++c) {
      double pooled = 0.0;
      for (int i = 0; i < enc.z0.rows; ++i) pooled += enc.z0(i, c);
      first_expected += pm.weights[c] * pooled / enc.z0.rows;
    }
    CHECK(std::abs(r.steps[0].predicted - first_expected) < 1e-9);
    for (int s = 1; s < 4; ++s) {
      CHECK(std::abs(r.steps[s].predicted - r.steps[s - 1].predicted - inc) < 1e-9);
    }
  }

  SUBCASE("three steps emit exactly three candidates") {
    const AscentResult r = latent_ascent(model, start, pm, 0.1, 3);
    CHECK(r.steps.size() == 3);
  }

  CHECK_THROWS_AS(latent_ascent(model, start, pm, -1.0, 3), Error);
  CHECK_THROWS_AS(latent_ascent(model, start, pm, 0.1, 0), Error);
}

TEST_CASE("histograms") {
  SUBCASE("identical sets give identical columns") {
    std::vector<double> values = {1.0, 2.0, 2.5, 4.0};
    const Histogram h = distribution_report("mw", values, values, 4);
    CHECK(h.count_ref == h.count_gen);
    long total = 0;
    for (long c : h.count_ref) total += c;
    CHECK(total == 4);
  }

  SUBCASE("empty generated set yields zero columns") {
    std::vector<double> ref = {1.0, 2.0};
    const Histogram h = distribution_report("mw", ref, {}, 3);
    for (long c : h.count_gen) CHECK(c == 0);
  }

  SUBCASE("single value lands in exactly one bin") {
    std::vector<double> one = {3.0};
    const Histogram h = distribution_report("mw", one, {}, 5);
    int nonzero = 0;
    for (long c : h.count_ref) {
      if (c != 0) ++nonzero;
    }
    CHECK(nonzero == 1);
  }
}

TEST_CASE("csv writers emit the pinned schemas") {
  const auto dir = std::filesystem::temp_directory_path();
  const auto metrics_path = (dir / "modflow_metrics.csv").string();
  const auto hist_path = (dir / "modflow_hist.csv").string();

  MetricsReport r;
  r.validity_pct = 87.5;
  r.sample_count = 8;
  write_metrics_csv(metrics_path, {r}, {"run0"});
  {
    std::ifstream in(metrics_path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "metric,name,value,std");
    std::string line;
    std::getline(in, line);
    CHECK(line == "validity_pct,run0,87.5,0");
  }

  std::vector<double> ref = {1.0, 2.0};
  const Histogram h = distribution_report("molecular_weight", ref, ref, 2);
  write_histograms_csv(hist_path, {&h, 1});
  {
    std::ifstream in(hist_path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "property,bin_lo,bin_hi,count_ref,count_gen");
    std::string line;
    std::getline(in, line);
    CHECK(line == "molecular_weight,1,1.5,1,1");
  }
  std::filesystem::remove(metrics_path);
  std::filesystem::remove(hist_path);
}
