// Library tour on a toy clinical taxonomy: extract the ancestral subtree of
// the observed concepts, embed it, rank held edges, then turn two patient
// records into model-ready features. Everything is deterministic; run it
// twice and diff the output.

#include <cstdio>
#include <vector>

#include <hypertax/hypertax.hpp>

namespace {

hypertax::KnowledgeGraph toy_taxonomy() {
  return hypertax::KnowledgeGraph::from_edges({
      {"clinical_finding", "respiratory_disorder"},
      {"clinical_finding", "cardiac_disorder"},
      {"clinical_finding", "metabolic_disorder"},
      {"respiratory_disorder", "airway_obstruction"},
      {"respiratory_disorder", "lung_infection"},
      {"airway_obstruction", "asthma"},
      {"airway_obstruction", "copd"},
      {"lung_infection", "pneumonia"},
      {"lung_infection", "bronchitis"},
      {"pneumonia", "bacterial_pneumonia"},
      {"pneumonia", "viral_pneumonia"},
      {"cardiac_disorder", "arrhythmia"},
      {"cardiac_disorder", "heart_failure"},
      {"cardiac_disorder", "hypertension"},
      {"arrhythmia", "atrial_fibrillation"},
      {"metabolic_disorder", "diabetes"},
      {"metabolic_disorder", "obesity"},
      {"diabetes", "type1_diabetes"},
      {"diabetes", "type2_diabetes"},
      {"cardiac_disorder", "diabetic_cardiomyopathy"},
      {"diabetes", "diabetic_cardiomyopathy"},  // two parents, kept verbatim
  });
}

}  // namespace

int main() {
  const auto taxonomy = toy_taxonomy();
  std::printf("taxonomy: %zu nodes, %zu edges\n", taxonomy.node_count(), taxonomy.edge_count());

  // Keep only what the dataset mentions plus every ancestor on the way up.
  const std::vector<std::string> observed = {"asthma", "copd", "bacterial_pneumonia",
                                             "atrial_fibrillation", "type2_diabetes",
                                             "diabetic_cardiomyopathy"};
  const auto resolution = hypertax::resolve_observed(taxonomy, observed);
  const auto subtree = hypertax::extract_ancestral_subtree(taxonomy, resolution.observed);
  std::printf("ancestral subtree of %zu observed codes: %zu nodes, %zu edges\n",
              observed.size(), subtree.node_count(), subtree.edge_count());

  hypertax::TrainingConfig config;
  config.dim = 5;
  config.epochs = 150;
  config.burn_in_epochs = 10;
  config.learning_rate = 0.3;
  config.negatives_k = 5;
  config.seed = 42;

  hypertax::TrainOptions options;
  options.progress = [](const hypertax::EpochStats& s) {
    if (s.epoch % 50 == 0) {
      std::printf("  epoch %3zu  lr %.3f  mean loss %.4f\n", s.epoch, s.effective_lr,
                  s.mean_loss);
    }
  };
  const auto table = hypertax::train(subtree, config, options);
  std::printf("trained %zu x %zu embedding, final mean loss %.4f\n", table.size(), table.dim(),
              table.final_loss);

  // How close does each child land to its parent, against all non-neighbors?
  const auto report = hypertax::mean_rank(subtree, table);
  std::printf("mean rank over %zu edges: %.3f (1.0 is perfect)\n", report.evaluated_edges,
              report.mean_rank);

  // Hyperbolic distances respect the hierarchy: siblings beat cousins.
  const auto d = [&](const char* a, const char* b) {
    return hypertax::distance(table.row(*table.row_of(a)), table.row(*table.row_of(b)));
  };
  std::printf("d(asthma, copd)        = %.3f   (siblings)\n", d("asthma", "copd"));
  std::printf("d(asthma, type2_diabetes) = %.3f   (different branches)\n",
              d("asthma", "type2_diabetes"));

  // Patient records become fixed-length vectors: frozen tangent embeddings
  // averaged per record, covariates in a separate Euclidean table.
  const auto space = hypertax::build_feature_space(table, {"smoker", "inpatient"}, 8, 42);
  hypertax::PatientRecord p1{"p001", 1, {"asthma", "copd"}, {"smoker"}, 67, 1, 4};
  hypertax::PatientRecord p2{"p002", 0, {"type2_diabetes"}, {}, 62, 0, 2};
  const auto v1 = hypertax::average_patient_vector(space, p1);
  const auto v2 = hypertax::average_patient_vector(space, p2);
  std::printf("p001 feature vector uses %zu concepts, first coordinate %.4f\n",
              v1.concepts_used, v1.values[0]);
  std::printf("p002 feature vector uses %zu concepts, first coordinate %.4f\n",
              v2.concepts_used, v2.values[0]);

  // A linear probe on the frozen features is the cheapest downstream model.
  const std::vector<std::vector<double>> xs = {v1.values, v2.values};
  const std::vector<int> ys = {p1.label, p2.label};
  const auto probe = hypertax::linear_probe_train(xs, ys);
  std::printf("probe scores: p001 %.3f, p002 %.3f\n", probe.score(v1.values),
              probe.score(v2.values));
  return 0;
}
