// hypertax command-line interface.
//
// Six subcommands chain into reproducible pipelines over plain files:
//   extract        observed codes -> ancestral subtree edge list
//   train          edge list -> embedding TSV + sidecar
//   sweep          edge list + grid JSON -> mean-rank CSV
//   eval           edge list + embedding -> rank report JSON
//   export-tangent embedding -> tangent-space TSV
//   features       embedding + patients CSV -> model-ready feature files
//
// Every run writes <out>.manifest.json recording input digests, the seed and
// the produced files. With --threads 1 (the default) all commands are
// deterministic; manifests then carry wall_time_s = null so that reruns are
// byte-identical.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <hypertax/hypertax.hpp>

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string manifest_path(const std::string& out) { return out + ".manifest.json"; }

void finish_manifest(hypertax::RunManifest& manifest, const std::string& out,
                     std::size_t threads, Clock::time_point start) {
  if (threads > 1) manifest.wall_time_s = seconds_since(start);
  manifest.output_paths.push_back(manifest_path(out));
  hypertax::write_manifest(manifest, manifest_path(out));
}

hypertax::TrainingConfig load_config(const std::string& config_path,
                                     std::optional<std::int64_t> seed_override) {
  hypertax::TrainingConfig config;
  if (!config_path.empty()) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(hypertax::read_file(config_path));
    } catch (const nlohmann::json::exception& e) {
      throw hypertax::ConfigError("bad JSON in '" + config_path + "': " + e.what());
    }
    config = hypertax::TrainingConfig::from_json(j);
  }
  if (seed_override) config.seed = static_cast<std::uint64_t>(*seed_override);
  return config;
}

struct ExtractArgs {
  std::string edges_path;
  std::string observed_path;
  std::string out;
};

int run_extract(const ExtractArgs& args) {
  const auto start = Clock::now();
  const hypertax::KnowledgeGraph graph = hypertax::read_edge_list_file(args.edges_path);
  const std::vector<std::string> codes = hypertax::read_code_lines(args.observed_path);
  if (codes.empty()) {
    throw hypertax::IoError("'" + args.observed_path + "' lists no observed codes");
  }
  const auto resolution = hypertax::resolve_observed(graph, codes);
  const hypertax::KnowledgeGraph subtree =
      hypertax::extract_ancestral_subtree(graph, resolution.observed);

  hypertax::write_edge_list(subtree, args.out);

  std::vector<std::string> isolated;
  for (hypertax::NodeId i = 0; i < subtree.node_count(); ++i) {
    if (subtree.children(i).empty() && subtree.parents(i).empty()) {
      isolated.push_back(subtree.code(i));
    }
  }

  nlohmann::ordered_json meta;
  meta["node_count"] = subtree.node_count();
  meta["edge_count"] = subtree.edge_count();
  meta["observed_count"] = resolution.observed.ids.size();
  meta["unresolved_count"] = resolution.unresolved.size();
  meta["isolated_node_codes"] = isolated;  // present in the subtree, absent from the edge list
  hypertax::write_file(args.out + ".meta.json", meta.dump(2) + "\n");

  hypertax::RunManifest manifest;
  manifest.command = "extract";
  manifest.input_digests = {{args.edges_path, hypertax::digest_file(args.edges_path)},
                            {args.observed_path, hypertax::digest_file(args.observed_path)}};
  manifest.output_paths = {args.out, args.out + ".meta.json"};
  manifest.details = {{"node_count", subtree.node_count()},
                      {"edge_count", subtree.edge_count()},
                      {"unresolved_count", resolution.unresolved.size()}};

  if (!resolution.unresolved.empty()) {
    std::string listing;
    for (const auto& code : resolution.unresolved) listing += code + "\n";
    hypertax::write_file(args.out + ".unresolved.txt", listing);
    manifest.output_paths.push_back(args.out + ".unresolved.txt");
    std::cerr << "warning: " << resolution.unresolved.size()
              << " observed code(s) not in the taxonomy, listed in " << args.out
              << ".unresolved.txt\n";
  }

  finish_manifest(manifest, args.out, 1, start);
  std::cout << "extracted " << subtree.node_count() << " nodes, " << subtree.edge_count()
            << " edges -> " << args.out << "\n";
  return 0;
}

struct TrainArgs {
  std::string edges_path;
  std::string config_path;
  std::string out;
  std::size_t threads = 1;
  std::optional<std::int64_t> seed;
};

int run_train(const TrainArgs& args) {
  const auto start = Clock::now();
  const hypertax::KnowledgeGraph graph = hypertax::read_edge_list_file(args.edges_path);
  const hypertax::TrainingConfig config = load_config(args.config_path, args.seed);

  hypertax::TrainOptions options;
  options.threads = args.threads;
  const hypertax::EmbeddingTable table = hypertax::train(graph, config, options);

  hypertax::write_embedding_tsv(table, args.out);
  hypertax::write_embedding_sidecar(table, hypertax::sidecar_path(args.out));

  hypertax::RunManifest manifest;
  manifest.command = "train";
  manifest.seed = config.seed;
  manifest.config_digest = hypertax::digest_bytes(config.to_json().dump());
  manifest.input_digests = {{args.edges_path, hypertax::digest_file(args.edges_path)}};
  if (!args.config_path.empty()) {
    manifest.input_digests.emplace_back(args.config_path, hypertax::digest_file(args.config_path));
  }
  manifest.output_paths = {args.out, hypertax::sidecar_path(args.out)};
  manifest.details = {{"node_count", table.size()},
                      {"dim", table.dim()},
                      {"final_loss", table.final_loss},
                      {"graph_digest", table.graph_digest}};
  finish_manifest(manifest, args.out, args.threads, start);

  std::cout << "trained " << table.size() << " nodes at dim " << table.dim()
            << ", final mean loss " << table.final_loss << " -> " << args.out << "\n";
  return 0;
}

struct SweepArgs {
  std::string edges_path;
  std::string grid_path;
  std::string out;
  std::size_t threads = 1;
  std::optional<std::int64_t> seed;
  std::string policy = "all";
};

int run_sweep(const SweepArgs& args) {
  const auto start = Clock::now();
  const hypertax::KnowledgeGraph graph = hypertax::read_edge_list_file(args.edges_path);
  nlohmann::json grid_json;
  try {
    grid_json = nlohmann::json::parse(hypertax::read_file(args.grid_path));
  } catch (const nlohmann::json::exception& e) {
    throw hypertax::ConfigError("bad JSON in '" + args.grid_path + "': " + e.what());
  }
  hypertax::SweepGrid grid = hypertax::SweepGrid::from_json(grid_json);
  if (args.seed) grid.base.seed = static_cast<std::uint64_t>(*args.seed);

  hypertax::SweepOptions options;
  options.threads = args.threads;
  options.policy = hypertax::CandidatePolicy::parse(args.policy, grid.base.seed);
  options.progress = [](const hypertax::SweepRow& row) {
    std::cerr << "cell dim=" << row.dim << " burn_in=" << row.burn_in_epochs
              << " k=" << row.negatives_k << " directed=" << (row.directed ? "true" : "false")
              << (row.error.empty() ? " mean_rank=" + std::to_string(row.mean_rank)
                                    : " FAILED: " + row.error)
              << "\n";
  };
  const hypertax::SweepReport report = hypertax::run_sweep(graph, grid, options);
  hypertax::write_sweep_csv(report, args.out);

  std::size_t failures = 0;
  for (const auto& row : report.rows) {
    if (!row.error.empty()) ++failures;
  }

  hypertax::RunManifest manifest;
  manifest.command = "sweep";
  manifest.seed = grid.base.seed;
  manifest.config_digest = hypertax::digest_file(args.grid_path);
  manifest.input_digests = {{args.edges_path, hypertax::digest_file(args.edges_path)},
                            {args.grid_path, hypertax::digest_file(args.grid_path)}};
  manifest.output_paths = {args.out};
  manifest.details = {{"cells", report.rows.size()},
                      {"failed_cells", failures},
                      {"candidate_policy", options.policy.label()}};
  finish_manifest(manifest, args.out, args.threads, start);

  if (failures > 0) {
    std::cerr << "warning: " << failures << " cell(s) failed; their rows carry mean_rank=nan\n";
  }
  std::cout << "swept " << report.rows.size() << " cells -> " << args.out << "\n";
  return 0;
}

struct EvalArgs {
  std::string edges_path;
  std::string embedding_path;
  std::string out;
  std::size_t threads = 1;
  std::optional<std::int64_t> seed;
  std::string policy = "all";
};

int run_eval(const EvalArgs& args) {
  const auto start = Clock::now();
  const hypertax::KnowledgeGraph graph = hypertax::read_edge_list_file(args.edges_path);
  const hypertax::EmbeddingTable table = hypertax::read_embedding_tsv(args.embedding_path);
  const std::uint64_t seed =
      args.seed ? static_cast<std::uint64_t>(*args.seed) : table.config.seed;
  const auto policy = hypertax::CandidatePolicy::parse(args.policy, seed);

  const hypertax::RankReport report = hypertax::mean_rank(graph, table, policy, args.threads);
  const std::string json = hypertax::rank_report_json(report).dump(2) + "\n";
  std::cout << json;
  hypertax::write_file(args.out, json);

  hypertax::RunManifest manifest;
  manifest.command = "eval";
  manifest.seed = seed;
  manifest.input_digests = {{args.edges_path, hypertax::digest_file(args.edges_path)},
                            {args.embedding_path, hypertax::digest_file(args.embedding_path)}};
  manifest.output_paths = {args.out};
  manifest.details = {{"mean_rank", report.mean_rank},
                      {"evaluated_edges", report.evaluated_edges},
                      {"candidate_policy", report.candidate_policy}};
  finish_manifest(manifest, args.out, args.threads, start);
  return 0;
}

struct ExportTangentArgs {
  std::string embedding_path;
  std::string out;
};

int run_export_tangent(const ExportTangentArgs& args) {
  const auto start = Clock::now();
  const hypertax::EmbeddingTable table = hypertax::read_embedding_tsv(args.embedding_path);

  hypertax::EmbeddingTable tangent(table.codes(), table.dim());
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto mapped = hypertax::log_map_origin(table.row(i), table.config.epsilon);
    std::copy(mapped.begin(), mapped.end(), tangent.row(i).begin());
  }
  hypertax::write_embedding_tsv(tangent, args.out);

  hypertax::RunManifest manifest;
  manifest.command = "export-tangent";
  manifest.input_digests = {{args.embedding_path, hypertax::digest_file(args.embedding_path)}};
  manifest.output_paths = {args.out};
  manifest.details = {{"node_count", table.size()}, {"dim", table.dim()}};
  finish_manifest(manifest, args.out, 1, start);

  std::cout << "exported " << table.size() << " tangent vectors -> " << args.out << "\n";
  return 0;
}

struct FeaturesArgs {
  std::string embedding_path;
  std::string patients_path;
  std::string out;
  std::string mode = "average";
  std::string domain = "tangent";
  std::optional<std::size_t> euclidean_dim;
  std::optional<std::int64_t> seed;
};

int run_features(const FeaturesArgs& args) {
  const auto start = Clock::now();
  if (args.mode != "average" && args.mode != "sequence") {
    throw hypertax::ConfigError("--mode must be average or sequence");
  }
  if (args.domain != "tangent" && args.domain != "ball") {
    throw hypertax::ConfigError("--average-domain must be tangent or ball");
  }
  const hypertax::EmbeddingTable table = hypertax::read_embedding_tsv(args.embedding_path);
  std::vector<hypertax::PatientRecord> patients =
      hypertax::read_patients_csv(args.patients_path);

  // Covariate universe: every id seen across the cohort, sorted.
  std::set<std::string> covariate_set;
  for (const auto& rec : patients) covariate_set.insert(rec.covariates.begin(),
                                                        rec.covariates.end());
  const std::vector<std::string> covariates(covariate_set.begin(), covariate_set.end());

  // Baseline comparator sizes: 256 for the averaging path, 192 for sequences.
  const std::size_t euclid_dim =
      args.euclidean_dim.value_or(args.mode == "sequence" ? 192 : 256);
  const std::uint64_t seed = args.seed ? static_cast<std::uint64_t>(*args.seed) : 42;
  const hypertax::FeatureSpace space =
      hypertax::build_feature_space(table, covariates, euclid_dim, seed);

  // Concepts missing from the embedding are dropped per record, counted, and
  // reported; they would otherwise abort the whole export.
  std::set<std::string> unknown_concepts;
  std::size_t skipped = 0;
  for (auto& rec : patients) {
    std::vector<std::string> kept;
    kept.reserve(rec.concepts.size());
    for (auto& code : rec.concepts) {
      if (space.has_concept(code)) {
        kept.push_back(std::move(code));
      } else {
        unknown_concepts.insert(code);
        ++skipped;
      }
    }
    rec.concepts = std::move(kept);
  }
  if (skipped > 0) {
    std::cerr << "warning: skipped " << skipped << " concept reference(s) ("
              << unknown_concepts.size() << " distinct) not present in the embedding\n";
  }

  std::string out;
  if (args.mode == "average") {
    const auto domain = args.domain == "ball" ? hypertax::AverageDomain::Ball
                                              : hypertax::AverageDomain::Tangent;
    out = "patient_id\tconcepts_used";
    for (std::size_t i = 0; i < space.tangent_dim(); ++i) out += "\tt" + std::to_string(i);
    for (std::size_t i = 0; i < space.euclidean_dim(); ++i) out += "\te" + std::to_string(i);
    out += "\tage\tsex\tcci\n";
    for (const auto& rec : patients) {
      const auto concept_avg = hypertax::average_patient_vector(space, rec, domain);
      const auto covariate_avg = hypertax::average_covariate_vector(space, rec);
      out += rec.patient_id;
      out += '\t';
      out += std::to_string(concept_avg.concepts_used);
      for (const double v : concept_avg.values) {
        out += '\t';
        hypertax::detail::append_double(out, v);
      }
      for (const double v : covariate_avg.values) {
        out += '\t';
        hypertax::detail::append_double(out, v);
      }
      out += '\t';
      hypertax::detail::append_double(out, rec.age);
      out += '\t';
      hypertax::detail::append_double(out, rec.sex);
      out += '\t';
      hypertax::detail::append_double(out, rec.cci);
      out += '\n';
    }
  } else {
    std::size_t max_len = 0;
    for (const auto& rec : patients) max_len = std::max(max_len, rec.concepts.size());
    out = "patient_id\tpos\tmask";
    for (std::size_t i = 0; i < space.tangent_dim(); ++i) out += "\tx" + std::to_string(i);
    out += '\n';
    for (const auto& rec : patients) {
      const auto seq = hypertax::padded_sequence(space, rec, max_len);
      for (std::size_t pos = 0; pos < seq.tokens.size(); ++pos) {
        out += rec.patient_id;
        out += '\t';
        out += std::to_string(pos);
        out += '\t';
        out += seq.mask[pos] ? '1' : '0';
        for (const double v : seq.tokens[pos]) {
          out += '\t';
          hypertax::detail::append_double(out, v);
        }
        out += '\n';
      }
    }
  }
  hypertax::write_file(args.out, out);

  hypertax::RunManifest manifest;
  manifest.command = "features";
  manifest.seed = seed;
  manifest.input_digests = {{args.embedding_path, hypertax::digest_file(args.embedding_path)},
                            {args.patients_path, hypertax::digest_file(args.patients_path)}};
  manifest.output_paths = {args.out};
  manifest.details = {{"mode", args.mode},
                      {"patients", patients.size()},
                      {"skipped_concept_refs", skipped},
                      {"unknown_concepts",
                       std::vector<std::string>(unknown_concepts.begin(), unknown_concepts.end())},
                      {"euclidean_dim", euclid_dim}};
  if (args.mode == "average") manifest.details["average_domain"] = args.domain;
  finish_manifest(manifest, args.out, 1, start);

  std::cout << "wrote " << args.mode << " features for " << patients.size() << " patients -> "
            << args.out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hyperbolic taxonomy embeddings: train, evaluate, export"};
  app.set_version_flag("--version", hypertax::kVersion);
  app.require_subcommand(1);

  ExtractArgs extract_args;
  auto* extract = app.add_subcommand("extract", "extract the ancestral subtree of observed codes");
  extract->add_option("edges", extract_args.edges_path, "taxonomy edge list (parent<TAB>child)")
      ->required();
  extract->add_option("observed", extract_args.observed_path, "observed codes, one per line")
      ->required();
  extract->add_option("--out", extract_args.out, "output edge list path")->required();

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "train an embedding of an edge list");
  train->add_option("edges", train_args.edges_path, "edge list to embed")->required();
  train->add_option("--config", train_args.config_path, "training config JSON");
  train->add_option("--out", train_args.out, "output embedding TSV path")->required();
  train->add_option("--threads", train_args.threads, "worker threads (1 = deterministic)")
      ->capture_default_str();
  train->add_option("--seed", train_args.seed, "override the config seed");

  SweepArgs sweep_args;
  auto* sweep = app.add_subcommand("sweep", "train and rank one embedding per grid cell");
  sweep->add_option("edges", sweep_args.edges_path, "edge list to embed")->required();
  sweep->add_option("--config", sweep_args.grid_path, "sweep grid JSON")->required();
  sweep->add_option("--out", sweep_args.out, "output CSV path")->required();
  sweep->add_option("--threads", sweep_args.threads, "cells trained in parallel")
      ->capture_default_str();
  sweep->add_option("--seed", sweep_args.seed, "override the base config seed");
  sweep->add_option("--candidate-policy", sweep_args.policy, "all or sampled:<k>")
      ->capture_default_str();

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "mean-rank report for a trained embedding");
  eval->add_option("edges", eval_args.edges_path, "edge list the embedding was trained on")
      ->required();
  eval->add_option("embedding", eval_args.embedding_path, "embedding TSV")->required();
  eval->add_option("--out", eval_args.out, "output report JSON path")->required();
  eval->add_option("--threads", eval_args.threads, "edges ranked in parallel")
      ->capture_default_str();
  eval->add_option("--seed", eval_args.seed, "seed for the sampled candidate policy");
  eval->add_option("--candidate-policy", eval_args.policy, "all or sampled:<k>")
      ->capture_default_str();

  ExportTangentArgs export_args;
  auto* export_tangent =
      app.add_subcommand("export-tangent", "log-map an embedding into tangent space");
  export_tangent->add_option("embedding", export_args.embedding_path, "embedding TSV")->required();
  export_tangent->add_option("--out", export_args.out, "output tangent TSV path")->required();

  FeaturesArgs features_args;
  auto* features = app.add_subcommand("features", "build patient features from an embedding");
  features->add_option("embedding", features_args.embedding_path, "embedding TSV")->required();
  features->add_option("patients", features_args.patients_path, "patient records CSV")->required();
  features->add_option("--out", features_args.out, "output feature TSV path")->required();
  features->add_option("--mode", features_args.mode, "average or sequence")
      ->capture_default_str();
  features->add_option("--average-domain", features_args.domain,
                       "tangent or ball (average mode only)")
      ->capture_default_str();
  features->add_option("--euclidean-dim", features_args.euclidean_dim,
                       "covariate embedding size (default 256 average, 192 sequence)");
  features->add_option("--seed", features_args.seed, "seed for covariate table initialization");

  CLI11_PARSE(app, argc, argv);

  try {
    if (extract->parsed()) return run_extract(extract_args);
    if (train->parsed()) return run_train(train_args);
    if (sweep->parsed()) return run_sweep(sweep_args);
    if (eval->parsed()) return run_eval(eval_args);
    if (export_tangent->parsed()) return run_export_tangent(export_args);
    if (features->parsed()) return run_features(features_args);
  } catch (const hypertax::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
