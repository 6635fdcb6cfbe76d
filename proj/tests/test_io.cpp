#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include <hypertax/io.hpp>

#include "support/fixtures.hpp"

using namespace hypertax;

TEST_CASE("byte digests") {
  // FNV-1a offset basis: the digest of zero bytes
  REQUIRE(digest_bytes("") == "fnv1a64:cbf29ce484222325");
  REQUIRE(digest_bytes("abc") == digest_bytes("abc"));
  REQUIRE(digest_bytes("abc") != digest_bytes("abd"));
  REQUIRE(digest_bytes("abc").rfind("fnv1a64:", 0) == 0);
  REQUIRE(digest_bytes("abc").size() == 8 + 16);
}

TEST_CASE("file io basics") {
  const auto dir = fixtures::scratch_dir("io_basics");
  REQUIRE_THROWS_AS(read_file(dir + "/missing.txt"), IoError);

  // parent directories are created on demand
  const std::string nested = dir + "/a/b/c.txt";
  write_file(nested, "payload\n");
  REQUIRE(read_file(nested) == "payload\n");
  REQUIRE(digest_file(nested) == digest_bytes("payload\n"));
}

TEST_CASE("edge lists round trip") {
  const auto g = fixtures::make_random_dag(20, 6, 3);
  const auto dir = fixtures::scratch_dir("io_edges");
  const std::string path = dir + "/edges.tsv";
  write_edge_list(g, path);
  const auto back = read_edge_list_file(path);

  const auto codes = [](const KnowledgeGraph& graph) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& [p, c] : graph.edges()) out.emplace_back(graph.code(p), graph.code(c));
    return out;
  };
  REQUIRE(codes(back) == codes(g));
  REQUIRE(back.node_count() == g.node_count());
}

TEST_CASE("code line files skip comments and blanks") {
  const auto dir = fixtures::scratch_dir("io_codes");
  const std::string path = dir + "/codes.txt";
  write_file(path, "# cohort codes\nC01\n\n  \nC02\n# trailing\nC03\n");
  REQUIRE(read_code_lines(path) == std::vector<std::string>{"C01", "C02", "C03"});
}

TEST_CASE("embedding tables round trip through tsv plus sidecar") {
  const auto g = fixtures::make_random_tree(12, 9);
  auto table = fixtures::random_ball_table(g, 5, 10);
  table.config.dim = 5;
  table.config.epochs = 17;
  table.config.seed = 99;
  table.config.epsilon = 1e-4;
  table.final_loss = 0.375;
  table.epochs_run = 17;
  table.graph_digest = "fnv1a64:0123456789abcdef";

  const auto dir = fixtures::scratch_dir("io_embed");
  const std::string path = dir + "/emb.tsv";
  write_embedding_tsv(table, path);
  write_embedding_sidecar(table, sidecar_path(path));

  const auto back = read_embedding_tsv(path);
  REQUIRE(back.codes() == table.codes());
  REQUIRE(back.dim() == table.dim());
  REQUIRE(back.data() == table.data());  // %.17g reparses bit-exactly
  REQUIRE(back.config.epochs == 17);
  REQUIRE(back.config.seed == 99);
  REQUIRE(back.config.epsilon == 1e-4);
  REQUIRE(back.final_loss == 0.375);
  REQUIRE(back.epochs_run == 17);
  REQUIRE(back.graph_digest == table.graph_digest);
}

TEST_CASE("embedding tsv reads without a sidecar") {
  const auto g = fixtures::make_random_tree(6, 11);
  const auto table = fixtures::random_ball_table(g, 3, 12);
  const auto dir = fixtures::scratch_dir("io_embed_bare");
  const std::string path = dir + "/emb.tsv";
  write_embedding_tsv(table, path);

  const auto back = read_embedding_tsv(path);
  REQUIRE(back.data() == table.data());
  REQUIRE(std::isnan(back.final_loss));
  REQUIRE(back.graph_digest.empty());
}

TEST_CASE("embedding tsv rejects malformed files") {
  const auto dir = fixtures::scratch_dir("io_embed_bad");
  const auto at = [&](const std::string& name, const std::string& content) {
    const std::string p = dir + "/" + name;
    write_file(p, content);
    return p;
  };

  REQUIRE_THROWS_AS(read_embedding_tsv(dir + "/absent.tsv"), IoError);
  REQUIRE_THROWS_AS(read_embedding_tsv(at("empty.tsv", "")), IoError);
  REQUIRE_THROWS_AS(read_embedding_tsv(at("header.tsv", "code\tx0\na\t0.1\n")), IoError);
  REQUIRE_THROWS_AS(read_embedding_tsv(at("coords.tsv", "concept_id\tx0\tx2\na\t0.1\t0.2\n")),
                    IoError);
  REQUIRE_THROWS_AS(read_embedding_tsv(at("dup.tsv", "concept_id\tx0\na\t0.1\na\t0.2\n")),
                    IoError);
  REQUIRE_THROWS_AS(read_embedding_tsv(at("fields.tsv", "concept_id\tx0\tx1\na\t0.1\n")),
                    ParseError);
  REQUIRE_THROWS_AS(read_embedding_tsv(at("number.tsv", "concept_id\tx0\na\tzero\n")),
                    ParseError);
  REQUIRE_THROWS_AS(read_embedding_tsv(at("norows.tsv", "concept_id\tx0\n")), IoError);
}

TEST_CASE("patient csv round trip") {
  std::vector<PatientRecord> records(3);
  records[0] = {"p1", 1, {"C01", "C02"}, {"age", "sex"}, 64.0, 1.0, 2.5};
  records[1] = {"p2", 0, {"C03"}, {}, 41.5, 0.0, 0.0};
  records[2] = {"p3", 0, {}, {"age"}, 77.0, 1.0, 6.0};

  const auto dir = fixtures::scratch_dir("io_patients");
  const std::string path = dir + "/cohort.csv";
  write_patients_csv(records, path);

  const auto back = read_patients_csv(path);
  REQUIRE(back.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    REQUIRE(back[i].patient_id == records[i].patient_id);
    REQUIRE(back[i].label == records[i].label);
    REQUIRE(back[i].concepts == records[i].concepts);
    REQUIRE(back[i].covariates == records[i].covariates);
    REQUIRE(back[i].age == records[i].age);
    REQUIRE(back[i].sex == records[i].sex);
    REQUIRE(back[i].cci == records[i].cci);
  }
}

TEST_CASE("patient csv details") {
  const auto dir = fixtures::scratch_dir("io_patients_detail");
  const auto at = [&](const std::string& name, const std::string& content) {
    const std::string p = dir + "/" + name;
    write_file(p, content);
    return p;
  };

  // the header row is optional, repeated list entries collapse
  const auto rows = read_patients_csv(
      at("bare.csv", "p1,1,C01;C01;C02,,50,0,1\n# comment\np2,0,,age;age,60,1,0\n"));
  REQUIRE(rows.size() == 2);
  REQUIRE(rows[0].concepts == std::vector<std::string>{"C01", "C02"});
  REQUIRE(rows[0].covariates.empty());
  REQUIRE(rows[1].concepts.empty());
  REQUIRE(rows[1].covariates == std::vector<std::string>{"age"});

  REQUIRE_THROWS_AS(read_patients_csv(at("short.csv", "p1,1,C01,,50,0\n")), ParseError);
  REQUIRE_THROWS_AS(read_patients_csv(at("label.csv", "p1,2,C01,,50,0,1\n")), ParseError);
  REQUIRE_THROWS_AS(read_patients_csv(at("noid.csv", ",1,C01,,50,0,1\n")), ParseError);
  REQUIRE_THROWS_AS(read_patients_csv(at("age.csv", "p1,1,C01,,fifty,0,1\n")), ParseError);
  REQUIRE_THROWS_AS(read_patients_csv(at("empty.csv", "")), IoError);
  REQUIRE_THROWS_AS(
      read_patients_csv(at("headeronly.csv", "patient_id,label,concept_list,covariate_list,age,sex,cci\n")),
      IoError);
}

TEST_CASE("prediction csv round trip") {
  const std::vector<ProbPrediction> preds = {{0.125, 1}, {0.625, 0}};
  const auto dir = fixtures::scratch_dir("io_preds");
  const std::string path = dir + "/preds.csv";
  write_predictions_csv(preds, path);
  const auto back = read_predictions_csv(path);
  REQUIRE(back.size() == 2);
  REQUIRE(back[0].prediction == 0.125);
  REQUIRE(back[0].label == 1);
  REQUIRE(back[1].label == 0);
}

TEST_CASE("prediction csv errors") {
  const auto dir = fixtures::scratch_dir("io_preds_bad");
  const auto at = [&](const std::string& name, const std::string& content) {
    const std::string p = dir + "/" + name;
    write_file(p, content);
    return p;
  };
  REQUIRE_THROWS_AS(read_predictions_csv(at("label.csv", "0.5,yes\n")), ParseError);
  REQUIRE_THROWS_AS(read_predictions_csv(at("fields.csv", "0.5\n")), ParseError);
  REQUIRE_THROWS_AS(read_predictions_csv(at("empty.csv", "prediction,label\n")), IoError);
}

TEST_CASE("sweep csv format is pinned") {
  SweepReport report;
  SweepRow ok;
  ok.dim = 3;
  ok.burn_in_epochs = 1;
  ok.negatives_k = 5;
  ok.directed = true;
  ok.mean_rank = 1.5;
  ok.wall_time_s = 0.25;
  SweepRow failed;
  failed.dim = 10;
  failed.burn_in_epochs = 0;
  failed.negatives_k = 2;
  failed.directed = false;
  failed.error = "negative sampling failed";
  failed.wall_time_s = 0.0;
  report.rows = {ok, failed};

  const auto dir = fixtures::scratch_dir("io_sweep");
  const std::string path = dir + "/sweep.csv";
  write_sweep_csv(report, path);
  REQUIRE(read_file(path) ==
          "dim,burn_in_epochs,negatives_k,directed,mean_rank,wall_time_s\n"
          "3,1,5,true,1.5,0.25\n"
          "10,0,2,false,nan,0\n");
}

TEST_CASE("rank reports serialize to json") {
  RankReport report;
  report.mean_rank = 2.5;
  report.ranks = {1, 4};
  report.evaluated_edges = 2;
  report.candidate_policy = "sampled:8";
  const auto j = rank_report_json(report);
  REQUIRE(j.at("mean_rank").get<double>() == 2.5);
  REQUIRE(j.at("evaluated_edges").get<std::size_t>() == 2);
  REQUIRE(j.at("candidate_policy").get<std::string>() == "sampled:8");
  REQUIRE(j.at("ranks").get<std::vector<std::size_t>>() == report.ranks);
}

TEST_CASE("run manifests") {
  RunManifest manifest;
  manifest.command = "train";
  manifest.seed = 42;
  manifest.config_digest = digest_bytes("{}");
  manifest.input_digests = {{"edges.tsv", digest_bytes("a\tb\n")}};
  manifest.output_paths = {"out.tsv"};

  // deterministic runs pin wall_time_s to null so reruns compare byte-equal
  auto j = manifest.to_json();
  REQUIRE(j.at("wall_time_s").is_null());
  REQUIRE(j.at("command") == "train");
  REQUIRE(j.at("seed") == 42);
  REQUIRE(j.at("input_digests").at("edges.tsv") == digest_bytes("a\tb\n"));
  REQUIRE_FALSE(j.contains("details"));

  manifest.wall_time_s = 1.5;
  manifest.details = nlohmann::ordered_json{{"node_count", 7}};
  j = manifest.to_json();
  REQUIRE(j.at("wall_time_s").get<double>() == 1.5);
  REQUIRE(j.at("details").at("node_count") == 7);

  const auto dir = fixtures::scratch_dir("io_manifest");
  const std::string path = dir + "/run.manifest.json";
  write_manifest(manifest, path);
  const auto body = read_file(path);
  REQUIRE(body.back() == '\n');
  REQUIRE(nlohmann::json::parse(body).at("toolkit_version") == kVersion);
}
