#pragma once

// File formats and fingerprints. Everything the CLI reads or writes goes
// through here so the formats stay pinned in one place: edge lists (TSV),
// embeddings (TSV + JSON sidecar), sweep reports (CSV), rank reports (JSON),
// prediction sets (CSV), patient records (CSV), and per-run manifests (JSON).

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hypertax/config.hpp"
#include "hypertax/errors.hpp"
#include "hypertax/evaluator.hpp"
#include "hypertax/features.hpp"
#include "hypertax/graph.hpp"
#include "hypertax/metrics.hpp"
#include "hypertax/trainer.hpp"
#include "hypertax/version.hpp"

namespace hypertax {

inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string digest_bytes(std::string_view bytes) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "fnv1a64:%016llx",
                static_cast<unsigned long long>(fnv1a64(bytes)));
  return buf;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("read failed on '" + path + "'");
  return std::move(buf).str();
}

inline std::string digest_file(const std::string& path) { return digest_bytes(read_file(path)); }

inline void write_file(const std::string& path, std::string_view content) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(parent, ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw IoError("write failed on '" + path + "'");
}

namespace detail {

// Shortest round-trip decimal: %.17g always reparses to the same double.
inline void append_double(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out += buf;
}

inline std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == sep) {
      out.emplace_back(line.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

inline double parse_double(const std::string& field, std::size_t line_no) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(field, &pos);
  } catch (const std::exception&) {
    throw ParseError("line " + std::to_string(line_no) + ": bad number '" + field + "'");
  }
  if (pos != field.size()) {
    throw ParseError("line " + std::to_string(line_no) + ": bad number '" + field + "'");
  }
  return v;
}

inline std::vector<std::string> split_list(const std::string& field) {
  std::vector<std::string> out;
  if (field.empty()) return out;
  std::unordered_set<std::string> seen;
  for (auto& item : split(field, ';')) {
    if (item.empty()) continue;
    if (seen.insert(item).second) out.push_back(std::move(item));
  }
  return out;
}

}  // namespace detail

inline KnowledgeGraph read_edge_list_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return KnowledgeGraph::parse_edge_list(in);
}

inline void write_edge_list(const KnowledgeGraph& graph, const std::string& path) {
  std::string out;
  for (const auto& [p, c] : graph.edges()) {
    out += graph.code(p);
    out += '\t';
    out += graph.code(c);
    out += '\n';
  }
  write_file(path, out);
}

// One code per line; blank lines and '#' comments skipped.
inline std::vector<std::string> read_code_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r\n");
    std::string code = line.substr(first, last - first + 1);
    if (code[0] == '#') continue;
    out.push_back(std::move(code));
  }
  return out;
}

inline void write_embedding_tsv(const EmbeddingTable& table, const std::string& path) {
  std::string out = "concept_id";
  for (std::size_t i = 0; i < table.dim(); ++i) {
    out += "\tx" + std::to_string(i);
  }
  out += '\n';
  for (std::size_t r = 0; r < table.size(); ++r) {
    out += table.code(r);
    for (const double v : table.row(r)) {
      out += '\t';
      detail::append_double(out, v);
    }
    out += '\n';
  }
  write_file(path, out);
}

inline std::string sidecar_path(const std::string& embedding_path) {
  return embedding_path + ".meta.json";
}

inline void write_embedding_sidecar(const EmbeddingTable& table, const std::string& path) {
  nlohmann::ordered_json j;
  j["toolkit_version"] = kVersion;
  j["node_count"] = table.size();
  j["dim"] = table.dim();
  j["config"] = table.config.to_json();
  j["final_loss"] = table.final_loss;
  j["epochs_run"] = table.epochs_run;
  j["graph_digest"] = table.graph_digest;
  write_file(path, j.dump(2) + "\n");
}

// Reads the TSV; when the sidecar written next to it exists, its config and
// provenance are restored too (epsilon in particular, which gates the ball
// checks downstream).
inline EmbeddingTable read_embedding_tsv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::string line;
  if (!std::getline(in, line)) throw IoError("'" + path + "' is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = detail::split(line, '\t');
  if (header.size() < 2 || header[0] != "concept_id") {
    throw IoError("'" + path + "': expected header concept_id<TAB>x0...");
  }
  const std::size_t dim = header.size() - 1;
  for (std::size_t i = 0; i < dim; ++i) {
    if (header[i + 1] != "x" + std::to_string(i)) {
      throw IoError("'" + path + "': bad coordinate header '" + header[i + 1] + "'");
    }
  }

  std::vector<std::string> codes;
  std::vector<double> data;
  std::unordered_set<std::string> seen;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = detail::split(line, '\t');
    if (fields.size() != dim + 1) {
      throw ParseError("line " + std::to_string(line_no) + ": expected " +
                       std::to_string(dim + 1) + " fields, got " + std::to_string(fields.size()));
    }
    if (!seen.insert(fields[0]).second) {
      throw IoError("duplicate concept_id '" + fields[0] + "' in '" + path + "'");
    }
    codes.push_back(fields[0]);
    for (std::size_t i = 0; i < dim; ++i) data.push_back(detail::parse_double(fields[i + 1], line_no));
  }
  if (codes.empty()) throw IoError("'" + path + "' has no embedding rows");

  EmbeddingTable table(std::move(codes), dim);
  table.data() = std::move(data);

  const std::string meta = sidecar_path(path);
  if (std::filesystem::exists(meta)) {
    try {
      const auto j = nlohmann::json::parse(read_file(meta));
      if (j.contains("config")) table.config = TrainingConfig::from_json(j.at("config"));
      if (j.contains("final_loss") && j.at("final_loss").is_number()) {
        table.final_loss = j.at("final_loss").get<double>();
      }
      if (j.contains("epochs_run")) table.epochs_run = j.at("epochs_run").get<std::size_t>();
      if (j.contains("graph_digest")) table.graph_digest = j.at("graph_digest").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw IoError("bad sidecar '" + meta + "': " + e.what());
    }
  }
  return table;
}

// `patient_id,label,concept_list,covariate_list,age,sex,cci`; lists are
// semicolon-separated, the header row is optional, fields are never quoted.
inline std::vector<PatientRecord> read_patients_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::vector<PatientRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (line_no == 1 && line.rfind("patient_id", 0) == 0) continue;
    const auto fields = detail::split(line, ',');
    if (fields.size() != 7) {
      throw ParseError("line " + std::to_string(line_no) + ": expected 7 fields, got " +
                       std::to_string(fields.size()));
    }
    PatientRecord rec;
    rec.patient_id = fields[0];
    if (rec.patient_id.empty()) {
      throw ParseError("line " + std::to_string(line_no) + ": empty patient_id");
    }
    if (fields[1] == "0") {
      rec.label = 0;
    } else if (fields[1] == "1") {
      rec.label = 1;
    } else {
      throw ParseError("line " + std::to_string(line_no) + ": label must be 0 or 1");
    }
    rec.concepts = detail::split_list(fields[2]);
    rec.covariates = detail::split_list(fields[3]);
    rec.age = detail::parse_double(fields[4], line_no);
    rec.sex = detail::parse_double(fields[5], line_no);
    rec.cci = detail::parse_double(fields[6], line_no);
    out.push_back(std::move(rec));
  }
  if (out.empty()) throw IoError("'" + path + "' has no patient rows");
  return out;
}

inline void write_patients_csv(const std::vector<PatientRecord>& records,
                               const std::string& path) {
  std::string out = "patient_id,label,concept_list,covariate_list,age,sex,cci\n";
  const auto join = [](const std::vector<std::string>& items) {
    std::string s;
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (i) s += ';';
      s += items[i];
    }
    return s;
  };
  for (const auto& rec : records) {
    out += rec.patient_id;
    out += ',';
    out += std::to_string(rec.label);
    out += ',';
    out += join(rec.concepts);
    out += ',';
    out += join(rec.covariates);
    out += ',';
    detail::append_double(out, rec.age);
    out += ',';
    detail::append_double(out, rec.sex);
    out += ',';
    detail::append_double(out, rec.cci);
    out += '\n';
  }
  write_file(path, out);
}

inline void write_predictions_csv(const std::vector<ProbPrediction>& preds,
                                  const std::string& path) {
  std::string out = "prediction,label\n";
  for (const auto& p : preds) {
    detail::append_double(out, p.prediction);
    out += ',';
    out += std::to_string(p.label);
    out += '\n';
  }
  write_file(path, out);
}

inline std::vector<ProbPrediction> read_predictions_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::vector<ProbPrediction> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (line_no == 1 && line.rfind("prediction", 0) == 0) continue;
    const auto fields = detail::split(line, ',');
    if (fields.size() != 2) {
      throw ParseError("line " + std::to_string(line_no) + ": expected prediction,label");
    }
    ProbPrediction p;
    p.prediction = detail::parse_double(fields[0], line_no);
    if (fields[1] == "0") {
      p.label = 0;
    } else if (fields[1] == "1") {
      p.label = 1;
    } else {
      throw ParseError("line " + std::to_string(line_no) + ": label must be 0 or 1");
    }
    out.push_back(p);
  }
  if (out.empty()) throw IoError("'" + path + "' has no prediction rows");
  return out;
}

inline void write_sweep_csv(const SweepReport& report, const std::string& path) {
  std::string out = "dim,burn_in_epochs,negatives_k,directed,mean_rank,wall_time_s\n";
  for (const auto& row : report.rows) {
    out += std::to_string(row.dim);
    out += ',';
    out += std::to_string(row.burn_in_epochs);
    out += ',';
    out += std::to_string(row.negatives_k);
    out += ',';
    out += row.directed ? "true" : "false";
    out += ',';
    detail::append_double(out, row.mean_rank);  // failed cells carry NaN, printed as nan
    out += ',';
    detail::append_double(out, row.wall_time_s);
    out += '\n';
  }
  write_file(path, out);
}

inline nlohmann::ordered_json rank_report_json(const RankReport& report) {
  nlohmann::ordered_json j;
  j["mean_rank"] = report.mean_rank;
  j["evaluated_edges"] = report.evaluated_edges;
  j["candidate_policy"] = report.candidate_policy;
  j["ranks"] = report.ranks;
  return j;
}

// One manifest per CLI run: what ran, over which input bytes, producing
// which files. wall_time_s is null in deterministic mode so that reruns are
// byte-identical end to end.
struct RunManifest {
  std::string command;
  std::uint64_t seed = 0;
  std::string config_digest;  // empty when the command takes no config
  std::vector<std::pair<std::string, std::string>> input_digests;  // path, digest
  std::vector<std::string> output_paths;
  std::optional<double> wall_time_s;
  nlohmann::ordered_json details;  // command-specific extras

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["command"] = command;
    j["toolkit_version"] = kVersion;
    j["seed"] = seed;
    j["config_digest"] = config_digest;
    auto inputs = nlohmann::ordered_json::object();
    for (const auto& [path, digest] : input_digests) inputs[path] = digest;
    j["input_digests"] = inputs;
    j["output_paths"] = output_paths;
    if (wall_time_s) {
      j["wall_time_s"] = *wall_time_s;
    } else {
      j["wall_time_s"] = nullptr;
    }
    if (!details.is_null()) j["details"] = details;
    return j;
  }
};

inline void write_manifest(const RunManifest& manifest, const std::string& path) {
  write_file(path, manifest.to_json().dump(2) + "\n");
}

}  // namespace hypertax
