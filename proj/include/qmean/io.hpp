#pragma once

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "qmean/actions.hpp"
#include "qmean/bias.hpp"
#include "qmean/maxmax.hpp"
#include "qmean/model.hpp"
#include "qmean/noninvariant.hpp"
#include "qmean/quotient.hpp"

namespace qmean {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kCodeVersion = "0.1.0";

// ---------------------------------------------------------------------------
// Deterministic formatting
// ---------------------------------------------------------------------------

/// 17 significant digits: enough to round-trip any double bit-exactly, and a
/// fixed width (unlike shortest-representation formatters) so files are
/// reproducible across writers.
inline std::string decimal17(double x) {
  if (!std::isfinite(x)) throw IoError("refusing to serialize a non-finite value");
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

namespace detail {

inline double parse_double(const std::string& token, std::size_t line, std::size_t column) {
  const char* begin = token.c_str();
  char* end = nullptr;
  const double value = std::strtod(begin, &end);
  if (end == begin || *end != '\0')
    throw IoError("malformed number at line " + std::to_string(line) + ", column " +
                  std::to_string(column) + ": '" + token + "'");
  return value;
}

inline void check_keys(const nlohmann::json& j,
                       std::initializer_list<const char*> allowed, const char* context) {
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* key : allowed)
      if (item.key() == key) {
        ok = true;
        break;
      }
    if (!ok)
      throw SchemaError(std::string("unknown field '") + item.key() + "' in " + context);
  }
}

inline void check_schema_version(const nlohmann::json& j, const char* context) {
  if (!j.contains("schema_version"))
    throw SchemaError(std::string("missing schema_version in ") + context);
  if (j.at("schema_version").get<int>() != kSchemaVersion)
    throw SchemaError(std::string("unsupported schema_version in ") + context);
}

inline double finite_or_throw(double x, const char* field) {
  if (!std::isfinite(x))
    throw IoError(std::string("non-finite value in field '") + field + "'");
  return x;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Vector CSV (one coordinate per row)
// ---------------------------------------------------------------------------

inline void write_vector_csv(const TemplateVector& x, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  for (double v : x.values) out << decimal17(v) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

inline TemplateVector read_vector_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading: " + path.string());
  TemplateVector x;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    x.values.push_back(detail::parse_double(line, lineno, 1));
  }
  if (x.values.empty()) throw IoError("malformed vector file (no rows): " + path.string());
  return x;
}

// ---------------------------------------------------------------------------
// Generic numeric tables (curves, trajectories, sweeps)
// ---------------------------------------------------------------------------

struct CsvTable {
  std::vector<std::string> comments;      // emitted as "#..." lines
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;  // each of size columns.size()
};

inline void write_table_csv(const CsvTable& table, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  for (const auto& c : table.comments) out << '#' << c << '\n';
  for (std::size_t i = 0; i < table.columns.size(); ++i)
    out << table.columns[i] << (i + 1 < table.columns.size() ? "," : "\n");
  for (const auto& row : table.rows) {
    if (row.size() != table.columns.size()) throw IoError("ragged table row");
    for (std::size_t i = 0; i < row.size(); ++i)
      out << decimal17(row[i]) << (i + 1 < row.size() ? "," : "\n");
  }
  if (!out) throw IoError("write failed: " + path.string());
}

/// Registration scores as CSV rows (v_id, value, std_error, n).
inline void write_scores_csv(const std::vector<std::pair<std::string, RegistrationScore>>& scores,
                             const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << "v_id,value,std_error,n\n";
  for (const auto& [id, s] : scores)
    out << id << ',' << decimal17(s.value) << ',' << decimal17(s.std_error) << ','
        << s.n_samples << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

// ---------------------------------------------------------------------------
// JSON building blocks
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const ActionDescriptor& action) {
  nlohmann::json j;
  j["kind"] = to_string(action.kind);
  j["dimension"] = action.dimension;
  if (!action.subspace_basis.empty()) {
    nlohmann::json basis = nlohmann::json::array();
    for (const auto& b : action.subspace_basis) basis.push_back(b.values);
    j["subspace_basis"] = basis;
  }
  return j;
}

inline ActionDescriptor action_from_json(const nlohmann::json& j) {
  detail::check_keys(j, {"kind", "dimension", "subspace_basis"}, "action descriptor");
  const std::string kind = j.at("kind").get<std::string>();
  const std::size_t n = j.at("dimension").get<std::size_t>();
  if (kind == "cyclic_shift") return ActionDescriptor::cyclic(n);
  if (kind == "rotation") return ActionDescriptor::rotation(n);
  if (kind == "trivial") return ActionDescriptor::trivial(n);
  if (kind == "affine_translation") {
    std::vector<TemplateVector> basis;
    if (j.contains("subspace_basis"))
      for (const auto& row : j.at("subspace_basis"))
        basis.push_back(TemplateVector(row.get<std::vector<double>>()));
    return ActionDescriptor::affine(n, std::move(basis));
  }
  throw SchemaError("unknown action kind '" + kind + "'");
}

inline nlohmann::json to_json(const GroupElement& g) {
  nlohmann::json j;
  if (std::holds_alternative<Identity>(g)) {
    j["kind"] = "identity";
  } else if (const auto* s = std::get_if<CyclicShift>(&g)) {
    j["kind"] = "cyclic_shift";
    j["k"] = s->k;
    j["n"] = s->n;
  } else if (const auto* t = std::get_if<AffineTranslation>(&g)) {
    j["kind"] = "affine_translation";
    j["v"] = t->v.values;
  } else {
    throw IoError("rotations are registration results, not serializable transforms");
  }
  return j;
}

inline GroupElement group_element_from_json(const nlohmann::json& j) {
  detail::check_keys(j, {"kind", "k", "n", "v"}, "group element");
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "identity") return Identity{};
  if (kind == "cyclic_shift")
    return CyclicShift(j.at("k").get<std::size_t>(), j.at("n").get<std::size_t>());
  if (kind == "affine_translation")
    return AffineTranslation{TemplateVector(j.at("v").get<std::vector<double>>())};
  throw SchemaError("unknown group element kind '" + kind + "'");
}

inline nlohmann::json to_json(const NoiseSpec& noise) {
  nlohmann::json j;
  j["dimension"] = noise.dimension;
  if (noise.kind == NoiseKind::gaussian_iid) {
    j["kind"] = "gaussian_iid";
    j["per_coordinate_std"] = detail::finite_or_throw(noise.per_coordinate_std, "per_coordinate_std");
  } else {
    j["kind"] = "finite_support";
    nlohmann::json atoms = nlohmann::json::array();
    for (const auto& a : noise.atoms) atoms.push_back(a.values);
    j["atoms"] = atoms;
    j["probabilities"] = noise.probabilities;
  }
  return j;
}

inline NoiseSpec noise_from_json(const nlohmann::json& j) {
  detail::check_keys(j, {"kind", "dimension", "per_coordinate_std", "atoms", "probabilities"},
                     "noise spec");
  const std::string kind = j.at("kind").get<std::string>();
  const std::size_t n = j.at("dimension").get<std::size_t>();
  if (kind == "gaussian_iid") {
    NoiseSpec spec = gaussian_noise(n);
    spec.per_coordinate_std = j.at("per_coordinate_std").get<double>();
    return spec;
  }
  if (kind == "finite_support") {
    std::vector<TemplateVector> atoms;
    for (const auto& row : j.at("atoms"))
      atoms.push_back(TemplateVector(row.get<std::vector<double>>()));
    return finite_support_noise(std::move(atoms),
                                j.at("probabilities").get<std::vector<double>>());
  }
  throw SchemaError("unknown noise kind '" + kind + "'");
}

inline nlohmann::json to_json(const TransformationLaw& law) {
  nlohmann::json j;
  switch (law.kind) {
    case LawKind::uniform_finite: j["kind"] = "uniform_finite"; break;
    case LawKind::fixed_element: j["kind"] = "fixed_element"; break;
    case LawKind::custom_discrete: j["kind"] = "custom_discrete"; break;
  }
  nlohmann::json elements = nlohmann::json::array();
  for (const auto& g : law.elements) elements.push_back(to_json(g));
  j["elements"] = elements;
  j["weights"] = law.weights;
  return j;
}

inline TransformationLaw law_from_json(const nlohmann::json& j) {
  detail::check_keys(j, {"kind", "elements", "weights"}, "transformation law");
  TransformationLaw law;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "uniform_finite") law.kind = LawKind::uniform_finite;
  else if (kind == "fixed_element") law.kind = LawKind::fixed_element;
  else if (kind == "custom_discrete") law.kind = LawKind::custom_discrete;
  else throw SchemaError("unknown law kind '" + kind + "'");
  for (const auto& e : j.at("elements")) law.elements.push_back(group_element_from_json(e));
  law.weights = j.at("weights").get<std::vector<double>>();
  return law;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const MaxMaxReport& report) {
  nlohmann::json j;
  j["schema_version"] = kSchemaVersion;
  j["type"] = "maxmax_report";
  for (double v : report.estimate.values) detail::finite_or_throw(v, "estimate");
  j["estimate"] = report.estimate.values;
  j["iterations"] = report.iterations;
  for (double v : report.variance_trajectory) detail::finite_or_throw(v, "variance_trajectory");
  j["variance_trajectory"] = report.variance_trajectory;
  nlohmann::json assignments = nlohmann::json::array();
  for (const auto& g : report.assignments_final) assignments.push_back(to_json(g));
  j["assignments_final"] = assignments;
  j["karcher_verified"] = report.karcher_verified;
  j["start_id"] = report.start_id;
  return j;
}

inline MaxMaxReport maxmax_report_from_json(const nlohmann::json& j) {
  detail::check_schema_version(j, "maxmax report");
  detail::check_keys(j,
                     {"schema_version", "type", "estimate", "iterations",
                      "variance_trajectory", "assignments_final", "karcher_verified",
                      "start_id"},
                     "maxmax report");
  MaxMaxReport r;
  r.estimate = TemplateVector(j.at("estimate").get<std::vector<double>>());
  r.iterations = j.at("iterations").get<std::size_t>();
  r.variance_trajectory = j.at("variance_trajectory").get<std::vector<double>>();
  for (const auto& g : j.at("assignments_final"))
    r.assignments_final.push_back(group_element_from_json(g));
  r.karcher_verified = j.at("karcher_verified").get<bool>();
  r.start_id = j.at("start_id").get<std::string>();
  return r;
}

inline nlohmann::json to_json(const BiasReport& report) {
  nlohmann::json j;
  j["schema_version"] = kSchemaVersion;
  j["type"] = "bias_report";
  j["k_estimate"] = detail::finite_or_throw(report.k_estimate, "k_estimate");
  j["k_std_error"] = detail::finite_or_throw(report.k_std_error, "k_std_error");
  j["sigma"] = detail::finite_or_throw(report.sigma, "sigma");
  j["t0_norm"] = detail::finite_or_throw(report.t0_norm, "t0_norm");
  j["cb_lower"] = detail::finite_or_throw(report.cb_lower, "cb_lower");
  j["cb_lower_clamped"] = std::max(0.0, report.cb_lower);
  j["cb_upper"] = detail::finite_or_throw(report.cb_upper, "cb_upper");
  j["eb"] = detail::finite_or_throw(report.eb, "eb");
  j["eb_over_sigma"] = detail::finite_or_throw(report.eb_over_sigma, "eb_over_sigma");
  j["method"] = to_string(report.method);
  return j;
}

inline BiasReport bias_report_from_json(const nlohmann::json& j) {
  detail::check_schema_version(j, "bias report");
  detail::check_keys(j,
                     {"schema_version", "type", "k_estimate", "k_std_error", "sigma",
                      "t0_norm", "cb_lower", "cb_lower_clamped", "cb_upper", "eb",
                      "eb_over_sigma", "method"},
                     "bias report");
  BiasReport r;
  r.k_estimate = j.at("k_estimate").get<double>();
  r.k_std_error = j.at("k_std_error").get<double>();
  r.sigma = j.at("sigma").get<double>();
  r.t0_norm = j.at("t0_norm").get<double>();
  r.cb_lower = j.at("cb_lower").get<double>();
  r.cb_upper = j.at("cb_upper").get<double>();
  r.eb = j.at("eb").get<double>();
  r.eb_over_sigma = j.at("eb_over_sigma").get<double>();
  const std::string method = j.at("method").get<std::string>();
  if (method == "maxmax_on_noise") r.method = KMethod::maxmax_on_noise;
  else if (method == "sphere_search") r.method = KMethod::sphere_search;
  else if (method == "closed_form_rotation") r.method = KMethod::closed_form_rotation;
  else throw SchemaError("unknown K method '" + method + "'");
  return r;
}

inline nlohmann::json to_json(const CriticalNoise& cn) {
  nlohmann::json j;
  j["schema_version"] = kSchemaVersion;
  j["type"] = "critical_noise";
  j["sigma_c"] = detail::finite_or_throw(cn.sigma_c, "sigma_c");
  j["regime"] = to_string(cn.regime);
  j["t0_norm"] = cn.t0_norm;
  j["theta_t0"] = cn.theta_t0;
  j["theta_H"] = cn.theta_H;
  j["a"] = cn.a;
  j["A"] = cn.A;
  j["omega"] = cn.omega;
  return j;
}

inline CriticalNoise critical_noise_from_json(const nlohmann::json& j) {
  detail::check_schema_version(j, "critical noise");
  detail::check_keys(j,
                     {"schema_version", "type", "sigma_c", "regime", "t0_norm", "theta_t0",
                      "theta_H", "a", "A", "omega"},
                     "critical noise");
  CriticalNoise cn;
  cn.sigma_c = j.at("sigma_c").get<double>();
  const std::string regime = j.at("regime").get<std::string>();
  if (regime == "subgroup") cn.regime = SigmaCRegime::subgroup;
  else if (regime == "linear") cn.regime = SigmaCRegime::linear;
  else if (regime == "linear_regularized") cn.regime = SigmaCRegime::linear_regularized;
  else throw SchemaError("unknown sigma_c regime '" + regime + "'");
  cn.t0_norm = j.at("t0_norm").get<double>();
  cn.theta_t0 = j.at("theta_t0").get<double>();
  cn.theta_H = j.at("theta_H").get<double>();
  cn.a = j.at("a").get<double>();
  cn.A = j.at("A").get<double>();
  cn.omega = j.at("omega").get<double>();
  return cn;
}

inline void write_json(const nlohmann::json& j, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

inline nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("invalid JSON in " + path.string() + ": " + e.what());
  }
  return j;
}

// ---------------------------------------------------------------------------
// Sample files
// ---------------------------------------------------------------------------

inline void write_sample_csv(const ObservationSample& sample,
                             const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  const SampleMeta& meta = sample.meta;
  out << "#schema_version=" << kSchemaVersion << '\n';
  out << "#sigma=" << decimal17(meta.sigma) << '\n';
  out << "#seed=" << meta.seed << '\n';
  out << "#action_kind=" << to_string(meta.action.kind) << '\n';
  out << "#action_dimension=" << meta.action.dimension << '\n';
  out << "#noise_kind="
      << (meta.noise.kind == NoiseKind::gaussian_iid ? "gaussian_iid" : "finite_support")
      << '\n';
  if (meta.noise.kind == NoiseKind::gaussian_iid)
    out << "#per_coordinate_std=" << decimal17(meta.noise.per_coordinate_std) << '\n';
  out << "#template_id=" << meta.template_id << '\n';
  out << "#count=" << meta.count << '\n';
  bool shifts_only = !sample.transforms.empty();
  for (const auto& g : sample.transforms)
    if (!std::holds_alternative<CyclicShift>(g) && !std::holds_alternative<Identity>(g))
      shifts_only = false;
  if (shifts_only) {
    out << "#transforms=";
    for (std::size_t i = 0; i < sample.transforms.size(); ++i) {
      const auto* s = std::get_if<CyclicShift>(&sample.transforms[i]);
      out << (s ? s->k : 0) << (i + 1 < sample.transforms.size() ? "," : "");
    }
    out << '\n';
  }
  for (const auto& y : sample.observations) {
    for (std::size_t j = 0; j < y.size(); ++j)
      out << decimal17(y[j]) << (j + 1 < y.size() ? "," : "\n");
  }
  if (!out) throw IoError("write failed: " + path.string());
}

/// Reads a sample CSV. The transformation law cannot be reconstructed from a
/// CSV beyond the uniform/fixed cases, so consumers needing the full law
/// should use the JSON container.
inline ObservationSample read_sample_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading: " + path.string());
  ObservationSample sample;
  std::map<std::string, std::string> meta;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq != std::string::npos) meta[line.substr(1, eq - 1)] = line.substr(eq + 1);
      continue;
    }
    TemplateVector row;
    std::stringstream ss(line);
    std::string token;
    std::size_t column = 0;
    while (std::getline(ss, token, ',')) {
      ++column;
      row.values.push_back(detail::parse_double(token, lineno, column));
    }
    sample.observations.push_back(std::move(row));
  }
  if (sample.observations.empty())
    throw IoError("malformed sample file (no observations): " + path.string());

  const std::size_t n = sample.observations.front().size();
  for (const auto& y : sample.observations)
    if (y.size() != n) throw IoError("ragged sample rows in " + path.string());

  SampleMeta& m = sample.meta;
  if (meta.count("sigma")) m.sigma = detail::parse_double(meta["sigma"], 0, 0);
  if (meta.count("seed")) m.seed = std::stoull(meta["seed"]);
  const std::string kind = meta.count("action_kind") ? meta["action_kind"] : "cyclic_shift";
  if (kind == "cyclic_shift") m.action = ActionDescriptor::cyclic(n);
  else if (kind == "rotation") m.action = ActionDescriptor::rotation(n);
  else if (kind == "trivial") m.action = ActionDescriptor::trivial(n);
  else throw IoError("sample CSV cannot describe action kind '" + kind + "'");
  if (meta.count("noise_kind") && meta["noise_kind"] == "gaussian_iid") {
    m.noise = gaussian_noise(n);
    if (meta.count("per_coordinate_std"))
      m.noise.per_coordinate_std = detail::parse_double(meta["per_coordinate_std"], 0, 0);
  }
  if (meta.count("template_id")) m.template_id = meta["template_id"];
  m.count = sample.observations.size();
  if (meta.count("transforms")) {
    std::stringstream ss(meta["transforms"]);
    std::string token;
    while (std::getline(ss, token, ','))
      sample.transforms.push_back(CyclicShift(std::stoull(token), n));
  }
  return sample;
}

inline nlohmann::json to_json(const ObservationSample& sample) {
  nlohmann::json j;
  j["schema_version"] = kSchemaVersion;
  j["type"] = "sample";
  nlohmann::json meta;
  meta["sigma"] = sample.meta.sigma;
  meta["seed"] = sample.meta.seed;
  meta["action"] = to_json(sample.meta.action);
  meta["noise"] = to_json(sample.meta.noise);
  meta["law"] = to_json(sample.meta.law);
  meta["template_id"] = sample.meta.template_id;
  meta["count"] = sample.meta.count;
  j["meta"] = meta;
  nlohmann::json obs = nlohmann::json::array();
  for (const auto& y : sample.observations) obs.push_back(y.values);
  j["observations"] = obs;
  nlohmann::json transforms = nlohmann::json::array();
  for (const auto& g : sample.transforms) transforms.push_back(to_json(g));
  j["transforms"] = transforms;
  return j;
}

inline ObservationSample sample_from_json(const nlohmann::json& j) {
  detail::check_schema_version(j, "sample");
  detail::check_keys(j, {"schema_version", "type", "meta", "observations", "transforms"},
                     "sample");
  detail::check_keys(j.at("meta"),
                     {"sigma", "seed", "action", "noise", "law", "template_id", "count"},
                     "sample meta");
  ObservationSample sample;
  const nlohmann::json& meta = j.at("meta");
  sample.meta.sigma = meta.at("sigma").get<double>();
  sample.meta.seed = meta.at("seed").get<std::uint64_t>();
  sample.meta.action = action_from_json(meta.at("action"));
  sample.meta.noise = noise_from_json(meta.at("noise"));
  sample.meta.law = law_from_json(meta.at("law"));
  sample.meta.template_id = meta.at("template_id").get<std::string>();
  sample.meta.count = meta.at("count").get<std::size_t>();
  for (const auto& row : j.at("observations"))
    sample.observations.push_back(TemplateVector(row.get<std::vector<double>>()));
  for (const auto& g : j.at("transforms"))
    sample.transforms.push_back(group_element_from_json(g));
  return sample;
}

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

/// FNV-1a 64-bit over the file bytes, as a 16-digit hex string.
inline std::string file_hash(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot hash missing file: " + path.string());
  std::uint64_t h = 0xCBF29CE484222325ull;
  char buf[4096];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001B3ull;
    }
    if (!in) break;
  }
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(h));
  return hex;
}

struct Manifest {
  nlohmann::json config;
  std::vector<std::pair<std::string, std::string>> artifacts;  // (relative path, hash)
  double elapsed_seconds = 0.0;
};

inline void write_manifest(const Manifest& manifest, const std::filesystem::path& directory) {
  nlohmann::json j;
  j["schema_version"] = kSchemaVersion;
  j["type"] = "manifest";
  j["code_version"] = kCodeVersion;
  j["config"] = manifest.config;
  j["elapsed_seconds"] = manifest.elapsed_seconds;
  nlohmann::json artifacts = nlohmann::json::array();
  for (const auto& [rel, hash] : manifest.artifacts) {
    nlohmann::json a;
    a["path"] = rel;
    a["fnv1a64"] = hash;
    artifacts.push_back(a);
  }
  j["artifacts"] = artifacts;
  write_json(j, directory / "manifest.json");
}

/// Re-hashes every listed artifact; throws on a missing file or hash mismatch.
inline void verify_manifest(const std::filesystem::path& directory) {
  const nlohmann::json j = read_json(directory / "manifest.json");
  detail::check_schema_version(j, "manifest");
  for (const auto& a : j.at("artifacts")) {
    const std::string rel = a.at("path").get<std::string>();
    const std::string expected = a.at("fnv1a64").get<std::string>();
    const std::string actual = file_hash(directory / rel);
    if (actual != expected)
      throw IoError("hash mismatch for artifact '" + rel + "'");
  }
}

}  // namespace qmean
