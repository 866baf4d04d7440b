#pragma once

// JSON files: representations, families, single matrices and vectors, block
// multisets, and oracle specification strings. Complex numbers are [re, im]
// pairs, matrices are lists of rows, vertex indices are 1-based. Documents
// written here carry "schema": "formrep/1".

#include "formrep/canonical.hpp"
#include "formrep/core_forms.hpp"
#include "formrep/generators.hpp"
#include "formrep/linearize.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace formrep::io {

using Json = nlohmann::json;

inline constexpr const char* schema_tag = "formrep/1";

inline Error parse_error(const std::string& what) { return Error(ErrorCode::parse_error, what); }

// ---------------------------------------------------------------------------
// Scalars, vectors, matrices

inline Json to_json(Complex z) { return Json::array({z.real(), z.imag()}); }

inline Complex complex_from_json(const Json& j) {
  if (j.is_number()) return Complex(j.get<double>(), 0.0);
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
    return Complex(j[0].get<double>(), j[1].get<double>());
  throw parse_error("expected a complex number [re, im], got " + j.dump());
}

inline Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(to_json(m(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

/// `cols` is needed when the matrix has no rows; -1 means "read from the data".
inline Matrix matrix_from_json(const Json& j, Eigen::Index rows = -1, Eigen::Index cols = -1) {
  if (!j.is_array()) throw parse_error("matrix must be a list of rows");
  const auto r = static_cast<Eigen::Index>(j.size());
  if (rows >= 0 && r != rows) throw Error(ErrorCode::dimension_mismatch, "matrix has " + std::to_string(r) + " rows, expected " + std::to_string(rows));
  Eigen::Index c = r > 0 ? -1 : std::max<Eigen::Index>(cols, 0);
  for (const auto& row : j) {
    if (!row.is_array()) throw parse_error("matrix row must be a list");
    if (c < 0) c = static_cast<Eigen::Index>(row.size());
    if (static_cast<Eigen::Index>(row.size()) != c) throw parse_error("matrix rows have different lengths");
  }
  if (cols >= 0 && c != cols) throw Error(ErrorCode::dimension_mismatch, "matrix has " + std::to_string(c) + " columns, expected " + std::to_string(cols));
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index k = 0; k < c; ++k) m(i, k) = complex_from_json(j[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)]);
  return m;
}

inline Json vector_to_json(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(to_json(v(i)));
  return out;
}

inline Vector vector_from_json(const Json& j) {
  if (!j.is_array()) throw parse_error("vector must be a list");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = complex_from_json(j[i]);
  return v;
}

// ---------------------------------------------------------------------------
// Files

inline Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw parse_error("cannot open '" + path.string() + "'");
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw parse_error("'" + path.string() + "': " + e.what());
  }
}

inline std::string dump(const Json& j) { return j.dump(2) + "\n"; }

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::invalid_parameters, "cannot write '" + path.string() + "'");
  out << text;
}

template <typename T>
T field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw parse_error(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception&) {
    throw parse_error(std::string("field '") + key + "' has the wrong type");
  }
}

inline FormKind kind_from_string(const std::string& s) {
  if (s == "bilinear") return FormKind::bilinear;
  if (s == "sesquilinear") return FormKind::sesquilinear;
  throw parse_error("unknown form kind '" + s + "'");
}

// ---------------------------------------------------------------------------
// Representations and families

inline Json representation_to_json(const FormRepresentation& rep) {
  Json edges = Json::array();
  for (std::size_t a = 0; a < rep.graph().edges.size(); ++a) {
    const auto& e = rep.graph().edges[a];
    edges.push_back({{"id", e.id},
                     {"tail", e.tail + 1},
                     {"head", e.head + 1},
                     {"kind", std::string(to_string(e.kind))},
                     {"matrix", matrix_to_json(rep.matrix(a))}});
  }
  return {{"schema", schema_tag}, {"vertices", rep.dims()}, {"edges", edges}};
}

inline FormRepresentation representation_from_json(const Json& j) {
  const auto dims = field<std::vector<int>>(j, "vertices");
  const auto& edges = j.contains("edges") ? j.at("edges") : Json::array();
  if (!edges.is_array()) throw parse_error("'edges' must be a list");
  MixedGraph graph{static_cast<int>(dims.size()), {}};
  std::vector<Matrix> mats;
  for (const auto& e : edges) {
    Edge edge{field<std::string>(e, "id"), field<int>(e, "tail") - 1, field<int>(e, "head") - 1,
              kind_from_string(field<std::string>(e, "kind"))};
    graph.edges.push_back(edge);
    graph.validate();
    if (!e.contains("matrix")) throw parse_error("edge '" + edge.id + "' has no matrix");
    mats.push_back(matrix_from_json(e.at("matrix"), dims[static_cast<std::size_t>(edge.tail)],
                                    dims[static_cast<std::size_t>(edge.head)]));
  }
  return FormRepresentation(std::move(graph), dims, std::move(mats));
}

inline Json family_to_json(const TransformFamily& f) {
  Json mats = Json::array();
  for (const auto& m : f.matrices) mats.push_back(matrix_to_json(m));
  return {{"schema", schema_tag}, {"matrices", mats}};
}

inline TransformFamily family_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("matrices") || !j.at("matrices").is_array())
    throw parse_error("family file needs a 'matrices' list");
  TransformFamily f;
  for (const auto& m : j.at("matrices")) {
    Matrix s = matrix_from_json(m);
    if (s.rows() == 0) s = Matrix(0, 0);
    f.matrices.push_back(std::move(s));
  }
  return f;
}

inline Json report_to_json(const VerificationReport& r) {
  Json residuals = Json::array();
  for (const auto& e : r.residuals) residuals.push_back({{"edge", e.edge_id}, {"residual", e.residual}});
  return {{"ok", r.ok},
          {"invertible", r.invertible},
          {"max_residual", r.max_residual},
          {"worst_edge", r.worst_edge},
          {"residuals", residuals}};
}

inline Json trace_to_json(const ExtractionTrace& t) {
  return {{"candidates_tried", t.candidates_tried},
          {"candidates_in_span", t.candidates_in_span},
          {"perturbation_steps", t.perturbation_steps},
          {"perturbation_trials", t.perturbation_trials},
          {"perturbation_failures", t.perturbation_failures},
          {"min_singular_u", t.min_singular_u},
          {"min_singular_v", t.min_singular_v}};
}

// ---------------------------------------------------------------------------
// Block multisets

inline Json blocks_to_json(const CanonicalBlockMultiset& set) {
  Json blocks = Json::array();
  for (const auto& b : set.blocks) {
    Json jb = {{"variant", std::string(to_string(b.variant))}, {"n", b.n}};
    if (b.variant == BlockVariant::gamma && set.kind == FormKind::sesquilinear) jb["lambda"] = to_json(b.param);
    if (b.variant == BlockVariant::hpair) jb["mu"] = to_json(b.param);
    blocks.push_back(std::move(jb));
  }
  return {{"schema", schema_tag}, {"kind", std::string(to_string(set.kind))}, {"blocks", blocks}};
}

inline CanonicalBlockMultiset blocks_from_json(const Json& j) {
  CanonicalBlockMultiset set;
  set.kind = kind_from_string(field<std::string>(j, "kind"));
  if (!j.contains("blocks") || !j.at("blocks").is_array()) throw parse_error("missing 'blocks' list");
  for (const auto& jb : j.at("blocks")) {
    const auto variant = field<std::string>(jb, "variant");
    const int n = field<int>(jb, "n");
    if (variant == "singular")
      set.blocks.push_back(CanonicalBlock::singular(n));
    else if (variant == "gamma")
      set.blocks.push_back(CanonicalBlock::gamma(n, jb.contains("lambda") ? complex_from_json(jb.at("lambda")) : Complex(1, 0)));
    else if (variant == "hpair")
      set.blocks.push_back(CanonicalBlock::hpair(n, complex_from_json(jb.at("mu"))));
    else
      throw parse_error("unknown block variant '" + variant + "'");
  }
  return set;
}

// ---------------------------------------------------------------------------
// Oracle specifications
//
//   linear:<matrix-file> | radial:<c>:<p> | shear:<vector-file>:<g> | compose:[spec, ...]
// File names are relative to `base`.

namespace detail {

inline std::vector<std::string> split_top_level(const std::string& s) {
  std::vector<std::string> parts;
  int depth = 0;
  std::string cur;
  for (char ch : s) {
    if (ch == '[') ++depth;
    if (ch == ']') --depth;
    if (depth < 0) throw parse_error("unbalanced brackets in oracle spec");
    if (ch == ',' && depth == 0) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  if (depth != 0) throw parse_error("unbalanced brackets in oracle spec");
  parts.push_back(cur);
  return parts;
}

inline double parse_number(const std::string& s) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw parse_error("bad number '" + s + "'");
    return v;
  } catch (const std::logic_error&) {
    throw parse_error("bad number '" + s + "'");
  }
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\n");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\n") - b + 1);
}

}  // namespace detail

inline OracleSpec parse_oracle_spec(const std::string& text_in, const std::filesystem::path& base) {
  const std::string text = detail::trim(text_in);
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw parse_error("oracle spec '" + text + "' has no ':'");
  const std::string head = text.substr(0, colon);
  const std::string rest = text.substr(colon + 1);
  if (head == "linear") {
    return OracleSpec::linear(matrix_from_json(field<Json>(read_json_file(base / rest), "matrix")), rest);
  }
  if (head == "radial") {
    const auto sep = rest.find(':');
    if (sep == std::string::npos) throw parse_error("radial spec needs radial:<c>:<p>");
    return OracleSpec::radial(detail::parse_number(rest.substr(0, sep)), detail::parse_number(rest.substr(sep + 1)));
  }
  if (head == "shear") {
    const auto sep = rest.rfind(':');
    if (sep == std::string::npos) throw parse_error("shear spec needs shear:<vector-file>:<g>");
    const std::string file = rest.substr(0, sep);
    const std::string g = rest.substr(sep + 1);
    shear_function(g);  // rejects unknown names early
    return OracleSpec::shear(vector_from_json(field<Json>(read_json_file(base / file), "vector")), g, file);
  }
  if (head == "compose") {
    if (rest.size() < 2 || rest.front() != '[' || rest.back() != ']')
      throw parse_error("compose spec needs compose:[spec, ...]");
    std::vector<OracleSpec> parts;
    for (const auto& p : detail::split_top_level(rest.substr(1, rest.size() - 2)))
      parts.push_back(parse_oracle_spec(p, base));
    return OracleSpec::compose(std::move(parts));
  }
  throw parse_error("unknown oracle term '" + head + "'");
}

/// Text form of a spec; linear and shear terms must carry file names.
inline std::string oracle_spec_to_string(const OracleSpec& spec) {
  switch (spec.term) {
    case OracleTerm::linear:
      if (spec.matrix_file.empty()) throw Error(ErrorCode::invalid_parameters, "linear term has no file name");
      return "linear:" + spec.matrix_file;
    case OracleTerm::radial: return "radial:" + Json(spec.c).dump() + ":" + Json(spec.p).dump();
    case OracleTerm::shear:
      if (spec.direction_file.empty()) throw Error(ErrorCode::invalid_parameters, "shear term has no file name");
      return "shear:" + spec.direction_file + ":" + spec.g;
    case OracleTerm::compose: {
      std::string s = "compose:[";
      for (std::size_t i = 0; i < spec.parts.size(); ++i) s += (i ? "," : "") + oracle_spec_to_string(spec.parts[i]);
      return s + "]";
    }
  }
  return {};
}

inline std::vector<OracleSpec> read_oracle_file(const std::filesystem::path& path) {
  const Json j = read_json_file(path);
  if (!j.is_object() || !j.contains("oracles") || !j.at("oracles").is_array())
    throw parse_error("oracle file needs an 'oracles' list");
  std::vector<OracleSpec> specs;
  for (const auto& s : j.at("oracles")) {
    if (!s.is_string()) throw parse_error("oracle entries must be strings");
    specs.push_back(parse_oracle_spec(s.get<std::string>(), path.parent_path()));
  }
  return specs;
}

/// Writes repA.json, repB.json, oracles.json and the matrix and vector files
/// the oracle strings refer to. Returns the file names written.
inline std::vector<std::string> write_witness_bundle(const WitnessBundle& bundle, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> files;
  auto put = [&](const std::string& name, const Json& j) {
    write_text_file(dir / name, dump(j));
    files.push_back(name);
  };
  put("repA.json", representation_to_json(bundle.rep_a));
  put("repB.json", representation_to_json(bundle.rep_b));

  Json oracles = Json::array();
  for (std::size_t i = 0; i < bundle.specs.size(); ++i) {
    OracleSpec spec = bundle.specs[i];
    const std::string tag = std::to_string(i + 1);
    std::function<void(OracleSpec&)> name_files = [&](OracleSpec& s) {
      if (s.term == OracleTerm::linear) {
        s.matrix_file = "L" + tag + ".json";
        put(s.matrix_file, {{"schema", schema_tag}, {"matrix", matrix_to_json(s.matrix)}});
      } else if (s.term == OracleTerm::shear) {
        s.direction_file = "k" + tag + ".json";
        put(s.direction_file, {{"schema", schema_tag}, {"vector", vector_to_json(s.direction)}});
      }
      for (auto& p : s.parts) name_files(p);
    };
    name_files(spec);
    oracles.push_back(oracle_spec_to_string(spec));
  }
  put("oracles.json", {{"schema", schema_tag}, {"oracles", oracles}});
  return files;
}

}  // namespace formrep::io
