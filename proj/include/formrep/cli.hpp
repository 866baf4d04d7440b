#pragma once

// Command-line front end. run_cli takes the arguments after the program name
// and writes JSON to `out`, diagnostics to `err`.
//
// Exit codes:
//   0  success (verified, equivalent, written)
//   1  negative answer: verification failed, forms not equivalent
//   2  structural or dimension mismatch, unknown edge
//   3  unreadable or malformed input file
//   4  basis extraction failed (exhausted search, oracle round trip)
//   5  ill-conditioned input
//   6  invalid parameters, singular family, no nonlinear witness
//  64  command-line usage error

#include "formrep/canonical.hpp"
#include "formrep/core_forms.hpp"
#include "formrep/generators.hpp"
#include "formrep/io.hpp"
#include "formrep/linearize.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace formrep::cli {

enum ExitCode : int {
  exit_ok = 0,
  exit_negative = 1,
  exit_structural = 2,
  exit_parse = 3,
  exit_extraction = 4,
  exit_ill_conditioned = 5,
  exit_invalid = 6,
  exit_usage = 64,
};

inline int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::unknown_edge:
    case ErrorCode::dimension_mismatch:
    case ErrorCode::structural_mismatch: return exit_structural;
    case ErrorCode::parse_error: return exit_parse;
    case ErrorCode::perturbation_exhausted:
    case ErrorCode::oracle_roundtrip: return exit_extraction;
    case ErrorCode::ill_conditioned: return exit_ill_conditioned;
    case ErrorCode::non_invertible:
    case ErrorCode::invalid_parameters:
    case ErrorCode::no_nonlinear_witness: return exit_invalid;
  }
  return exit_invalid;
}

struct CliConfig {
  std::optional<double> tol;
  std::optional<double> rank_threshold;
  std::uint64_t seed = 0;
  std::string out;
  bool quiet = false;
};

namespace detail {

inline MixedGraph graph_by_name(const std::string& name) {
  if (name == "example") return example_graph();
  if (name == "loop-bilinear") return loop_graph(FormKind::bilinear);
  if (name == "loop-sesquilinear") return loop_graph(FormKind::sesquilinear);
  if (name == "triangle") return triangle_multigraph();
  throw Error(ErrorCode::invalid_parameters, "unknown graph '" + name + "'");
}

inline Matrix read_matrix_file(const std::string& path, std::optional<FormKind>* kind_in_file = nullptr) {
  const auto j = io::read_json_file(path);
  if (kind_in_file != nullptr && j.is_object() && j.contains("kind"))
    *kind_in_file = io::kind_from_string(io::field<std::string>(j, "kind"));
  Matrix m = io::matrix_from_json(io::field<io::Json>(j, "matrix"));
  if (m.rows() == 0) m = Matrix(0, 0);
  return m;
}

inline FormKind resolve_kind(const std::string& flag, std::optional<FormKind> from_file) {
  if (!flag.empty()) return io::kind_from_string(flag);
  if (from_file) return *from_file;
  throw Error(ErrorCode::invalid_parameters, "--kind is required (bilinear or sesquilinear)");
}

inline CanonicalConfig canonical_config(const CliConfig& cfg) {
  CanonicalConfig c;
  if (cfg.tol) c.cluster_tol = c.param_tol = *cfg.tol;
  if (cfg.rank_threshold) c.rank_tol = *cfg.rank_threshold;
  return c;
}

}  // namespace detail

inline int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Form representations of mixed graphs: verify, linearize, canonicalize.", "formrep"};
  app.require_subcommand(1);
  app.fallthrough();

  CliConfig cfg;
  app.add_option("--tol", cfg.tol, "Residual tolerance (verify, linearize) or parameter tolerance (canonicalize, compare)")
      ->check(CLI::PositiveNumber);
  app.add_option("--rank-threshold", cfg.rank_threshold, "Relative rank threshold")->check(CLI::PositiveNumber);
  app.add_option("--seed", cfg.seed, "Random seed");
  app.add_option("--out", cfg.out, "Write the JSON result to this file (a directory for witness bundles)");
  app.add_flag("--quiet", cfg.quiet, "Suppress diagnostics on stderr");

  std::string file_a, file_b, file_c;
  std::string kind_flag;

  auto* verify = app.add_subcommand("verify", "Check that a family carries repB to repA");
  verify->add_option("repA", file_a)->required();
  verify->add_option("repB", file_b)->required();
  verify->add_option("family", file_c)->required();

  auto* apply = app.add_subcommand("apply", "Compute repA from repB and a family");
  apply->add_option("repB", file_b)->required();
  apply->add_option("family", file_c)->required();

  auto* linearize = app.add_subcommand("linearize", "Turn per-vertex homeomorphism oracles from A to B into a linear isomorphism");
  linearize->add_option("repA", file_a)->required();
  linearize->add_option("repB", file_b)->required();
  linearize->add_option("oracles", file_c)->required();

  auto* canonicalize = app.add_subcommand("canonicalize", "Canonical block multiset of a single form");
  canonicalize->add_option("matrix", file_a)->required();
  canonicalize->add_option("--kind", kind_flag)->check(CLI::IsMember({"bilinear", "sesquilinear"}));

  bool no_certificate = false;
  auto* compare = app.add_subcommand("compare", "Decide congruence (*congruence) of two forms");
  compare->add_option("m1", file_a)->required();
  compare->add_option("m2", file_b)->required();
  compare->add_option("--kind", kind_flag)->check(CLI::IsMember({"bilinear", "sesquilinear"}));
  compare->add_flag("--no-certificate", no_certificate, "Skip the search for a witnessing matrix");

  auto* generate = app.add_subcommand("generate", "Seeded inputs");
  generate->require_subcommand(1);
  std::string graph_name = "example";
  std::vector<int> dims, kernel;
  double cond = 10.0;
  int size = 4;
  std::string g_name = "sin";
  auto* gen_rep = generate->add_subcommand("representation", "Random representation");
  auto* gen_family = generate->add_subcommand("family", "Random invertible family");
  auto* gen_witness = generate->add_subcommand("witness", "Witness bundle: repA, repB and oracle files");
  auto* gen_multiset = generate->add_subcommand("multiset", "Random canonical block multiset and its matrix");
  auto* gen_congruent = generate->add_subcommand("congruent", "Random congruence of an assembled canonical matrix");
  for (auto* sub : {gen_rep, gen_witness}) {
    sub->add_option("--graph", graph_name, "example | loop-bilinear | loop-sesquilinear | triangle");
    sub->add_option("--kernel", kernel, "Joint kernel size per vertex")->delimiter(',');
  }
  for (auto* sub : {gen_rep, gen_family, gen_witness}) sub->add_option("--dims", dims, "Dimension vector")->delimiter(',')->required();
  for (auto* sub : {gen_family, gen_witness, gen_congruent}) sub->add_option("--cond", cond, "Condition number bound")->check(CLI::Range(1.0, 1e12));
  gen_witness->add_option("--g", g_name, "Shear function: sin | osc | dip");
  for (auto* sub : {gen_multiset, gen_congruent}) {
    sub->add_option("--size", size, "Total size")->check(CLI::NonNegativeNumber);
    sub->add_option("--kind", kind_flag)->check(CLI::IsMember({"bilinear", "sesquilinear"}));
  }

  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_ok : exit_usage;
  }

  auto emit = [&](const io::Json& j) {
    if (cfg.out.empty())
      out << io::dump(j);
    else
      io::write_text_file(cfg.out, io::dump(j));
  };
  auto note = [&](const std::string& msg) {
    if (!cfg.quiet) err << msg << "\n";
  };

  try {
    if (*verify) {
      const auto rep_a = io::representation_from_json(io::read_json_file(file_a));
      const auto rep_b = io::representation_from_json(io::read_json_file(file_b));
      const auto family = io::family_from_json(io::read_json_file(file_c));
      const auto report = verify_linear_isomorphism(rep_a, rep_b, family, cfg.tol.value_or(1e-8));
      io::Json j = io::report_to_json(report);
      j["schema"] = io::schema_tag;
      emit(j);
      if (!report.ok) note("verify: family does not carry repB to repA (max residual " + std::to_string(report.max_residual) + ")");
      return report.ok ? exit_ok : exit_negative;
    }
    if (*apply) {
      const auto rep_b = io::representation_from_json(io::read_json_file(file_b));
      const auto family = io::family_from_json(io::read_json_file(file_c));
      emit(io::representation_to_json(apply_transform(rep_b, family)));
      return exit_ok;
    }
    if (*linearize) {
      const auto rep_a = io::representation_from_json(io::read_json_file(file_a));
      const auto rep_b = io::representation_from_json(io::read_json_file(file_b));
      const auto specs = io::read_oracle_file(file_c);
      if (specs.size() != rep_a.dims().size())
        throw Error(ErrorCode::dimension_mismatch, "oracle file needs one oracle per vertex");
      TopologicalIsomorphismWitness witness;
      for (std::size_t i = 0; i < specs.size(); ++i) witness.oracles.push_back(make_oracle(specs[i], rep_a.dims()[i]));
      LinearizeConfig lc;
      if (cfg.tol) lc.residual_tol = *cfg.tol;
      if (cfg.rank_threshold) lc.basis_rank_threshold = *cfg.rank_threshold;
      const auto result = linearize_topological_isomorphism(rep_a, rep_b, witness, lc, cfg.seed);
      io::Json j = io::family_to_json(result.family);
      j["report"] = io::report_to_json(result.report);
      io::Json traces = io::Json::array();
      for (const auto& b : result.bases) traces.push_back(io::trace_to_json(b.trace));
      j["traces"] = traces;
      emit(j);
      if (!result.report.ok) note("linearize: extracted family does not verify (max residual " + std::to_string(result.report.max_residual) + ")");
      return result.report.ok ? exit_ok : exit_negative;
    }
    if (*canonicalize) {
      std::optional<FormKind> file_kind;
      const Matrix m = detail::read_matrix_file(file_a, &file_kind);
      const auto kind = detail::resolve_kind(kind_flag, file_kind);
      emit(io::blocks_to_json(canonical_blocks(m, kind, detail::canonical_config(cfg))));
      return exit_ok;
    }
    if (*compare) {
      std::optional<FormKind> kind_1, kind_2;
      const Matrix m1 = detail::read_matrix_file(file_a, &kind_1);
      const Matrix m2 = detail::read_matrix_file(file_b, &kind_2);
      const auto kind = detail::resolve_kind(kind_flag, kind_1 ? kind_1 : kind_2);
      const auto ccfg = detail::canonical_config(cfg);
      const auto decision = congruent_decision(m1, m2, kind, ccfg, !no_certificate, cfg.seed);
      io::Json j = {{"schema", io::schema_tag}, {"kind", std::string(to_string(kind))}, {"equivalent", decision.equivalent}};
      if (decision.certificate) j["certificate"] = io::matrix_to_json(decision.certificate->matrices.front());
      emit(j);
      return decision.equivalent ? exit_ok : exit_negative;
    }
    if (*gen_rep) {
      const auto graph = detail::graph_by_name(graph_name);
      const auto rep = kernel.empty() ? random_representation(graph, dims, cfg.seed)
                                      : degenerate_representation(graph, dims, kernel, cfg.seed);
      emit(io::representation_to_json(rep));
      return exit_ok;
    }
    if (*gen_family) {
      emit(io::family_to_json(random_family(dims, cond, cfg.seed)));
      return exit_ok;
    }
    if (*gen_witness) {
      if (cfg.out.empty()) throw Error(ErrorCode::invalid_parameters, "generate witness needs --out <directory>");
      const auto graph = detail::graph_by_name(graph_name);
      const auto rep = kernel.empty() ? random_representation(graph, dims, cfg.seed)
                                      : degenerate_representation(graph, dims, kernel, cfg.seed);
      WitnessOptions opt;
      opt.cond_max = cond;
      opt.g = g_name;
      const auto bundle = form_preserving_witness(rep, cfg.seed, opt);
      const auto files = io::write_witness_bundle(bundle, cfg.out);
      out << io::dump({{"schema", io::schema_tag}, {"linear_only", bundle.linear_only}, {"files", files}});
      return exit_ok;
    }
    if (*gen_multiset || *gen_congruent) {
      const auto kind = detail::resolve_kind(kind_flag, FormKind::bilinear);
      const auto set = sample_canonical_multiset(size, kind, cfg.seed);
      Matrix m = assemble_canonical_matrix(set);
      if (*gen_congruent) {
        const Matrix s = random_invertible(size, cond, ::formrep::detail::mix_seed(cfg.seed, 1));
        m = ::formrep::detail::transform_edge(m, s, s, kind);
      }
      io::Json j = io::blocks_to_json(set);
      j["matrix"] = io::matrix_to_json(m);
      emit(j);
      return exit_ok;
    }
  } catch (const Error& e) {
    note(e.what());
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    note(std::string("error: ") + e.what());
    return exit_invalid;
  }
  return exit_usage;
}

}  // namespace formrep::cli
