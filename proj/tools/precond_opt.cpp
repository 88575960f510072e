// precond-opt: compute, improve and evaluate diagonal preconditioners for
// SPD matrices that are only reachable through matrix-vector products.
//
// Subcommands: gen | precondition | iterate | estimate | bench-pcg | score.
// Every command writes a self-contained report.json (plus command-specific
// CSV/matrix/diagonal files) into the --out directory.
//
// Exit codes: 0 success, 2 input error, 3 solver non-convergence,
// 4 internal failure.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "precondopt/colgen.hpp"
#include "precondopt/matrix_market.hpp"
#include "precondopt/pcg.hpp"
#include "precondopt/precond.hpp"
#include "precondopt/run_config.hpp"
#include "precondopt/synthetic.hpp"

namespace {

using nlohmann::json;
using namespace precondopt;

constexpr const char* kVersion = "0.1.0";

// thrown for problems the caller can fix (bad paths, malformed files, bad
// flag values); maps to exit code 2
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// thrown when the solver stack gives up; maps to exit code 3
struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

const char* sip_status_name(SipStatus s) {
  switch (s) {
    case SipStatus::Converged: return "converged";
    case SipStatus::IterLimit: return "iteration_limit";
    case SipStatus::OracleInconclusive: return "oracle_inconclusive";
    default: return "lp_failure";
  }
}

json config_json(const RunConfig& c) {
  return json{{"eps", c.eps},
              {"max_rounds", c.max_rounds},
              {"n_init_cuts", c.n_init_cuts},
              {"lanczos_rel_tol", c.lanczos_rel_tol},
              {"lanczos_max_iter", c.lanczos_max_iter},
              {"pricing_norm", pricing_norm_name(c.pricing_norm)},
              {"iterations", c.iterations},
              {"seed", c.seed},
              {"out", c.out}};
}

json matrix_json(const SparseSymMatrix& m, const std::string& source) {
  return json{{"n", m.dim()}, {"nnz", m.nnz()}, {"source", source}};
}

json base_report(const char* command, const RunConfig& cfg) {
  return json{{"library_version", kVersion},
              {"command", command},
              {"seed", cfg.seed},
              {"config", config_json(cfg)}};
}

SparseSymMatrix load_matrix(const std::string& path) {
  try {
    return read_matrix_market(path);
  } catch (const std::exception& e) {
    throw InputError(e.what());
  }
}

std::filesystem::path ensure_out_dir(const RunConfig& cfg) {
  std::filesystem::path p(cfg.out);
  std::error_code ec;
  std::filesystem::create_directories(p, ec);
  if (ec) throw InputError("cannot create output directory " + cfg.out + ": " + ec.message());
  return p;
}

void write_json_file(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw InputError("write failed: " + path.string());
}

void write_diagonal(const std::filesystem::path& path, const DiagonalVec& d) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw InputError("cannot open " + path.string());
  for (double v : d) std::fprintf(f, "%.17g\n", v);
  std::fclose(f);
}

DiagonalVec read_diagonal(const std::string& path, std::size_t expected_n) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open diagonal file " + path);
  DiagonalVec d;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = precondopt::detail::trim(line);
    if (t.empty()) continue;
    try {
      std::size_t pos = 0;
      const double v = std::stod(t, &pos);
      if (pos != t.size()) throw std::invalid_argument(t);
      d.push_back(v);
    } catch (const std::exception&) {
      throw InputError(path + " line " + std::to_string(lineno) + ": not a number: \"" + t +
                       "\"");
    }
  }
  if (d.size() != expected_n)
    throw InputError(path + ": " + std::to_string(d.size()) + " entries, expected " +
                     std::to_string(expected_n));
  return d;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const std::size_t comma = s.find(',', start);
    const std::size_t end = (comma == std::string::npos) ? s.size() : comma;
    const std::string tok = precondopt::detail::trim(s.substr(start, end - start));
    if (!tok.empty()) out.push_back(tok);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

/// Basis from a comma-separated member list. The all-ones direction is always
/// present (feasibility extraction shifts along it); "identity" names it
/// explicitly, other members stack on top. Near-parallel members collapse.
Basis build_basis(const SparseSymMatrix& m, const std::string& spec, std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(m.dim());
  std::vector<DiagonalVec> vecs;
  vecs.emplace_back(n, 1.0);
  auto push_unique = [&vecs](DiagonalVec v) {
    for (const auto& w : vecs)
      if (precondopt::detail::near_parallel(v, w)) return;
    vecs.push_back(std::move(v));
  };
  for (const std::string& tok : split_list(spec)) {
    if (tok == "identity") {
      continue;  // already seeded
    } else if (tok == "jacobi") {
      push_unique(jacobi(m));
    } else if (tok == "ruiz") {
      push_unique(ruiz(m));
    } else if (tok.rfind("random:", 0) == 0) {
      std::size_t k = 0;
      try {
        k = precondopt::detail::parse_number<std::size_t>("random", tok.substr(7));
      } catch (const std::exception&) {
        throw InputError("bad basis member \"" + tok + "\": expected random:<count>");
      }
      if (k == 0) throw InputError("random:<count> needs count >= 1");
      Basis r = random_subspace(n, k, seed);
      for (std::size_t i = 1; i < r.vectors.size(); ++i) push_unique(std::move(r.vectors[i]));
    } else {
      throw InputError("unknown basis member \"" + tok +
                       "\" (expected identity, jacobi, ruiz or random:<k>)");
    }
  }
  return Basis::from_vectors(std::move(vecs));
}

DiagonalVec initial_diagonal(const SparseSymMatrix& m, const std::string& spec) {
  const auto n = static_cast<std::size_t>(m.dim());
  if (spec == "jacobi") return jacobi(m);
  if (spec == "ruiz") return ruiz(m);
  if (spec == "identity" || spec == "ones") return DiagonalVec(n, 1.0);
  if (spec.rfind("file:", 0) == 0) {
    DiagonalVec d = read_diagonal(spec.substr(5), n);
    if (!all_positive(d)) throw InputError(spec.substr(5) + ": diagonal must be > 0 entrywise");
    return d;
  }
  throw InputError("unknown initial diagonal \"" + spec +
                   "\" (expected identity, jacobi, ruiz or file:<path>)");
}

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

// ---------------------------------------------------------------- commands

int cmd_gen(const RunConfig& cfg, std::int64_t n, double sigma, double alpha,
            const std::string& dist) {
  EntryDist ed;
  if (dist == "uniform")
    ed = EntryDist::Uniform01;
  else if (dist == "normal")
    ed = EntryDist::Normal;
  else
    throw InputError("--dist must be uniform or normal");
  const auto out = ensure_out_dir(cfg);

  Timer timer;
  const SparseSymMatrix m = generate_synthetic(n, sigma, alpha, ed, cfg.seed);
  const auto matrix_path = out / "matrix.mtx";
  write_matrix_market(m, matrix_path.string());

  char desc[160];
  std::snprintf(desc, sizeof desc, "synthetic(n=%lld,sigma=%.17g,alpha=%.17g,dist=%s,seed=%llu)",
                static_cast<long long>(n), sigma, alpha, dist.c_str(),
                static_cast<unsigned long long>(cfg.seed));

  json rep = base_report("gen", cfg);
  rep["method"] = "synthetic";
  rep["matrix"] = matrix_json(m, desc);
  rep["params"] = {{"n", n}, {"sigma", sigma}, {"alpha", alpha}, {"dist", dist}};
  rep["files"] = {{"matrix", "matrix.mtx"}};
  rep["wall_time_seconds"] = timer.seconds();
  write_json_file(out / "report.json", rep);
  return 0;
}

int cmd_precondition(const RunConfig& cfg, const std::string& matrix_path,
                     const std::string& basis_spec) {
  const SparseSymMatrix m = load_matrix(matrix_path);
  const Basis basis = build_basis(m, basis_spec, cfg.seed);
  const auto out = ensure_out_dir(cfg);

  Timer timer;
  PrecondResult res;
  try {
    res = optimize_in_subspace(m, basis, make_sip_config(cfg));
  } catch (const PrecondError& e) {
    throw SolverError(e.what());
  }
  const double wall = timer.seconds();

  write_diagonal(out / "diagonal.txt", res.d);
  json rep = base_report("precondition", cfg);
  rep["method"] = "subspace";
  rep["matrix"] = matrix_json(m, matrix_path);
  rep["basis"] = {{"spec", basis_spec}, {"size", basis.size()}};
  rep["kappa_bound"] = res.kappa_bound;
  rep["tau"] = res.tau;
  rep["certified"] = res.certified;
  rep["wall_time_seconds"] = wall;
  rep["files"] = {{"diagonal", "diagonal.txt"}};
  SipStatus status = SipStatus::Converged;
  if (res.diagnostics) {
    status = res.diagnostics->status;
    rep["status"] = sip_status_name(status);
    rep["rounds"] = res.diagnostics->rounds;
    rep["matvecs"] = res.diagnostics->matvecs;
    rep["cuts"] = res.diagnostics->cuts1.size() + res.diagnostics->cuts2.size();
    write_sip_trace_csv((out / "sip_trace.csv").string(), res.diagnostics->trace);
    rep["files"]["sip_trace"] = "sip_trace.csv";
  }
  write_json_file(out / "report.json", rep);
  if (status != SipStatus::Converged) {
    std::fprintf(stderr, "solver did not converge: %s (report written)\n",
                 sip_status_name(status));
    return 3;
  }
  std::printf("kappa_bound %.17g%s\n", res.kappa_bound, res.certified ? "" : " (uncertified)");
  return 0;
}

int cmd_iterate(const RunConfig& cfg, const std::string& matrix_path, const std::string& d0_spec) {
  const SparseSymMatrix m = load_matrix(matrix_path);
  const DiagonalVec d0 = initial_diagonal(m, d0_spec);
  const auto out = ensure_out_dir(cfg);

  Timer timer;
  PrecondResult res;
  IterateTrace trace;
  try {
    std::tie(res, trace) = iterate_preconditioner(m, d0, cfg.iterations, make_iterate_config(cfg));
  } catch (const PrecondError& e) {
    throw SolverError(e.what());
  }
  const double wall = timer.seconds();

  write_diagonal(out / "diagonal.txt", res.d);
  write_iterate_trace_csv((out / "iterate_trace.csv").string(), trace);

  json rounds = json::array();
  for (const auto& r : trace.rows)
    rounds.push_back({{"t", r.t},
                      {"kappa_bound", r.kappa_bound},
                      {"tau", r.tau},
                      {"sip_rounds", r.sip_rounds},
                      {"cuts", r.cuts},
                      {"matvecs_cumulative", r.matvecs_cumulative}});

  json rep = base_report("iterate", cfg);
  rep["method"] = "iterative";
  rep["matrix"] = matrix_json(m, matrix_path);
  rep["initial_diagonal"] = d0_spec;
  rep["pricing_norm"] = pricing_norm_name(trace.norm);
  rep["kappa_bound"] = res.kappa_bound;
  rep["tau"] = res.tau;
  rep["certified"] = res.certified;
  rep["stalled"] = trace.stalled;
  rep["matvecs"] = trace.rows.empty() ? 0 : trace.rows.back().matvecs_cumulative;
  rep["rounds"] = rounds;
  rep["wall_time_seconds"] = wall;
  rep["files"] = {{"diagonal", "diagonal.txt"}, {"iterate_trace", "iterate_trace.csv"}};
  write_json_file(out / "report.json", rep);
  std::printf("kappa_bound %.17g after %zu rounds%s\n", res.kappa_bound, trace.rows.size(),
              trace.stalled ? " (stalled: optimal over all diagonals)" : "");
  return 0;
}

int cmd_estimate(const RunConfig& cfg, const std::string& matrix_path) {
  const SparseSymMatrix m = load_matrix(matrix_path);
  const auto out = ensure_out_dir(cfg);
  const Basis ones = Basis::from_vectors({DiagonalVec(static_cast<std::size_t>(m.dim()), 1.0)});

  Timer timer;
  const LinearOperator op = operator_from_matrix(m);
  const SipSolution sol = solve_subspace_sdp(op, ones, make_sip_config(cfg));
  const double wall = timer.seconds();
  if (sol.status == SipStatus::LpFailure || !std::isfinite(sol.tau) || !(sol.tau > 0.0))
    throw SolverError("condition number estimation failed: restriction LP unsolvable");

  json rep = base_report("estimate", cfg);
  rep["method"] = "spectral_bounds";
  rep["matrix"] = matrix_json(m, matrix_path);
  rep["kappa_estimate"] = 1.0 / sol.tau;
  rep["tau"] = sol.tau;
  rep["status"] = sip_status_name(sol.status);
  rep["rounds"] = sol.rounds;
  rep["matvecs"] = sol.matvecs;
  rep["wall_time_seconds"] = wall;
  write_sip_trace_csv((out / "sip_trace.csv").string(), sol.trace);
  rep["files"] = {{"sip_trace", "sip_trace.csv"}};
  write_json_file(out / "report.json", rep);
  if (sol.status != SipStatus::Converged) {
    std::fprintf(stderr, "solver did not converge: %s (report written)\n",
                 sip_status_name(sol.status));
    return 3;
  }
  std::printf("kappa_estimate %.17g\n", 1.0 / sol.tau);
  return 0;
}

int cmd_bench_pcg(const RunConfig& cfg, const std::string& matrix_path,
                  const std::string& precond_list, double tol, std::size_t max_iter,
                  bool count_setup) {
  if (!(tol > 0.0)) throw InputError("--tol must be > 0");
  const SparseSymMatrix m = load_matrix(matrix_path);
  const auto n = static_cast<std::size_t>(m.dim());
  const auto out = ensure_out_dir(cfg);

  // right-hand side b = M x*, x* standard normal with a seed of its own so
  // the solve target does not move when solver options change
  Rng rng(derive_seed(cfg.seed, 0xB511CE));
  const std::vector<double> xstar = rng.gaussian_vec(n);
  std::vector<double> b(n);
  m.matvec(xstar, b);

  const std::vector<std::string> sources = split_list(precond_list);
  if (sources.empty()) throw InputError("--precond list is empty");

  json runs = json::array();
  std::set<std::string> used_names;
  Timer timer;
  for (const std::string& src : sources) {
    DiagonalVec d;
    std::size_t setup_matvecs = 0;
    json extra;
    if (src == "identity" || src == "none") {
      d.assign(n, 1.0);
    } else if (src == "jacobi") {
      d = jacobi(m);
    } else if (src == "ruiz") {
      d = ruiz(m);
    } else if (src == "iterative") {
      try {
        auto [res, trace] =
            iterate_preconditioner(m, jacobi(m), cfg.iterations, make_iterate_config(cfg));
        d = std::move(res.d);
        setup_matvecs = trace.rows.empty() ? 0 : trace.rows.back().matvecs_cumulative;
        extra["kappa_bound"] = res.kappa_bound;
        extra["certified"] = res.certified;
      } catch (const PrecondError& e) {
        throw SolverError(e.what());
      }
    } else if (src.rfind("file:", 0) == 0) {
      d = read_diagonal(src.substr(5), n);
      if (!all_positive(d)) throw InputError(src.substr(5) + ": diagonal must be > 0 entrywise");
    } else {
      throw InputError("unknown preconditioner source \"" + src +
                       "\" (expected identity, jacobi, ruiz, iterative or file:<path>)");
    }

    PcgReport rep;
    try {
      rep = pcg_solve(m, b, d, tol, max_iter, count_setup ? setup_matvecs : 0);
    } catch (const std::runtime_error& e) {
      throw SolverError(std::string("pcg on source \"") + src + "\": " + e.what());
    }

    std::string name;
    for (char c : src) name += (std::isalnum(static_cast<unsigned char>(c)) ? c : '_');
    while (!used_names.insert(name).second) name += "_2";
    const std::string csv = "pcg_" + name + ".csv";
    write_pcg_history_csv((out / csv).string(), rep);

    json row{{"source", src},
             {"iterations", rep.iterations},
             {"matvecs", rep.matvecs},
             {"setup_matvecs", setup_matvecs},
             {"converged", rep.converged},
             {"final_rel_residual", rep.residual_history.back()},
             {"history_csv", csv}};
    for (auto& [k, v] : extra.items()) row[k] = v;
    runs.push_back(std::move(row));
  }

  json rep = base_report("bench-pcg", cfg);
  rep["method"] = "pcg_benchmark";
  rep["matrix"] = matrix_json(m, matrix_path);
  rep["rhs"] = {{"generator", "b = M*x_star, x_star standard normal"},
                {"seed", derive_seed(cfg.seed, 0xB511CE)}};
  rep["tol"] = tol;
  rep["max_iter"] = max_iter == 0 ? 10 * n : max_iter;
  rep["count_setup_matvecs"] = count_setup;
  rep["runs"] = runs;
  rep["wall_time_seconds"] = timer.seconds();
  write_json_file(out / "report.json", rep);
  for (const auto& r : runs)
    std::printf("%-24s %6zu matvecs  %s\n", r["source"].get<std::string>().c_str(),
                r["matvecs"].get<std::size_t>(),
                r["converged"].get<bool>() ? "converged" : "NOT converged");
  return 0;
}

int cmd_score(const RunConfig& cfg, const std::string& matrix_path, std::size_t top_q,
              std::size_t dense_cap) {
  if (top_q == 0) throw InputError("--top-q must be >= 1");
  const SparseSymMatrix m = load_matrix(matrix_path);
  const auto out = ensure_out_dir(cfg);

  ScoreConfig sc;
  sc.lanczos.rel_tol = cfg.lanczos_rel_tol;
  sc.lanczos.max_iter = cfg.lanczos_max_iter;
  sc.top_q = top_q;
  sc.dense_cap = dense_cap;
  sc.seed = cfg.seed;

  Timer timer;
  PatternScore ps;
  try {
    ps = sparsity_score(m, sc);
  } catch (const std::runtime_error& e) {
    throw SolverError(e.what());
  }
  const double wall = timer.seconds();

  // 1-indexed CSV; both (i,j) and (j,i) are emitted so the symmetry of the
  // score is visible in the file itself
  const auto csv_path = out / "score.csv";
  std::FILE* f = std::fopen(csv_path.c_str(), "w");
  if (!f) throw InputError("cannot open " + csv_path.string());
  std::fprintf(f, "i,j,score\n");
  const bool dense = ps.entries.rows == ps.n && ps.n > 0;
  if (dense) {
    for (std::size_t i = 0; i < ps.n; ++i)
      for (std::size_t j = 0; j < ps.n; ++j)
        std::fprintf(f, "%zu,%zu,%.17g\n", i + 1, j + 1, ps.entries.at(i, j));
  } else {
    for (const auto& [i, j, s] : ps.top) {
      std::fprintf(f, "%zu,%zu,%.17g\n", i + 1, j + 1, s);
      if (i != j) std::fprintf(f, "%zu,%zu,%.17g\n", j + 1, i + 1, s);
    }
  }
  std::fclose(f);

  json top = json::array();
  for (const auto& [i, j, s] : ps.top) top.push_back({{"i", i + 1}, {"j", j + 1}, {"score", s}});

  json rep = base_report("score", cfg);
  rep["method"] = "sparsity_pattern_score";
  rep["matrix"] = matrix_json(m, matrix_path);
  rep["mode"] = dense ? "dense" : "top_candidates";
  rep["gap_warning"] = ps.gap_warning;
  rep["top"] = top;
  rep["wall_time_seconds"] = wall;
  rep["files"] = {{"score_csv", "score.csv"}};
  write_json_file(out / "report.json", rep);
  if (ps.gap_warning)
    std::fprintf(stderr, "warning: extremal eigenvalue nearly multiple; scores unstable\n");
  std::printf("wrote %s\n", csv_path.string().c_str());
  return 0;
}

// ------------------------------------------------------------------ driver

struct CommonFlags {
  std::string config_path, out;
  std::uint64_t seed = 0;
  CLI::Option *out_opt = nullptr, *seed_opt = nullptr;
};

CommonFlags add_common(CLI::App* sub) {
  CommonFlags f;
  sub->add_option("--config", f.config_path, "key=value config file")
      ->check(CLI::ExistingFile);
  f.seed_opt = sub->add_option("--seed", f.seed, "RNG seed (overrides config)");
  f.out_opt = sub->add_option("--out", f.out, "output directory (default .)");
  return f;
}

RunConfig resolve_config(const CommonFlags& f) {
  RunConfig cfg;
  if (!f.config_path.empty()) {
    std::ifstream in(f.config_path);
    if (!in) throw InputError("cannot open config file " + f.config_path);
    try {
      cfg = parse_run_config(in);
    } catch (const std::invalid_argument& e) {
      throw InputError(f.config_path + ": " + e.what());
    }
  }
  if (f.seed_opt->count() > 0) cfg.seed = f.seed;
  if (f.out_opt->count() > 0) cfg.out = f.out;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"approximately optimal diagonal preconditioning for SPD operators"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "write a synthetic sparse SPD test matrix");
  std::int64_t gen_n = 100;
  double gen_sigma = 0.1, gen_alpha = 1e-3;
  std::string gen_dist = "uniform";
  gen->add_option("--n", gen_n, "dimension")->required();
  gen->add_option("--sigma", gen_sigma, "off-diagonal density in (0,1]");
  gen->add_option("--alpha", gen_alpha, "diagonal shift (lower bound on lambda_min)");
  gen->add_option("--dist", gen_dist, "entry distribution: uniform | normal");
  const CommonFlags gen_f = add_common(gen);

  // precondition
  auto* pre = app.add_subcommand("precondition",
                                 "optimal diagonal preconditioner over a diagonal subspace");
  std::string pre_matrix, pre_basis = "identity";
  pre->add_option("--matrix", pre_matrix, "MatrixMarket file")->required();
  pre->add_option("--basis", pre_basis,
                  "comma list of identity | jacobi | ruiz | random:<k>");
  const CommonFlags pre_f = add_common(pre);

  // iterate
  auto* it = app.add_subcommand("iterate", "improve a preconditioner by repeated re-optimization");
  std::string it_matrix, it_d0 = "jacobi";
  std::size_t it_T = 0;
  it->add_option("--matrix", it_matrix, "MatrixMarket file")->required();
  it->add_option("--T", it_T, "improvement rounds (overrides config iterations)");
  it->add_option("--d0", it_d0, "initial diagonal: identity | jacobi | ruiz | file:<path>");
  std::string it_norm;
  it->add_option("--norm", it_norm, "pricing norm: l1 | l2 | linf (overrides config)");
  const CommonFlags it_f = add_common(it);

  // estimate
  auto* est = app.add_subcommand("estimate", "condition number through matvecs only");
  std::string est_matrix;
  est->add_option("--matrix", est_matrix, "MatrixMarket file")->required();
  const CommonFlags est_f = add_common(est);

  // bench-pcg
  auto* bench = app.add_subcommand("bench-pcg", "compare PCG under different diagonals");
  std::string bench_matrix, bench_precond = "identity,jacobi,iterative";
  double bench_tol = 1e-10;
  std::size_t bench_max_iter = 0;
  bool bench_count_setup = false;
  bench->add_option("--matrix", bench_matrix, "MatrixMarket file")->required();
  bench->add_option("--precond", bench_precond,
                    "comma list of identity | jacobi | ruiz | iterative | file:<path>");
  bench->add_option("--tol", bench_tol, "relative residual target");
  bench->add_option("--max-iter", bench_max_iter, "iteration cap (0 = 10n)");
  bench->add_flag("--count-setup", bench_count_setup,
                  "charge preconditioner-construction matvecs to the run");
  const CommonFlags bench_f = add_common(bench);

  // score
  auto* score = app.add_subcommand("score", "rank off-diagonal positions by preconditioning value");
  std::string score_matrix;
  std::size_t score_top_q = 50, score_dense_cap = 100;
  score->add_option("--matrix", score_matrix, "MatrixMarket file")->required();
  score->add_option("--top-q", score_top_q, "entries to keep in the ranked list");
  score->add_option("--dense-cap", score_dense_cap, "emit the full score matrix up to this n");
  const CommonFlags score_f = add_common(score);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;  // bad flags are input errors
  }

  try {
    if (gen->parsed()) return cmd_gen(resolve_config(gen_f), gen_n, gen_sigma, gen_alpha, gen_dist);
    if (pre->parsed()) return cmd_precondition(resolve_config(pre_f), pre_matrix, pre_basis);
    if (it->parsed()) {
      RunConfig cfg = resolve_config(it_f);
      if (it->count("--T") > 0) {
        if (it_T == 0) throw InputError("--T must be >= 1");
        cfg.iterations = it_T;
      }
      if (!it_norm.empty()) cfg.pricing_norm = parse_pricing_norm(it_norm);
      return cmd_iterate(cfg, it_matrix, it_d0);
    }
    if (est->parsed()) return cmd_estimate(resolve_config(est_f), est_matrix);
    if (bench->parsed())
      return cmd_bench_pcg(resolve_config(bench_f), bench_matrix, bench_precond, bench_tol,
                           bench_max_iter, bench_count_setup);
    if (score->parsed())
      return cmd_score(resolve_config(score_f), score_matrix, score_top_q, score_dense_cap);
    return 2;  // unreachable: require_subcommand
  } catch (const InputError& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return 2;
  } catch (const SolverError& e) {
    std::fprintf(stderr, "solver failure: %s\n", e.what());
    return 3;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return 2;
  } catch (const std::domain_error& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 4;
  }
}
