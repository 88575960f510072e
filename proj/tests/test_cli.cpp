// End-to-end tests of the precond-opt binary: every subcommand is spawned as
// a real process against files in a fresh temp directory, and reports are
// parsed back. PRECOND_OPT_BIN is injected by the build.

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "catch2/catch_amalgamated.hpp"
#include "precondopt/matrix_market.hpp"
#include "precondopt/run_config.hpp"
#include "precondopt/sparse.hpp"

namespace {

using nlohmann::json;
using namespace precondopt;

std::string make_temp_dir() {
  char tmpl[] = "/tmp/precondopt-cli-XXXXXX";
  char* p = mkdtemp(tmpl);
  REQUIRE(p != nullptr);
  return std::string(p);
}

// returns the exit code; stdout/stderr land in <dir>/cmd.log
int run_cli(const std::string& dir, const std::string& args) {
  const std::string cmd =
      std::string(PRECOND_OPT_BIN) + " " + args + " >" + dir + "/cmd.log 2>&1";
  const int st = std::system(cmd.c_str());
  REQUIRE(st != -1);
  REQUIRE(WIFEXITED(st));
  return WEXITSTATUS(st);
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  return json::parse(in);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

SparseSymMatrix diag_matrix(const std::vector<double>& d) {
  std::vector<Triplet> t;
  for (std::size_t i = 0; i < d.size(); ++i)
    t.push_back({static_cast<std::int64_t>(i), static_cast<std::int64_t>(i), d[i]});
  return SparseSymMatrix::from_triplets_sym(static_cast<std::int64_t>(d.size()), t);
}

std::vector<double> read_diag_file(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::vector<double> d;
  double v;
  while (in >> v) d.push_back(v);
  return d;
}

Eigen::MatrixXd to_dense(const SparseSymMatrix& m) {
  const auto n = static_cast<Eigen::Index>(m.dim());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  const auto& rp = m.row_ptr();
  const auto& ci = m.col_idx();
  const auto& va = m.values();
  for (std::int64_t i = 0; i < m.dim(); ++i)
    for (std::int64_t k = rp[static_cast<std::size_t>(i)]; k < rp[static_cast<std::size_t>(i) + 1];
         ++k)
      a(i, ci[static_cast<std::size_t>(k)]) = va[static_cast<std::size_t>(k)];
  return a;
}

}  // namespace

TEST_CASE("run config serializes and parses back", "[cli]") {
  RunConfig c;
  c.eps = 3e-9;
  c.max_rounds = 77;
  c.n_init_cuts = 4;
  c.lanczos_rel_tol = 2.5e-13;
  c.lanczos_max_iter = 400;
  c.pricing_norm = PricingNorm::Linf;
  c.iterations = 9;
  c.seed = 123456789012345ULL;
  c.out = "some/dir";

  const RunConfig r = parse_run_config(serialize_run_config(c));
  CHECK(r.eps == c.eps);
  CHECK(r.max_rounds == c.max_rounds);
  CHECK(r.n_init_cuts == c.n_init_cuts);
  CHECK(r.lanczos_rel_tol == c.lanczos_rel_tol);
  CHECK(r.lanczos_max_iter == c.lanczos_max_iter);
  CHECK(r.pricing_norm == c.pricing_norm);
  CHECK(r.iterations == c.iterations);
  CHECK(r.seed == c.seed);
  CHECK(r.out == c.out);

  SECTION("comments and blank lines are skipped") {
    const RunConfig d = parse_run_config("# header\n\n  eps = 1e-8  # trailing\n");
    CHECK(d.eps == 1e-8);
    CHECK(d.max_rounds == 200);  // untouched default
  }
  SECTION("rejects unknown keys and bad values") {
    CHECK_THROWS_AS(parse_run_config("bogus=1\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_run_config("eps=fast\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_run_config("eps=0\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_run_config("iterations=0\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_run_config("pricing_norm=l3\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_run_config("just a line\n"), std::invalid_argument);
  }
}

TEST_CASE("gen writes a deterministic matrix with the promised spectrum", "[cli]") {
  const std::string dir = make_temp_dir();
  const std::string args = "gen --n 60 --sigma 0.3 --alpha 1e-3 --seed 7";
  REQUIRE(run_cli(dir, args + " --out " + dir + "/a") == 0);
  REQUIRE(run_cli(dir, args + " --out " + dir + "/b") == 0);
  CHECK(read_file(dir + "/a/matrix.mtx") == read_file(dir + "/b/matrix.mtx"));

  const json rep = read_json(dir + "/a/report.json");
  CHECK(rep["library_version"] == "0.1.0");
  CHECK(rep["command"] == "gen");
  CHECK(rep["matrix"]["n"] == 60);
  CHECK(rep["params"]["alpha"] == 1e-3);

  const SparseSymMatrix m = read_matrix_market(dir + "/a/matrix.mtx");
  REQUIRE(m.dim() == 60);
  CHECK(m.nnz() == rep["matrix"]["nnz"].get<std::int64_t>());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(to_dense(m));
  CHECK(es.eigenvalues().minCoeff() >= 1e-3 * (1.0 - 1e-8));
}

TEST_CASE("precondition computes certified bounds and writes artifacts", "[cli]") {
  const std::string dir = make_temp_dir();

  SECTION("constant basis on diagm(1,4) gives the raw condition number") {
    write_matrix_market(diag_matrix({1.0, 4.0}), dir + "/m.mtx");
    REQUIRE(run_cli(dir, "precondition --matrix " + dir + "/m.mtx --basis identity --out " + dir) ==
            0);
    const json rep = read_json(dir + "/report.json");
    CHECK(rep["kappa_bound"].get<double>() == Catch::Approx(4.0).epsilon(1e-6));
    CHECK(rep["certified"] == true);
    CHECK(rep["status"] == "converged");
    CHECK(rep["matrix"]["source"] == dir + "/m.mtx");
    const auto d = read_diag_file(dir + "/diagonal.txt");
    REQUIRE(d.size() == 2);
    for (double v : d) CHECK(v > 0.0);
    const std::string trace = read_file(dir + "/sip_trace.csv");
    CHECK(trace.rfind("round,", 0) == 0);
  }

  SECTION("jacobi member makes a diagonal matrix perfectly conditioned") {
    write_matrix_market(diag_matrix({2.0, 9.0, 0.5, 7.0}), dir + "/m.mtx");
    REQUIRE(run_cli(dir, "precondition --matrix " + dir + "/m.mtx --basis jacobi,identity --out " +
                             dir) == 0);
    const json rep = read_json(dir + "/report.json");
    CHECK(rep["kappa_bound"].get<double>() == Catch::Approx(1.0).epsilon(1e-6));
    CHECK(rep["basis"]["size"] == 2);
  }
}

TEST_CASE("iterate improves and traces monotonically", "[cli]") {
  const std::string dir = make_temp_dir();
  write_matrix_market(diag_matrix({1.0, 10.0, 100.0}), dir + "/m.mtx");

  SECTION("T=0 is an input error") {
    CHECK(run_cli(dir, "iterate --matrix " + dir + "/m.mtx --T 0 --out " + dir) == 2);
  }

  SECTION("diagonal matrix reaches kappa 1") {
    REQUIRE(run_cli(dir, "iterate --matrix " + dir + "/m.mtx --T 2 --seed 5 --out " + dir) == 0);
    const json rep = read_json(dir + "/report.json");
    CHECK(rep["kappa_bound"].get<double>() <= 1.0 + 1e-6);
    CHECK(rep["rounds"].size() >= 1);
    CHECK(rep["rounds"].size() <= 2);

    // kappa column of the trace CSV never increases
    std::ifstream in(dir + "/iterate_trace.csv");
    REQUIRE(in.good());
    std::string line;
    std::getline(in, line);
    CHECK(line == "t,kappa_bound,tau,cuts,matvecs");
    double prev = std::numeric_limits<double>::infinity();
    while (std::getline(in, line)) {
      std::istringstream row(line);
      std::string cell;
      std::getline(row, cell, ',');
      std::getline(row, cell, ',');
      const double kappa = std::stod(cell);
      CHECK(kappa <= prev * (1.0 + 1e-12));
      prev = kappa;
    }
  }
}

TEST_CASE("estimate matches known condition numbers", "[cli]") {
  const std::string dir = make_temp_dir();
  write_matrix_market(diag_matrix({1.0, 1.0, 1.0}), dir + "/eye.mtx");
  write_matrix_market(diag_matrix({1.0, 4.0}), dir + "/d14.mtx");

  REQUIRE(run_cli(dir, "estimate --matrix " + dir + "/eye.mtx --out " + dir + "/a") == 0);
  CHECK(read_json(dir + "/a/report.json")["kappa_estimate"].get<double>() ==
        Catch::Approx(1.0).epsilon(1e-6));

  REQUIRE(run_cli(dir, "estimate --matrix " + dir + "/d14.mtx --out " + dir + "/b") == 0);
  CHECK(read_json(dir + "/b/report.json")["kappa_estimate"].get<double>() ==
        Catch::Approx(4.0).epsilon(1e-6));
}

TEST_CASE("bench-pcg reports one-iteration solves where theory demands them", "[cli]") {
  const std::string dir = make_temp_dir();
  write_matrix_market(diag_matrix({1.0, 1.0, 1.0, 1.0, 1.0}), dir + "/eye.mtx");
  write_matrix_market(diag_matrix({3.0, 0.5, 11.0, 2.0}), dir + "/diag.mtx");

  REQUIRE(run_cli(dir, "bench-pcg --matrix " + dir + "/eye.mtx --precond identity --seed 1 --out " +
                           dir + "/a") == 0);
  json rep = read_json(dir + "/a/report.json");
  REQUIRE(rep["runs"].size() == 1);
  CHECK(rep["runs"][0]["iterations"] == 1);
  CHECK(rep["runs"][0]["converged"] == true);
  CHECK(read_file(dir + "/a/pcg_identity.csv").rfind("iteration,", 0) == 0);

  REQUIRE(run_cli(dir, "bench-pcg --matrix " + dir + "/diag.mtx --precond jacobi,identity --seed 1"
                       " --out " + dir + "/b") == 0);
  rep = read_json(dir + "/b/report.json");
  REQUIRE(rep["runs"].size() == 2);
  CHECK(rep["runs"][0]["source"] == "jacobi");
  CHECK(rep["runs"][0]["iterations"] == 1);
  // rhs is pinned by the seed, so both runs solved the same system
  CHECK(rep["rhs"]["generator"] == "b = M*x_star, x_star standard normal");
}

TEST_CASE("score emits a symmetric 1-indexed CSV", "[cli]") {
  const std::string dir = make_temp_dir();
  write_matrix_market(diag_matrix({1.0, 2.0, 4.0}), dir + "/m.mtx");
  REQUIRE(run_cli(dir, "score --matrix " + dir + "/m.mtx --top-q 9 --seed 2 --out " + dir) == 0);

  std::ifstream in(dir + "/score.csv");
  REQUIRE(in.good());
  std::string line;
  std::getline(in, line);
  REQUIRE(line == "i,j,score");
  std::map<std::pair<int, int>, double> s;
  while (std::getline(in, line)) {
    int i, j;
    double v;
    char c1, c2;
    std::istringstream row(line);
    row >> i >> c1 >> j >> c2 >> v;
    REQUIRE(row);
    s[{i, j}] = v;
  }
  REQUIRE(s.size() == 9);  // full 3x3, 1-indexed
  for (const auto& [ij, v] : s) {
    CHECK(v >= 0.0);
    CHECK(s.at({ij.second, ij.first}) == v);
  }
  // eigenvectors of diagm(1,2,4) are coordinate axes: only (1,1) and (3,3) score
  CHECK(s.at({1, 1}) == Catch::Approx(1.0).margin(1e-9));
  CHECK(s.at({3, 3}) == Catch::Approx(1.0).margin(1e-9));
  CHECK(s.at({1, 3}) == Catch::Approx(0.0).margin(1e-9));
  CHECK(s.at({2, 2}) == Catch::Approx(0.0).margin(1e-9));

  const json rep = read_json(dir + "/report.json");
  CHECK(rep["mode"] == "dense");
  CHECK(rep["gap_warning"] == false);
}

TEST_CASE("config file drives runs and flags override it", "[cli]") {
  const std::string dir = make_temp_dir();
  write_matrix_market(diag_matrix({1.0, 4.0}), dir + "/m.mtx");
  {
    std::ofstream cfg(dir + "/run.cfg");
    cfg << "pricing_norm=linf\niterations=2\nseed=42\nout=" << dir << "/c\n";
  }
  REQUIRE(run_cli(dir, "iterate --matrix " + dir + "/m.mtx --config " + dir + "/run.cfg") == 0);
  json rep = read_json(dir + "/c/report.json");
  CHECK(rep["seed"] == 42);
  CHECK(rep["pricing_norm"] == "linf");
  CHECK(rep["rounds"].size() <= 2);

  REQUIRE(run_cli(dir, "iterate --matrix " + dir + "/m.mtx --config " + dir + "/run.cfg --seed 8" +
                           " --out " + dir + "/d") == 0);
  CHECK(read_json(dir + "/d/report.json")["seed"] == 8);

  {
    std::ofstream cfg(dir + "/bad.cfg");
    cfg << "no_such_key=1\n";
  }
  CHECK(run_cli(dir, "estimate --matrix " + dir + "/m.mtx --config " + dir + "/bad.cfg --out " +
                         dir + "/e") == 2);
}

TEST_CASE("exit codes follow the contract", "[cli]") {
  const std::string dir = make_temp_dir();
  write_matrix_market(diag_matrix({1.0, 2.0}), dir + "/m.mtx");

  CHECK(run_cli(dir, "--version") == 0);
  CHECK(run_cli(dir, "estimate --help") == 0);
  CHECK(run_cli(dir, "") == 2);                                            // missing subcommand
  CHECK(run_cli(dir, "estimate") == 2);                                    // missing --matrix
  CHECK(run_cli(dir, "estimate --matrix " + dir + "/nope.mtx") == 2);      // unreadable input
  CHECK(run_cli(dir, "gen --n 50 --dist sideways --out " + dir) == 2);     // bad enum
  CHECK(run_cli(dir, "precondition --matrix " + dir + "/m.mtx --basis random:0 --out " + dir) ==
        2);
  CHECK(run_cli(dir, "bench-pcg --matrix " + dir + "/m.mtx --precond '' --out " + dir) == 2);
  CHECK(run_cli(dir, "bench-pcg --matrix " + dir + "/m.mtx --tol 0 --out " + dir) == 2);
}
