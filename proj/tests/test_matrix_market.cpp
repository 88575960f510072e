#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "oracles.hpp"
#include "precondopt/matrix_market.hpp"
#include "precondopt/rng.hpp"
#include "precondopt/sparse.hpp"

using namespace precondopt;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const char* name) {
  const auto dir = fs::temp_directory_path() / "precondopt_mm_tests";
  fs::create_directories(dir);
  return dir / name;
}

void write_text(const fs::path& p, const std::string& body) {
  std::ofstream out(p);
  out << body;
}

SparseSymMatrix random_spd_dense10(std::uint64_t seed) {
  Rng rng(seed);
  const std::int64_t n = 10;
  std::vector<Triplet> t;
  for (std::int64_t i = 0; i < n; ++i)
    for (std::int64_t j = i; j < n; ++j)
      t.push_back({i, j, i == j ? 10.0 + rng.uniform01() : rng.gaussian() * 0.5});
  return SparseSymMatrix::from_triplets_sym(n, std::move(t));
}

}  // namespace

TEST_CASE("write-then-read reproduces CSR arrays bitwise", "[mm]") {
  const auto m = random_spd_dense10(123);
  const auto p = temp_file("roundtrip.mtx");
  write_matrix_market(m, p.string());
  const auto back = read_matrix_market(p.string());
  REQUIRE(back.dim() == m.dim());
  REQUIRE(back.row_ptr() == m.row_ptr());
  REQUIRE(back.col_idx() == m.col_idx());
  REQUIRE(back.values() == m.values());
}

TEST_CASE("reader handles symmetric header with one triangle", "[mm]") {
  const auto p = temp_file("tri.mtx");
  write_text(p,
             "%%MatrixMarket matrix coordinate real symmetric\n"
             "% a comment line\n"
             "3 3 4\n"
             "1 1 2.0\n"
             "2 2 3.0\n"
             "3 3 4.0\n"
             "3 1 0.5\n");
  const auto m = read_matrix_market(p.string());
  REQUIRE(m.dim() == 3);
  REQUIRE(*m.find(0, 2) == 0.5);
  REQUIRE(*m.find(2, 0) == 0.5);
  REQUIRE(m.nnz() == 5);
}

TEST_CASE("reader accepts symmetric general files and rejects asymmetric ones", "[mm]") {
  const auto ok = temp_file("gen_ok.mtx");
  write_text(ok,
             "%%MatrixMarket matrix coordinate real general\n"
             "2 2 4\n"
             "1 1 1.0\n"
             "2 2 1.0\n"
             "1 2 0.25\n"
             "2 1 0.25\n");
  const auto m = read_matrix_market(ok.string());
  REQUIRE(*m.find(0, 1) == 0.25);

  const auto bad = temp_file("gen_bad.mtx");
  write_text(bad,
             "%%MatrixMarket matrix coordinate real general\n"
             "2 2 4\n"
             "1 1 1.0\n"
             "2 2 1.0\n"
             "1 2 0.25\n"
             "2 1 0.26\n");
  REQUIRE_THROWS(read_matrix_market(bad.string()));
}

TEST_CASE("reader sums duplicate entries", "[mm]") {
  const auto p = temp_file("dup.mtx");
  write_text(p,
             "%%MatrixMarket matrix coordinate real symmetric\n"
             "2 2 3\n"
             "1 1 1.0\n"
             "2 1 0.5\n"
             "2 1 0.25\n");
  const auto m = read_matrix_market(p.string());
  REQUIRE(*m.find(1, 0) == 0.75);
}

TEST_CASE("reader error cases", "[mm]") {
  REQUIRE_THROWS(read_matrix_market("/nonexistent/file.mtx"));

  const auto p1 = temp_file("notsquare.mtx");
  write_text(p1, "%%MatrixMarket matrix coordinate real symmetric\n2 3 1\n1 1 1.0\n");
  REQUIRE_THROWS(read_matrix_market(p1.string()));

  const auto p2 = temp_file("badheader.mtx");
  write_text(p2, "%%MatrixMarket matrix array real general\n2 2\n1\n0\n0\n1\n");
  REQUIRE_THROWS(read_matrix_market(p2.string()));

  const auto p3 = temp_file("nan.mtx");
  write_text(p3, "%%MatrixMarket matrix coordinate real symmetric\n1 1 1\n1 1 nan\n");
  REQUIRE_THROWS(read_matrix_market(p3.string()));

  const auto p4 = temp_file("short.mtx");
  write_text(p4, "%%MatrixMarket matrix coordinate real symmetric\n2 2 2\n1 1 1.0\n");
  REQUIRE_THROWS(read_matrix_market(p4.string()));

  const auto p5 = temp_file("range.mtx");
  write_text(p5, "%%MatrixMarket matrix coordinate real symmetric\n2 2 1\n3 1 1.0\n");
  REQUIRE_THROWS(read_matrix_market(p5.string()));
}

TEST_CASE("written file declares symmetric coordinate real", "[mm]") {
  const auto m = random_spd_dense10(9);
  const auto p = temp_file("header.mtx");
  write_matrix_market(m, p.string());
  std::ifstream in(p);
  std::string first;
  std::getline(in, first);
  REQUIRE(first == "%%MatrixMarket matrix coordinate real symmetric");
}
