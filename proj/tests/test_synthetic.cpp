#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "precondopt/synthetic.hpp"

using namespace precondopt;

TEST_CASE("same seed reproduces the matrix bitwise", "[synthetic]") {
  const auto a = generate_synthetic(50, 0.2, 1e-3, EntryDist::Uniform01, 42);
  const auto b = generate_synthetic(50, 0.2, 1e-3, EntryDist::Uniform01, 42);
  REQUIRE(a.row_ptr() == b.row_ptr());
  REQUIRE(a.col_idx() == b.col_idx());
  REQUIRE(a.values() == b.values());
  const auto c = generate_synthetic(50, 0.2, 1e-3, EntryDist::Uniform01, 43);
  REQUIRE(a.values() != c.values());
}

TEST_CASE("generated matrix is SPD with lambda_min >= alpha", "[synthetic]") {
  for (const auto dist : {EntryDist::Uniform01, EntryDist::Normal}) {
    const double alpha = 1e-3;
    const auto m = generate_synthetic(60, 0.2, alpha, dist, 7);
    m.validate();
    const auto dense = oracle::dense_from_csr(m);
    const double lmin = oracle::lambda_min(dense);
    // A^T A is PSD, so the shift is a hard floor up to rounding
    REQUIRE(lmin >= alpha * (1.0 - 1e-9));
    // the diagonal carries the shift: every diagonal entry >= alpha
    const auto d = m.diagonal();
    for (double v : d) REQUIRE(v >= alpha * (1.0 - 1e-12));
  }
}

TEST_CASE("sparsity tracks the entry probability", "[synthetic]") {
  // With per-entry probability sigma, rows of A hold ~sigma*n entries, and
  // two columns of A overlap somewhere with probability ~1-(1-sigma^2)^n.
  // At (n, sigma) = (1000, 0.1) that makes A^T A essentially full.
  const std::int64_t n = 1000;
  const auto m = generate_synthetic(n, 0.1, 1e-3, EntryDist::Uniform01, 3);
  const double fill = static_cast<double>(m.nnz()) / (static_cast<double>(n) * n);
  REQUIRE(fill >= 0.95);

  // and a genuinely sparse regime stays sparse: expected row degree sigma*n = 2
  const auto s = generate_synthetic(n, 0.002, 1e-3, EntryDist::Uniform01, 3);
  REQUIRE(s.nnz() < 20 * n);
  REQUIRE(s.nnz() >= n);  // diagonal present throughout
}

TEST_CASE("parameter validation", "[synthetic]") {
  REQUIRE_THROWS(generate_synthetic(0, 0.1, 1e-3, EntryDist::Uniform01, 1));
  REQUIRE_THROWS(generate_synthetic(10, -0.1, 1e-3, EntryDist::Uniform01, 1));
  REQUIRE_THROWS(generate_synthetic(10, 1.5, 1e-3, EntryDist::Uniform01, 1));
  REQUIRE_THROWS(generate_synthetic(10, 0.1, 0.0, EntryDist::Uniform01, 1));
}

TEST_CASE("sigma=0 yields alpha*I", "[synthetic]") {
  const auto m = generate_synthetic(5, 0.0, 0.25, EntryDist::Normal, 9);
  REQUIRE(m.nnz() == 5);
  for (double v : m.diagonal()) REQUIRE(v == 0.25);
}
