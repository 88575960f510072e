#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "precondopt/precond.hpp"
#include "precondopt/sparse.hpp"
#include "precondopt/synthetic.hpp"
#include "precondopt/vec.hpp"

using namespace precondopt;

namespace {

SparseSymMatrix diag_matrix(const std::vector<double>& d) {
  std::vector<Triplet> t;
  for (std::size_t i = 0; i < d.size(); ++i)
    t.push_back({static_cast<std::int64_t>(i), static_cast<std::int64_t>(i), d[i]});
  return SparseSymMatrix::from_triplets_sym(d.size(), t);
}

// row infinity-norms of diagm(d)^{-1/2} M diagm(d)^{-1/2}, straight from the
// dense matrix -- the property ruiz promises, measured independently
std::vector<double> scaled_row_norms(const SparseSymMatrix& m, const std::vector<double>& d) {
  Eigen::MatrixXd a = oracle::dense_from_csr(m);
  const auto n = a.rows();
  std::vector<double> r(static_cast<std::size_t>(n), 0.0);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      r[static_cast<std::size_t>(i)] =
          std::max(r[static_cast<std::size_t>(i)],
                   std::fabs(a(i, j)) / std::sqrt(d[static_cast<std::size_t>(i)] *
                                                  d[static_cast<std::size_t>(j)]));
  return r;
}

}  // namespace

TEST_CASE("jacobi extracts the diagonal", "[precond]") {
  SECTION("frozen diagonal matrix") {
    const auto d = jacobi(diag_matrix({2.0, 5.0}));
    REQUIRE(d == std::vector<double>{2.0, 5.0});
    REQUIRE(oracle::kappa_preconditioned(diag_matrix({2.0, 5.0}), d) ==
            Catch::Approx(1.0).margin(1e-12));
  }
  SECTION("identity") {
    const auto d = jacobi(diag_matrix({1.0, 1.0, 1.0}));
    REQUIRE(d == std::vector<double>(3, 1.0));
  }
  SECTION("matches the dense diagonal on a random instance") {
    const auto m = generate_synthetic(10, 0.8, 0.3, EntryDist::Normal, 3);
    const Eigen::MatrixXd a = oracle::dense_from_csr(m);
    const auto d = jacobi(m);
    for (std::size_t i = 0; i < 10; ++i)
      REQUIRE(d[i] == a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)));
  }
  SECTION("rejects a nonpositive diagonal") {
    std::vector<Triplet> t{{0, 0, 1.0}, {1, 1, -2.0}};
    const auto m = SparseSymMatrix::from_triplets_sym(2, t);
    REQUIRE_THROWS_AS(jacobi(m), std::domain_error);
  }
}

TEST_CASE("ruiz equilibrates row norms", "[precond]") {
  SECTION("diagonal matrix resolves in one updating sweep") {
    const auto m = diag_matrix({3.0, 12.0, 0.5});
    const auto d = ruiz(m, 1, 1e-6);  // a single sweep must already land it
    REQUIRE(d[0] == Catch::Approx(3.0).margin(1e-10));
    REQUIRE(d[1] == Catch::Approx(12.0).margin(1e-10));
    REQUIRE(d[2] == Catch::Approx(0.5).margin(1e-10));
  }
  SECTION("identity is a fixed point") {
    const auto d = ruiz(diag_matrix({1.0, 1.0, 1.0, 1.0}));
    for (double v : d) REQUIRE(v == Catch::Approx(1.0).margin(1e-12));
  }
  SECTION("random instance reaches near-unit scaled row norms") {
    const auto m = generate_synthetic(20, 0.7, 0.4, EntryDist::Normal, 11);
    const auto d = ruiz(m, 10, 1e-6);
    for (double v : d) REQUIRE(v > 0.0);
    for (double r : scaled_row_norms(m, d)) {
      REQUIRE(r >= 1.0 - 1e-5);
      REQUIRE(r <= 1.0 + 1e-5);
    }
  }
}

TEST_CASE("random subspaces are deterministic prefixes containing ones", "[precond]") {
  SECTION("k = 0 degenerates to the constant basis") {
    const auto b = random_subspace(7, 0, 123);
    REQUIRE(b.size() == 1);
    REQUIRE(b.vectors[0] == std::vector<double>(7, 1.0));
    REQUIRE(b.identity_combo.has_value());
    REQUIRE((*b.identity_combo)[0] == 1.0);
  }
  SECTION("draws are ranged and reproducible") {
    const auto b1 = random_subspace(40, 2, 77);
    const auto b2 = random_subspace(40, 2, 77);
    REQUIRE(b1.size() == 3);
    for (std::size_t j = 1; j < 3; ++j) {
      REQUIRE(b1.vectors[j] == b2.vectors[j]);
      for (double v : b1.vectors[j]) {
        REQUIRE(v >= -0.5);
        REQUIRE(v <= 0.5);
      }
    }
    REQUIRE(random_subspace(40, 2, 78).vectors[1] != b1.vectors[1]);
  }
  SECTION("smaller bases are exact prefixes of larger ones") {
    const auto small = random_subspace(25, 2, 5);
    const auto big = random_subspace(25, 3, 5);
    for (std::size_t j = 0; j < small.size(); ++j)
      REQUIRE(big.vectors[j] == small.vectors[j]);
  }
}

TEST_CASE("subspace optimization finds certified preconditioners", "[precond]") {
  SECTION("jacobi direction is exactly optimal for a diagonal matrix") {
    const auto m = diag_matrix({1.0, 100.0});
    Basis basis = Basis::from_vectors({ones(2), m.diagonal()});
    const auto res = optimize_in_subspace(m, basis, SipConfig{});
    REQUIRE(res.method == PrecondMethod::Subspace);
    REQUIRE(res.certified);
    REQUIRE(res.kappa_bound == Catch::Approx(1.0).margin(1e-6));
    REQUIRE(oracle::kappa_preconditioned(m, res.d) <= res.kappa_bound * (1.0 + 1e-6));
  }
  SECTION("constant basis measures the condition number") {
    const auto m = generate_synthetic(25, 0.6, 0.8, EntryDist::Normal, 21);
    const double expect = oracle::kappa(m);
    Basis basis = Basis::from_vectors({ones(25)});
    const auto res = optimize_in_subspace(m, basis, SipConfig{});
    REQUIRE(res.certified);
    REQUIRE(res.kappa_bound == Catch::Approx(expect).epsilon(1e-6));
    REQUIRE(oracle::kappa_preconditioned(m, res.d) <= res.kappa_bound * (1.0 + 1e-6));
  }
  SECTION("dominates every positive basis member individually") {
    for (std::uint64_t seed : {31, 32}) {
      const auto m = generate_synthetic(30, 0.5, 0.5, EntryDist::Normal, seed);
      const auto dj = jacobi(m);
      const auto dr = ruiz(m);
      Basis basis = Basis::from_vectors({ones(30), dj, dr});
      const auto res = optimize_in_subspace(m, basis, SipConfig{});
      const double best_single =
          std::min({oracle::kappa(m), oracle::kappa_preconditioned(m, dj),
                    oracle::kappa_preconditioned(m, dr)});
      REQUIRE(res.kappa_bound <= best_single + 1e-6);
      REQUIRE(all_positive(res.d));
      REQUIRE(oracle::kappa_preconditioned(m, res.d) <= res.kappa_bound * (1.0 + 1e-6));
    }
  }
  SECTION("the bound is invariant to rescaling the basis") {
    const auto m = generate_synthetic(20, 0.6, 0.6, EntryDist::Normal, 41);
    Basis basis = Basis::from_vectors({ones(20), jacobi(m)});
    std::vector<DiagonalVec> scaled = basis.vectors;
    for (auto& v : scaled)
      for (double& x : v) x *= 37.5;
    const auto r1 = optimize_in_subspace(m, basis, SipConfig{});
    const auto r2 = optimize_in_subspace(m, Basis::from_vectors(scaled), SipConfig{});
    REQUIRE(r2.kappa_bound == Catch::Approx(r1.kappa_bound).epsilon(1e-8));
  }
  SECTION("nested random subspaces never get worse") {
    const auto m = generate_synthetic(20, 0.8, 0.02, EntryDist::Normal, 51);
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t k : {0, 2, 4}) {
      const auto res = optimize_in_subspace(m, random_subspace(20, k, 9), SipConfig{});
      REQUIRE(res.kappa_bound <= prev * (1.0 + 1e-8));
      prev = res.kappa_bound;
    }
  }
  SECTION("round-capped solves fall back to an uncertified bound") {
    const auto m = generate_synthetic(20, 0.6, 0.3, EntryDist::Normal, 61);
    SipConfig cfg;
    cfg.max_rounds = 1;
    const auto res = optimize_in_subspace(m, Basis::from_vectors({ones(20)}), cfg);
    REQUIRE_FALSE(res.certified);
    REQUIRE(std::isfinite(res.kappa_bound));
    REQUIRE(res.kappa_bound == Catch::Approx(1.0 / res.tau));
    REQUIRE(all_positive(res.d));
  }
}

TEST_CASE("condition number estimation agrees with dense eigenvalues", "[precond]") {
  SECTION("identity") {
    REQUIRE(estimate_condition_number(diag_matrix(std::vector<double>(12, 1.0))) ==
            Catch::Approx(1.0).margin(1e-9));
  }
  SECTION("frozen diagonal spectrum") {
    REQUIRE(estimate_condition_number(diag_matrix({1.0, 4.0})) ==
            Catch::Approx(4.0).margin(1e-6));
  }
  SECTION("random instances at unconstrained budget") {
    for (std::uint64_t seed : {71, 72, 73}) {
      const auto m = generate_synthetic(50, 0.4, 0.5, EntryDist::Normal, seed);
      const double expect = oracle::kappa(m);
      REQUIRE(estimate_condition_number(m) == Catch::Approx(expect).epsilon(1e-6));
    }
  }
}
