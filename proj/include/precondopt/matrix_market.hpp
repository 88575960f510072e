#pragma once

#include <cctype>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "precondopt/sparse.hpp"

namespace precondopt {

/// Reads a MatrixMarket coordinate/real file. Accepts the "symmetric"
/// qualifier (one triangle listed) and "general" (full pattern, accepted only
/// if symmetric to 1e-12 relative). Duplicates are summed. Throws
/// std::runtime_error with a line-tagged message on malformed input.
inline SparseSymMatrix read_matrix_market(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
  std::istringstream hs(line);
  std::string tag, object, format, field, symmetry;
  hs >> tag >> object >> format >> field >> symmetry;
  for (auto* s : {&object, &format, &field, &symmetry})
    for (auto& c : *s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (tag != "%%MatrixMarket" || object != "matrix")
    throw std::runtime_error(path + ": not a MatrixMarket matrix file");
  if (format != "coordinate") throw std::runtime_error(path + ": only coordinate format supported");
  if (field != "real") throw std::runtime_error(path + ": only real field supported");
  if (symmetry != "symmetric" && symmetry != "general")
    throw std::runtime_error(path + ": symmetry must be symmetric or general");

  std::size_t lineno = 1;
  auto next_data_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++lineno;
      std::size_t i = 0;
      while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
      if (i == line.size() || line[i] == '%') continue;
      return true;
    }
    return false;
  };

  if (!next_data_line()) throw std::runtime_error(path + ": missing size line");
  std::int64_t rows = 0, cols = 0, count = 0;
  {
    std::istringstream ss(line);
    if (!(ss >> rows >> cols >> count))
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": bad size line");
  }
  if (rows != cols) throw std::runtime_error(path + ": matrix is not square");
  if (rows < 1) throw std::runtime_error(path + ": dimension must be >= 1");

  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(count));
  for (std::int64_t k = 0; k < count; ++k) {
    if (!next_data_line())
      throw std::runtime_error(path + ": expected " + std::to_string(count) + " entries, got " +
                               std::to_string(k));
    std::istringstream ss(line);
    std::int64_t i = 0, j = 0;
    double v = 0.0;
    if (!(ss >> i >> j >> v))
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": bad entry line");
    if (i < 1 || i > rows || j < 1 || j > cols)
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": index out of range");
    if (!std::isfinite(v))
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": non-finite value");
    t.push_back({i - 1, j - 1, v});
  }

  SparseSymMatrix m = (symmetry == "symmetric")
                          ? SparseSymMatrix::from_triplets_sym(rows, std::move(t))
                          : SparseSymMatrix::from_triplets_general(rows, std::move(t));
  m.validate();
  return m;
}

/// Writes the lower triangle in symmetric coordinate format with 17
/// significant digits, so write-then-read reproduces the CSR arrays bitwise.
inline void write_matrix_market(const SparseSymMatrix& m, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  std::int64_t lower = 0;
  const auto& rp = m.row_ptr();
  const auto& ci = m.col_idx();
  const auto& va = m.values();
  for (std::int64_t i = 0; i < m.dim(); ++i)
    for (std::int64_t p = rp[i]; p < rp[i + 1]; ++p)
      if (ci[p] <= i) ++lower;
  std::fprintf(f, "%%%%MatrixMarket matrix coordinate real symmetric\n");
  std::fprintf(f, "%lld %lld %lld\n", static_cast<long long>(m.dim()),
               static_cast<long long>(m.dim()), static_cast<long long>(lower));
  for (std::int64_t i = 0; i < m.dim(); ++i)
    for (std::int64_t p = rp[i]; p < rp[i + 1]; ++p)
      if (ci[p] <= i)
        std::fprintf(f, "%lld %lld %.17g\n", static_cast<long long>(i + 1),
                     static_cast<long long>(ci[p] + 1), va[p]);
  if (std::fclose(f) != 0) throw std::runtime_error("write failed for " + path);
}

}  // namespace precondopt
