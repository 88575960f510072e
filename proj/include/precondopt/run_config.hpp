#pragma once

#include <cctype>
#include <cstdint>
#include <cstdio>
#include <sstream>
#include <stdexcept>
#include <string>

#include "precondopt/colgen.hpp"
#include "precondopt/sip.hpp"

namespace precondopt {

/// Everything a run needs beyond the matrix itself. Serializes to a plain
/// key=value text file so a report can point at the exact configuration that
/// produced it.
struct RunConfig {
  double eps = 1e-10;
  std::size_t max_rounds = 200;
  std::size_t n_init_cuts = 20;
  double lanczos_rel_tol = 1e-14;
  std::size_t lanczos_max_iter = 1200;
  PricingNorm pricing_norm = PricingNorm::L2;
  std::size_t iterations = 5;  // improvement rounds for the iterate command
  std::uint64_t seed = 0;
  std::string out = ".";  // output directory

  void validate() const {
    if (!(eps > 0.0)) throw std::invalid_argument("config: eps must be > 0");
    if (!(lanczos_rel_tol > 0.0))
      throw std::invalid_argument("config: lanczos_rel_tol must be > 0");
    if (max_rounds == 0) throw std::invalid_argument("config: max_rounds must be >= 1");
    if (lanczos_max_iter == 0)
      throw std::invalid_argument("config: lanczos_max_iter must be >= 1");
    if (iterations == 0) throw std::invalid_argument("config: iterations must be >= 1");
  }
};

inline PricingNorm parse_pricing_norm(const std::string& s) {
  if (s == "l1") return PricingNorm::L1;
  if (s == "l2") return PricingNorm::L2;
  if (s == "linf") return PricingNorm::Linf;
  throw std::invalid_argument("config: pricing_norm must be l1, l2 or linf (got \"" + s + "\")");
}

inline SipConfig make_sip_config(const RunConfig& c) {
  SipConfig s;
  s.eps = c.eps;
  s.max_rounds = c.max_rounds;
  s.n_init_cuts = c.n_init_cuts;
  s.lanczos.rel_tol = c.lanczos_rel_tol;
  s.lanczos.max_iter = c.lanczos_max_iter;
  s.seed = c.seed;
  return s;
}

inline IterateConfig make_iterate_config(const RunConfig& c) {
  IterateConfig it;
  it.norm = c.pricing_norm;
  it.sip = make_sip_config(c);
  return it;
}

inline std::string serialize_run_config(const RunConfig& c) {
  char buf[512];
  std::string s;
  std::snprintf(buf, sizeof buf, "eps=%.17g\n", c.eps);
  s += buf;
  std::snprintf(buf, sizeof buf, "max_rounds=%zu\n", c.max_rounds);
  s += buf;
  std::snprintf(buf, sizeof buf, "n_init_cuts=%zu\n", c.n_init_cuts);
  s += buf;
  std::snprintf(buf, sizeof buf, "lanczos_rel_tol=%.17g\n", c.lanczos_rel_tol);
  s += buf;
  std::snprintf(buf, sizeof buf, "lanczos_max_iter=%zu\n", c.lanczos_max_iter);
  s += buf;
  s += "pricing_norm=";
  s += pricing_norm_name(c.pricing_norm);
  s += "\n";
  std::snprintf(buf, sizeof buf, "iterations=%zu\n", c.iterations);
  s += buf;
  std::snprintf(buf, sizeof buf, "seed=%llu\n", static_cast<unsigned long long>(c.seed));
  s += buf;
  s += "out=" + c.out + "\n";
  return s;
}

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

template <class T>
T parse_number(const std::string& key, const std::string& val) {
  std::istringstream in(val);
  T out;
  in >> out;
  if (!in || !in.eof())
    throw std::invalid_argument("config: bad value for " + key + ": \"" + val + "\"");
  return out;
}

}  // namespace detail

/// Parses key=value lines; '#' starts a comment, blank lines are skipped.
/// Unknown keys are errors so typos cannot silently fall back to defaults.
inline RunConfig parse_run_config(std::istream& in) {
  RunConfig c;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected key=value, got \"" + line + "\"");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string val = detail::trim(line.substr(eq + 1));
    if (key == "eps")
      c.eps = detail::parse_number<double>(key, val);
    else if (key == "max_rounds")
      c.max_rounds = detail::parse_number<std::size_t>(key, val);
    else if (key == "n_init_cuts")
      c.n_init_cuts = detail::parse_number<std::size_t>(key, val);
    else if (key == "lanczos_rel_tol")
      c.lanczos_rel_tol = detail::parse_number<double>(key, val);
    else if (key == "lanczos_max_iter")
      c.lanczos_max_iter = detail::parse_number<std::size_t>(key, val);
    else if (key == "pricing_norm")
      c.pricing_norm = parse_pricing_norm(val);
    else if (key == "iterations")
      c.iterations = detail::parse_number<std::size_t>(key, val);
    else if (key == "seed")
      c.seed = detail::parse_number<std::uint64_t>(key, val);
    else if (key == "out")
      c.out = val;
    else
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": unknown key \"" +
                                  key + "\"");
  }
  c.validate();
  return c;
}

inline RunConfig parse_run_config(const std::string& text) {
  std::istringstream in(text);
  return parse_run_config(in);
}

}  // namespace precondopt
