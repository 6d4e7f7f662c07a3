#pragma once

#include "core.hpp"

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace hfatom {

enum class Verdict { pass, fail, inconclusive };

inline const char *to_string(Verdict v) {
  switch (v) {
  case Verdict::pass: return "pass";
  case Verdict::fail: return "fail";
  default: return "inconclusive";
  }
}

// One evaluated instance of an inequality lhs <= rhs; margin = rhs - lhs.
struct BoundSample {
  double Z = std::numeric_limits<double>::quiet_NaN();
  double r = std::numeric_limits<double>::quiet_NaN();
  std::string tag; // other parameters, e.g. "nu=4" or "l=1,k=0"
  double lhs = 0.0, rhs = 0.0, margin = 0.0;
  bool excluded = false; // reported but not part of the verdict (e.g. box-sensitive)
};

// Outcome of checking one claim over a set of samples.
struct BoundReport {
  std::string claim_id;
  std::vector<BoundSample> samples;
  double worst_margin = std::numeric_limits<double>::infinity();
  double tolerance = 0.0;
  Verdict verdict = Verdict::inconclusive;
  std::string settings_hash;
  std::vector<std::string> notes; // fitted constants, surrogate statements, skipped cells

  void add(BoundSample s) { samples.push_back(std::move(s)); }
  // lhs <= rhs
  void add_le(double lhs, double rhs, double Z = std::numeric_limits<double>::quiet_NaN(),
              double r = std::numeric_limits<double>::quiet_NaN(), std::string tag = {},
              bool excluded = false) {
    samples.push_back({Z, r, std::move(tag), lhs, rhs, rhs - lhs, excluded});
  }

  // Sets worst_margin and verdict: pass iff worst_margin >= -tolerance; no counted
  // samples (or a forced inconclusive) gives inconclusive.
  BoundReport &finalize(double tol, bool force_inconclusive = false) {
    tolerance = tol;
    worst_margin = std::numeric_limits<double>::infinity();
    std::size_t counted = 0;
    for (const auto &s : samples) {
      if (s.excluded) continue;
      ++counted;
      worst_margin = std::min(worst_margin, std::isnan(s.margin) ? -std::numeric_limits<double>::infinity()
                                                                 : s.margin);
    }
    if (counted == 0)
      verdict = Verdict::inconclusive;
    else if (worst_margin < -tol)
      verdict = Verdict::fail;
    else
      verdict = force_inconclusive ? Verdict::inconclusive : Verdict::pass;
    return *this;
  }
};

// FNV-1a over a textual description of the settings.
inline std::string settings_hash(const std::string &text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  static const char *hex = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[std::size_t(i)] = hex[h & 15];
  return out;
}

} // namespace hfatom
