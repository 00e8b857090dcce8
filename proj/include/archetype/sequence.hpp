#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "archetype/common.hpp"

namespace archetype {

/// A point on the probability simplex: the fraction of one session spent on
/// each of M actions.
class SessionVector {
 public:
  static constexpr double kSumTolerance = 1e-9;

  SessionVector() = default;

  /// Validates that `values` is non-negative and sums to 1 within 1e-9.
  explicit SessionVector(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) throw UsageError("SessionVector: empty vector");
    double total = 0.0;
    for (double v : values_) {
      if (!(v >= 0.0) || !std::isfinite(v)) {
        throw UsageError("SessionVector: component outside [0, 1]");
      }
      total += v;
    }
    if (std::abs(total - 1.0) > kSumTolerance) {
      throw UsageError("SessionVector: components sum to " + std::to_string(total) +
                       ", not 1 (simplex violation)");
    }
  }

  /// Builds a session from raw non-negative weights (e.g. action counts).
  static SessionVector fromWeights(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0)) throw UsageError("SessionVector: negative weight");
      total += w;
    }
    if (!(total > 0.0)) throw UsageError("SessionVector: all-zero session");
    std::vector<double> out(weights.begin(), weights.end());
    for (double& v : out) v /= total;
    return SessionVector(std::move(out));
  }

  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t m) const { return values_[m]; }
  std::span<const double> values() const { return values_; }

  bool operator==(const SessionVector&) const = default;

 private:
  std::vector<double> values_;
};

/// One individual's ordered sessions.
struct Sequence {
  std::string id;
  std::vector<SessionVector> sessions;
  std::optional<std::string> group;

  std::size_t length() const { return sessions.size(); }
  std::size_t dim() const { return sessions.empty() ? 0 : sessions.front().size(); }

  bool operator==(const Sequence&) const = default;
};

using Corpus = std::vector<Sequence>;

inline std::size_t corpusDim(const Corpus& corpus) {
  for (const auto& seq : corpus) {
    if (!seq.sessions.empty()) return seq.dim();
  }
  return 0;
}

}  // namespace archetype
