#ifndef OPINET_ACCESS_LOGIC_HPP
#define OPINET_ACCESS_LOGIC_HPP

#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <vector>

#include "opinet/core_model.hpp"

namespace opinet {

// a(p, q): observed access-based influence of user q on user p, in event
// counts. component_of[p] labels the connected component of topic p.
class AccessCounts {
 public:
  AccessCounts(Matrix a, std::vector<long> component_of)
      : a_(std::move(a)), component_of_(std::move(component_of)) {
    if (a_.rows() != a_.cols()) {
      throw DimensionMismatch("access counts must be square, got " +
                              shape_of(a_));
    }
    if (static_cast<Index>(component_of_.size()) != a_.rows()) {
      throw DimensionMismatch("component map covers " +
                              std::to_string(component_of_.size()) +
                              " topics, counts cover " +
                              std::to_string(a_.rows()));
    }
    for (Index p = 0; p < a_.rows(); ++p) {
      for (Index q = 0; q < a_.cols(); ++q) {
        if (!(a_(p, q) >= 0.0) || !std::isfinite(a_(p, q))) {
          throw NegativeEntry(static_cast<std::size_t>(p),
                              static_cast<std::size_t>(q));
        }
      }
    }
  }

  const Matrix& a() const noexcept { return a_; }
  const std::vector<long>& component_of() const noexcept {
    return component_of_;
  }
  Index m() const noexcept { return a_.rows(); }

  bool same_component(Index p, Index q) const {
    return component_of_[static_cast<std::size_t>(p)] ==
           component_of_[static_cast<std::size_t>(q)];
  }

 private:
  Matrix a_;
  std::vector<long> component_of_;
};

// Row p keeps only the mass inside p's component, normalized to sum 1.
inline LogicMatrix logic_from_access(const AccessCounts& counts) {
  const Index m = counts.m();
  Matrix c = Matrix::Zero(m, m);
  for (Index p = 0; p < m; ++p) {
    double total = 0.0;
    for (Index q = 0; q < m; ++q) {
      if (counts.same_component(p, q)) total += counts.a()(p, q);
    }
    if (!(total > 0.0)) throw ZeroRowInComponent(static_cast<std::size_t>(p));
    for (Index q = 0; q < m; ++q) {
      if (counts.same_component(p, q)) c(p, q) = counts.a()(p, q) / total;
    }
  }
  return validate_logic(c);
}

// Seeded synthetic counts: Poisson(rate of the component) events for every
// within-component pair, plus one self-access per user so no row is empty.
// Cross-component entries get Poisson(cross_rate).
template <typename Rng>
AccessCounts synthetic_access_counts(const std::vector<long>& component_of,
                                     const std::map<long, double>& base_rates,
                                     double cross_rate, Rng& rng) {
  const auto m = static_cast<Index>(component_of.size());
  Matrix a = Matrix::Zero(m, m);
  for (Index p = 0; p < m; ++p) {
    for (Index q = 0; q < m; ++q) {
      const long cp = component_of[static_cast<std::size_t>(p)];
      const long cq = component_of[static_cast<std::size_t>(q)];
      double rate = cross_rate;
      if (cp == cq) {
        auto it = base_rates.find(cp);
        if (it == base_rates.end()) {
          throw ValidationError("no base rate for component " +
                                std::to_string(cp));
        }
        rate = it->second;
      }
      if (rate > 0.0) {
        std::poisson_distribution<std::int64_t> events(rate);
        a(p, q) = static_cast<double>(events(rng));
      }
    }
    a(p, p) += 1.0;
  }
  return AccessCounts(std::move(a), component_of);
}

// Adds unnormalized influence mass from topic `source` onto topic `target`.
struct InjectionEdge {
  std::size_t target = 0;
  std::size_t source = 0;
  double weight = 0.0;
};

// Adds each edge's weight to the magnitude of (target, source) on the
// target row's unnormalized scale, then renormalizes touched rows to unit
// 1-norm. `row_mass` is the unnormalized total of a base row: base rows are
// scaled by it before the weights are added. Rows that receive no positive
// weight are returned bit-for-bit unchanged.
inline LogicMatrix inject_cross_influence(const LogicMatrix& base,
                                          std::span<const InjectionEdge> edges,
                                          double row_mass = 1.0) {
  if (!(row_mass > 0.0)) {
    throw ValidationError("row mass must be positive");
  }
  const auto m = static_cast<std::size_t>(base.m());
  std::map<std::size_t, std::map<std::size_t, double>> added;
  for (const auto& e : edges) {
    if (e.target >= m) throw IndexOutOfRange(e.target, m);
    if (e.source >= m) throw IndexOutOfRange(e.source, m);
    if (e.target == e.source) {
      throw ValidationError("injection edge must cross topics, got " +
                            std::to_string(e.target) + " -> itself");
    }
    if (!(e.weight >= 0.0) || !std::isfinite(e.weight)) {
      throw ValidationError("injection weight must be finite and >= 0");
    }
    if (e.weight > 0.0) added[e.target][e.source] += e.weight;
  }

  Matrix c = base.c();
  for (const auto& [target, cols] : added) {
    const auto p = static_cast<Index>(target);
    Eigen::RowVectorXd row = c.row(p) * row_mass;
    for (const auto& [source, w] : cols) {
      const auto q = static_cast<Index>(source);
      row(q) += std::signbit(row(q)) ? -w : w;
    }
    c.row(p) = row / row.cwiseAbs().sum();
  }
  return validate_logic(c);
}

}  // namespace opinet

#endif  // OPINET_ACCESS_LOGIC_HPP
