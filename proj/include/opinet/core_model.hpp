#ifndef OPINET_CORE_MODEL_HPP
#define OPINET_CORE_MODEL_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "opinet/errors.hpp"
#include "opinet/graph.hpp"

namespace opinet {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

inline constexpr double kRowSumTolerance = 1e-9;

// Entries with |c| at or below this are treated as absent dependencies.
inline constexpr double kEdgeThreshold = 1e-12;

inline std::string shape_of(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

// n x n row-stochastic similarity matrix between directories (agents).
class InfluenceMatrix {
 public:
  const Matrix& w() const noexcept { return w_; }
  Index n() const noexcept { return w_.rows(); }
  double operator()(Index i, Index j) const { return w_(i, j); }

  // Recorded, not enforced: every w_ii > 0.
  bool positive_diagonal() const noexcept { return positive_diagonal_; }

 private:
  explicit InfluenceMatrix(Matrix w) : w_(std::move(w)) {
    positive_diagonal_ = (w_.diagonal().array() > 0.0).all();
  }
  friend InfluenceMatrix validate_influence(const Matrix& w);

  Matrix w_;
  bool positive_diagonal_ = false;
};

// m x m signed topic-dependency matrix: unit absolute row sums and a
// nonnegative diagonal.
class LogicMatrix {
 public:
  const Matrix& c() const noexcept { return c_; }
  Index m() const noexcept { return c_.rows(); }
  double operator()(Index p, Index q) const { return c_(p, q); }

  friend bool operator==(const LogicMatrix& a, const LogicMatrix& b) {
    return a.c_.rows() == b.c_.rows() && a.c_ == b.c_;
  }

 private:
  explicit LogicMatrix(Matrix c) : c_(std::move(c)) {}
  friend LogicMatrix validate_logic(const Matrix& c);

  Matrix c_;
};

inline InfluenceMatrix validate_influence(const Matrix& w) {
  if (w.rows() != w.cols()) {
    throw DimensionMismatch("influence matrix must be square, got " +
                            shape_of(w));
  }
  if (w.rows() < 2) {
    throw DimensionMismatch("influence matrix needs n >= 2, got " +
                            shape_of(w));
  }
  for (Index i = 0; i < w.rows(); ++i) {
    for (Index j = 0; j < w.cols(); ++j) {
      if (!(w(i, j) >= 0.0)) {
        throw NegativeEntry(static_cast<std::size_t>(i),
                            static_cast<std::size_t>(j));
      }
    }
    const double sum = w.row(i).sum();
    if (!(std::abs(sum - 1.0) <= kRowSumTolerance)) {
      throw RowSumViolation(static_cast<std::size_t>(i), sum);
    }
  }
  return InfluenceMatrix(w);
}

inline LogicMatrix validate_logic(const Matrix& c) {
  if (c.rows() != c.cols()) {
    throw DimensionMismatch("logic matrix must be square, got " + shape_of(c));
  }
  if (c.rows() < 1) {
    throw DimensionMismatch("logic matrix needs m >= 1");
  }
  for (Index p = 0; p < c.rows(); ++p) {
    const double abs_sum = c.row(p).cwiseAbs().sum();
    if (!(std::abs(abs_sum - 1.0) <= kRowSumTolerance)) {
      throw AbsRowSumViolation(static_cast<std::size_t>(p), abs_sum);
    }
    if (c(p, p) < 0.0) {
      throw NegativeDiagonal(static_cast<std::size_t>(p));
    }
  }
  return LogicMatrix(c);
}

// Divides each row by its absolute sum. Used for matrices stored with
// rounded entries (e.g. 0.143/0.429/0.429), whose rows miss 1 by ~1e-3.
inline Matrix normalize_rows(const Matrix& raw) {
  Matrix out = raw;
  for (Index r = 0; r < out.rows(); ++r) {
    const double s = out.row(r).cwiseAbs().sum();
    if (s > 0.0) out.row(r) /= s;
  }
  return out;
}

// Per-agent logic matrices, agent i -> C_i.
class AgentLogicAssignment {
 public:
  explicit AgentLogicAssignment(std::vector<LogicMatrix> per_agent)
      : per_agent_(std::move(per_agent)) {
    if (per_agent_.empty()) {
      throw DimensionMismatch("assignment needs at least one agent");
    }
    for (const auto& c : per_agent_) {
      if (c.m() != per_agent_.front().m()) {
        throw DimensionMismatch("agents disagree on topic count: " +
                                std::to_string(per_agent_.front().m()) +
                                " vs " + std::to_string(c.m()));
      }
    }
  }

  // n copies of the same matrix.
  static AgentLogicAssignment homogeneous(const LogicMatrix& c, Index n) {
    return AgentLogicAssignment(
        std::vector<LogicMatrix>(static_cast<std::size_t>(n), c));
  }

  Index n() const noexcept { return static_cast<Index>(per_agent_.size()); }
  Index m() const noexcept { return per_agent_.front().m(); }
  const LogicMatrix& operator[](Index agent) const {
    return per_agent_.at(static_cast<std::size_t>(agent));
  }
  const std::vector<LogicMatrix>& agents() const noexcept {
    return per_agent_;
  }

 private:
  std::vector<LogicMatrix> per_agent_;
};

// Agents x topics opinions at step t.
struct OpinionState {
  Matrix x;
  std::size_t t = 0;

  bool finite() const { return x.allFinite(); }
};

struct AsymmetricPair {
  std::size_t p;
  std::size_t q;
  double c_pq;
  double c_qp;

  friend bool operator==(const AsymmetricPair&, const AsymmetricPair&) =
      default;
};

// Within-component pairs p < q whose weights differ by more than 1e-9.
// Advisory only.
inline std::vector<AsymmetricPair> symmetry_report(
    const LogicMatrix& c,
    const std::vector<std::vector<std::size_t>>& components) {
  std::vector<bool> seen(static_cast<std::size_t>(c.m()), false);
  for (const auto& comp : components) {
    for (auto p : comp) {
      if (p >= seen.size()) throw IndexOutOfRange(p, seen.size());
      if (seen[p]) {
        throw ValidationError("topic " + std::to_string(p) +
                              " appears in two components");
      }
      seen[p] = true;
    }
  }
  for (std::size_t p = 0; p < seen.size(); ++p) {
    if (!seen[p]) {
      throw ValidationError("topic " + std::to_string(p) +
                            " missing from component partition");
    }
  }

  std::vector<AsymmetricPair> out;
  for (const auto& comp : components) {
    for (std::size_t a = 0; a < comp.size(); ++a) {
      for (std::size_t b = a + 1; b < comp.size(); ++b) {
        const auto p = std::min(comp[a], comp[b]);
        const auto q = std::max(comp[a], comp[b]);
        const double pq = c(static_cast<Index>(p), static_cast<Index>(q));
        const double qp = c(static_cast<Index>(q), static_cast<Index>(p));
        if (std::abs(pq - qp) > kRowSumTolerance) {
          out.push_back({p, q, pq, qp});
        }
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) {
    return std::pair(x.p, x.q) < std::pair(y.p, y.q);
  });
  return out;
}

struct AperiodicityAdvisory {
  bool strongly_connected = false;
  bool has_positive_diagonal = false;
  // Sufficient (not necessary) condition for a primitive W.
  bool sufficient() const {
    return strongly_connected && has_positive_diagonal;
  }
};

// Agent i listens to j when w_ij > 0.
inline graph::Adjacency influence_graph(const InfluenceMatrix& w) {
  graph::Adjacency adj(static_cast<std::size_t>(w.n()));
  for (Index i = 0; i < w.n(); ++i) {
    for (Index j = 0; j < w.n(); ++j) {
      if (i != j && w(i, j) > 0.0) {
        adj[static_cast<std::size_t>(i)].push_back(static_cast<std::size_t>(j));
      }
    }
  }
  return adj;
}

inline AperiodicityAdvisory check_aperiodicity(const InfluenceMatrix& w) {
  AperiodicityAdvisory a;
  a.strongly_connected = graph::is_strongly_connected(influence_graph(w));
  a.has_positive_diagonal = (w.w().diagonal().array() > 0.0).any();
  return a;
}

}  // namespace opinet

#endif  // OPINET_CORE_MODEL_HPP
