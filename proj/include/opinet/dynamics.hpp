#ifndef OPINET_DYNAMICS_HPP
#define OPINET_DYNAMICS_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <string_view>
#include <variant>
#include <vector>

#include "opinet/core_model.hpp"
#include "opinet/matrix_io.hpp"

namespace opinet {

// diag(c_pq,1, ..., c_pq,n): one logic coefficient per agent.
struct GammaDiag {
  Vector entries;

  Index n() const noexcept { return entries.size(); }
  double operator[](Index i) const { return entries(i); }
};

inline GammaDiag gamma_of(const AgentLogicAssignment& a, std::size_t p,
                          std::size_t q) {
  GammaDiag g{Vector(a.n())};
  for (Index i = 0; i < a.n(); ++i) {
    g.entries(i) = a[i](static_cast<Index>(p), static_cast<Index>(q));
  }
  return g;
}

// Consensus of an external topic: a scalar when all agents agreed, otherwise
// one value per agent.
using ExternalValue = std::variant<double, Vector>;
using ExternalConsensus = std::map<std::size_t, ExternalValue>;

inline bool is_scalar(const ExternalValue& v) {
  return std::holds_alternative<double>(v);
}

inline double external_at(const ExternalValue& v, Index agent) {
  if (const auto* s = std::get_if<double>(&v)) return *s;
  return std::get<Vector>(v)(agent);
}

// External input to an open singleton: consensus value and the per-agent
// weights c_pq,i it enters with.
struct SingletonExternal {
  ExternalValue alpha;
  GammaDiag gamma;
};
using SingletonExternals = std::map<std::size_t, SingletonExternal>;

namespace detail {

// (W X)(i, p) summed over j in index order, so every stepper produces the
// same bits for the averaging part.
inline Matrix mix(const Matrix& w, const Matrix& x) {
  Matrix out(x.rows(), x.cols());
  for (Index p = 0; p < x.cols(); ++p) {
    for (Index i = 0; i < x.rows(); ++i) {
      double acc = 0.0;
      for (Index j = 0; j < w.cols(); ++j) acc += w(i, j) * x(j, p);
      out(i, p) = acc;
    }
  }
  return out;
}

inline void require(bool ok, const char* what) {
  if (!ok) throw DimensionMismatch(what);
}

}  // namespace detail

// Affine block update shared by every rule:
//
//   x_i^p(t+1) = self(i,p) * sum_j w_ij x_j^p(t)
//              + sum_{q in block, q != p} coupling_i(p,q) * x_i^q(t)
//              + constant(i,p)
//
// coupling is per agent (r x r, diagonal ignored); constant is optional.
class BlockStepper {
 public:
  BlockStepper(const InfluenceMatrix& w, Matrix self,
               std::vector<Matrix> coupling = {},
               std::optional<Matrix> constant = std::nullopt)
      : w_(&w.w()),
        self_(std::move(self)),
        coupling_(std::move(coupling)),
        constant_(std::move(constant)) {
    detail::require(self_.rows() == w.n(), "self-weights must have n rows");
    if (!coupling_.empty()) {
      detail::require(static_cast<Index>(coupling_.size()) == w.n(),
                      "coupling needs one matrix per agent");
      for (const auto& c : coupling_) {
        detail::require(c.rows() == self_.cols() && c.cols() == self_.cols(),
                        "coupling must be r x r");
      }
    }
    if (constant_) {
      detail::require(constant_->rows() == self_.rows() &&
                          constant_->cols() == self_.cols(),
                      "constant must be n x r");
    }
  }

  Index agents() const noexcept { return self_.rows(); }
  Index topics() const noexcept { return self_.cols(); }
  const Matrix& self_weights() const noexcept { return self_; }
  const std::vector<Matrix>& coupling() const noexcept { return coupling_; }
  const std::optional<Matrix>& constant() const noexcept { return constant_; }

  Matrix operator()(const Matrix& x) const {
    detail::require(x.rows() == agents() && x.cols() == topics(),
                    "opinion matrix does not match block");
    Matrix out = detail::mix(*w_, x);
    const Index r = topics();
    for (Index p = 0; p < r; ++p) {
      for (Index i = 0; i < agents(); ++i) {
        double v = self_(i, p) * out(i, p);
        if (!coupling_.empty()) {
          const Matrix& c = coupling_[static_cast<std::size_t>(i)];
          for (Index q = 0; q < r; ++q) {
            if (q != p) v += c(p, q) * x(i, q);
          }
        }
        if (constant_) v += (*constant_)(i, p);
        out(i, p) = v;
      }
    }
    return out;
  }

 private:
  const Matrix* w_;
  Matrix self_;
  std::vector<Matrix> coupling_;
  std::optional<Matrix> constant_;
};

inline BlockStepper singleton_stepper(const InfluenceMatrix& w,
                                      const GammaDiag& gamma_pp) {
  detail::require(gamma_pp.n() == w.n(), "gamma length must equal n");
  return BlockStepper(w, Matrix(gamma_pp.entries));
}

inline BlockStepper open_singleton_stepper(const InfluenceMatrix& w,
                                           const GammaDiag& gamma_pp,
                                           const SingletonExternals& externals) {
  detail::require(gamma_pp.n() == w.n(), "gamma length must equal n");
  if (externals.empty()) return singleton_stepper(w, gamma_pp);
  Matrix constant = Matrix::Zero(w.n(), 1);
  for (const auto& [q, ext] : externals) {
    if (!is_scalar(ext.alpha)) throw VectorExternalNotAllowed(q);
    detail::require(ext.gamma.n() == w.n(), "external gamma length must equal n");
    const double alpha = std::get<double>(ext.alpha);
    for (Index i = 0; i < w.n(); ++i) constant(i, 0) += alpha * ext.gamma[i];
  }
  return BlockStepper(w, Matrix(gamma_pp.entries), {}, std::move(constant));
}

// x_i(t+1) = c_pp,i * sum_j w_ij x_j(t)
inline Vector step_singleton(const Vector& x, const InfluenceMatrix& w,
                             const GammaDiag& gamma_pp) {
  detail::require(x.size() == w.n(), "opinion vector length must equal n");
  return singleton_stepper(w, gamma_pp)(Matrix(x)).col(0);
}

// x_i(t+1) = c_pp,i * sum_j w_ij x_j(t) + sum_q alpha_q c_pq,i
inline Vector step_singleton_open(const Vector& x, const InfluenceMatrix& w,
                                  const GammaDiag& gamma_pp,
                                  const SingletonExternals& externals) {
  detail::require(x.size() == w.n(), "opinion vector length must equal n");
  return open_singleton_stepper(w, gamma_pp, externals)(Matrix(x)).col(0);
}

// Block shared by all agents: x_i^p(t+1) = c_pp sum_j w_ij x_j^p
//                                         + sum_{q != p} c_pq x_i^q.
inline BlockStepper closed_multitopic_stepper(const InfluenceMatrix& w,
                                              const Matrix& c_sub) {
  detail::require(c_sub.rows() == c_sub.cols(), "logic sub-block must be square");
  const Index r = c_sub.rows();
  Matrix self(w.n(), r);
  for (Index i = 0; i < w.n(); ++i) self.row(i) = c_sub.diagonal().transpose();
  return BlockStepper(w, std::move(self),
                      std::vector<Matrix>(static_cast<std::size_t>(w.n()), c_sub));
}

inline Matrix step_multitopic_closed(const Matrix& x, const InfluenceMatrix& w,
                                     const Matrix& c_sub) {
  return closed_multitopic_stepper(w, c_sub)(x);
}

// Per-agent logic over block topics `topics` (global indices). Topics outside
// the block with a nonzero coefficient for any agent must appear in
// `externals`; vector externals feed agent i its own alpha_q^(i).
inline BlockStepper open_multitopic_stepper(const InfluenceMatrix& w,
                                            const std::vector<std::size_t>& topics,
                                            const AgentLogicAssignment& logic,
                                            const ExternalConsensus& externals) {
  detail::require(logic.n() == w.n(), "logic assignment must cover n agents");
  detail::require(!topics.empty(), "block needs at least one topic");
  const Index n = w.n();
  const auto r = static_cast<Index>(topics.size());
  const auto m = static_cast<std::size_t>(logic.m());
  std::vector<bool> inside(m, false);
  for (auto t : topics) {
    if (t >= m) throw IndexOutOfRange(t, m);
    inside[t] = true;
  }
  for (const auto& [q, v] : externals) {
    if (q >= m) throw IndexOutOfRange(q, m);
    if (inside[q]) {
      throw ValidationError("external value given for in-block topic " +
                            std::to_string(q));
    }
    if (const auto* vec = std::get_if<Vector>(&v)) {
      detail::require(vec->size() == n, "vector external must have n entries");
    }
  }

  Matrix self(n, r);
  std::vector<Matrix> coupling(static_cast<std::size_t>(n), Matrix::Zero(r, r));
  Matrix constant = Matrix::Zero(n, r);
  bool any_coupling = false;
  bool any_external = false;
  for (Index i = 0; i < n; ++i) {
    const LogicMatrix& c = logic[i];
    for (Index a = 0; a < r; ++a) {
      const auto p = static_cast<Index>(topics[static_cast<std::size_t>(a)]);
      self(i, a) = c(p, p);
      for (Index b = 0; b < r; ++b) {
        if (a == b) continue;
        const double v = c(p, static_cast<Index>(topics[static_cast<std::size_t>(b)]));
        coupling[static_cast<std::size_t>(i)](a, b) = v;
        any_coupling = any_coupling || v != 0.0;
      }
      for (std::size_t q = 0; q < m; ++q) {
        if (inside[q]) continue;
        const double v = c(p, static_cast<Index>(q));
        if (std::abs(v) <= kEdgeThreshold) continue;
        auto it = externals.find(q);
        if (it == externals.end()) throw MissingExternal(q);
        constant(i, a) += v * external_at(it->second, i);
        any_external = true;
      }
    }
  }
  return BlockStepper(w, std::move(self),
                      any_coupling ? std::move(coupling) : std::vector<Matrix>{},
                      any_external ? std::optional<Matrix>(std::move(constant))
                                   : std::nullopt);
}

inline Matrix step_multitopic_open(const Matrix& x, const InfluenceMatrix& w,
                                   const std::vector<std::size_t>& topics,
                                   const AgentLogicAssignment& logic,
                                   const ExternalConsensus& externals) {
  return open_multitopic_stepper(w, topics, logic, externals)(x);
}

struct NecessityResult {
  bool satisfiable = false;
  // Common consensus value; empty when every agent is vacuous (c_pp = 1 and
  // no external input) or the condition fails.
  std::optional<double> kappa;
  // Per-agent candidate (sum_q alpha_q c_pq,i) / (1 - c_pp,i); empty for
  // vacuous agents.
  std::vector<std::optional<double>> per_agent_kappas;
};

inline constexpr double kKappaTolerance = 1e-9;

// Does kappa * (1 - c_pp,i) = sum_q alpha_q c_pq,i hold for one kappa in
// [-1, 1] across all agents?
inline NecessityResult check_necessity(const GammaDiag& gamma_pp,
                                       const SingletonExternals& externals) {
  const Index n = gamma_pp.n();
  Vector drive = Vector::Zero(n);
  for (const auto& [q, ext] : externals) {
    if (!is_scalar(ext.alpha)) throw VectorExternalNotAllowed(q);
    detail::require(ext.gamma.n() == n, "external gamma length must equal n");
    drive += std::get<double>(ext.alpha) * ext.gamma.entries;
  }

  NecessityResult res;
  res.per_agent_kappas.resize(static_cast<std::size_t>(n));
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  double sum = 0.0;
  std::size_t count = 0;
  for (Index i = 0; i < n; ++i) {
    const double denom = 1.0 - gamma_pp[i];
    if (std::abs(denom) <= kEdgeThreshold) {
      if (std::abs(drive(i)) > kEdgeThreshold) {
        throw SelfDependencyOne(static_cast<std::size_t>(i));
      }
      continue;
    }
    const double k = drive(i) / denom;
    res.per_agent_kappas[static_cast<std::size_t>(i)] = k;
    lo = std::min(lo, k);
    hi = std::max(hi, k);
    sum += k;
    ++count;
  }
  if (count == 0) {
    res.satisfiable = true;
    return res;
  }
  const double kappa = sum / static_cast<double>(count);
  res.satisfiable = (hi - lo) <= kKappaTolerance && std::abs(kappa) <= 1.0 + kKappaTolerance;
  if (res.satisfiable) res.kappa = kappa;
  return res;
}

struct RunConfig {
  std::size_t t_max = 5000;
  double settle_tol = 1e-9;
  double consensus_tol = 1e-6;
  std::size_t settle_window = 10;
  std::size_t history_stride = 1;
};

struct OpinionHistory {
  std::vector<OpinionState> snapshots;

  const OpinionState& final() const { return snapshots.back(); }
};

enum class VerdictKind { Consensus, PersistentDisagreement, NonConvergent };

inline std::string_view to_string(VerdictKind k) {
  switch (k) {
    case VerdictKind::Consensus: return "consensus";
    case VerdictKind::PersistentDisagreement: return "disagreement";
    case VerdictKind::NonConvergent: return "nonconvergent";
  }
  return "?";
}

struct ConvergenceVerdict {
  VerdictKind kind = VerdictKind::NonConvergent;
  std::vector<VerdictKind> topic_kinds;
  // Per-topic consensus value (mean across agents); meaningful for topics
  // whose kind is Consensus.
  Vector consensus;
  // max - min across agents, per topic, at the final step.
  Vector spread;
  std::size_t steps_used = 0;
  bool settled = false;
  bool overflow = false;
};

struct RunOutcome {
  OpinionHistory history;
  ConvergenceVerdict verdict;

  const Matrix& final_state() const { return history.final().x; }
};

inline Vector cross_agent_spread(const Matrix& x) {
  return x.colwise().maxCoeff().transpose() - x.colwise().minCoeff().transpose();
}

// Iterates `step` until every topic column moves by less than settle_tol
// (sup norm) for settle_window consecutive steps, or t_max steps elapse.
template <typename Stepper>
RunOutcome run_to_verdict(const OpinionState& initial, const Stepper& step,
                          const RunConfig& cfg = {}) {
  if (cfg.t_max < 1) throw ValidationError("t_max must be >= 1");
  const std::size_t stride = std::max<std::size_t>(cfg.history_stride, 1);
  const Index r = initial.x.cols();

  RunOutcome out;
  out.history.snapshots.push_back(initial);
  Matrix x = initial.x;
  std::size_t t = initial.t;
  std::vector<std::size_t> calm(static_cast<std::size_t>(r), 0);
  auto& v = out.verdict;

  for (std::size_t k = 0; k < cfg.t_max; ++k) {
    Matrix next = step(x);
    ++t;
    ++v.steps_used;
    if (!next.allFinite()) {
      v.overflow = true;
      break;
    }
    bool all_calm = true;
    for (Index p = 0; p < r; ++p) {
      const double moved = (next.col(p) - x.col(p)).cwiseAbs().maxCoeff();
      auto& c = calm[static_cast<std::size_t>(p)];
      c = moved < cfg.settle_tol ? c + 1 : 0;
      all_calm = all_calm && c >= cfg.settle_window;
    }
    x = std::move(next);
    if ((t - initial.t) % stride == 0) out.history.snapshots.push_back({x, t});
    if (all_calm) {
      v.settled = true;
      break;
    }
  }
  if (out.history.snapshots.back().t != t) out.history.snapshots.push_back({x, t});

  v.spread = cross_agent_spread(x);
  v.consensus = x.colwise().mean().transpose();
  v.topic_kinds.assign(static_cast<std::size_t>(r), VerdictKind::NonConvergent);
  bool all_consensus = !v.overflow;
  for (Index p = 0; p < r; ++p) {
    auto& kind = v.topic_kinds[static_cast<std::size_t>(p)];
    if (!v.overflow && calm[static_cast<std::size_t>(p)] >= cfg.settle_window) {
      kind = v.spread(p) < cfg.consensus_tol ? VerdictKind::Consensus
                                             : VerdictKind::PersistentDisagreement;
    }
    all_consensus = all_consensus && kind == VerdictKind::Consensus;
  }
  if (all_consensus) {
    v.kind = VerdictKind::Consensus;
  } else if (v.settled) {
    v.kind = VerdictKind::PersistentDisagreement;
  } else {
    v.kind = VerdictKind::NonConvergent;
  }
  return out;
}

// Long-format trajectory: one row per (t, agent, topic), 1-based labels.
// `topic_labels[p]` is the global topic index of column p.
inline void write_trajectory_csv(std::ostream& out,
                                 const std::vector<OpinionState>& states,
                                 const std::vector<std::size_t>& topic_labels,
                                 bool header = true) {
  if (header) out << "t,agent,topic,value\n";
  for (const auto& s : states) {
    for (Index i = 0; i < s.x.rows(); ++i) {
      for (Index p = 0; p < s.x.cols(); ++p) {
        out << s.t << ',' << i + 1 << ','
            << topic_labels.at(static_cast<std::size_t>(p)) + 1 << ','
            << io::format_real(s.x(i, p)) << '\n';
      }
    }
  }
}

}  // namespace opinet

#endif  // OPINET_DYNAMICS_HPP
