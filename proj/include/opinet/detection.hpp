#ifndef OPINET_DETECTION_HPP
#define OPINET_DETECTION_HPP

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string_view>
#include <vector>

#include "opinet/core_model.hpp"
#include "opinet/matrix_io.hpp"

namespace opinet {

enum class PriorMode { Static, Online };

inline std::string_view to_string(PriorMode m) {
  return m == PriorMode::Static ? "static" : "online";
}

struct ScoreConfig {
  double prior = 0.1;
  double scale = 1.0;
  double exponent = 1.0;
  PriorMode mode = PriorMode::Static;

  void validate() const {
    if (!(prior >= 0.0 && prior <= 1.0)) throw ValidationError("prior must lie in [0, 1]");
    if (!(scale > 0.0)) throw ValidationError("scale must be positive");
    if (!(exponent > 0.0)) throw ValidationError("exponent must be positive");
  }
};

struct ScaledVariance {
  Vector per_topic;
  double mean = 0.0;
};

// Population variance across agents (rows) of s * x, per topic, and its mean
// over topics.
inline ScaledVariance scaled_mean_variance(const Matrix& x, double scale) {
  ScaledVariance out;
  out.per_topic = Vector::Zero(x.cols());
  if (x.rows() == 0 || x.cols() == 0) return out;
  const auto n = static_cast<double>(x.rows());
  for (Index p = 0; p < x.cols(); ++p) {
    const Vector col = scale * x.col(p);
    const double mu = col.sum() / n;
    out.per_topic(p) = (col.array() - mu).square().sum() / n;
  }
  out.mean = out.per_topic.mean();
  return out;
}

// One value per agent is a single topic.
inline ScaledVariance scaled_mean_variance(const Vector& x, double scale) {
  return scaled_mean_variance(Matrix(x), scale);
}

struct DriftLikelihood {
  double delta_v = 0.0;
  double likelihood = 0.0;
};

// dv = max(v_cur - v_prev, 0);  L = 1 - exp(-alpha * dv)
inline DriftLikelihood drift_likelihood(double v_cur, double v_prev, double exponent) {
  DriftLikelihood d;
  d.delta_v = std::max(v_cur - v_prev, 0.0);
  d.likelihood = -std::expm1(-exponent * d.delta_v);
  return d;
}

// L * prior / (L * prior + (1 - L)(1 - prior)); 0/0 returns the prior.
inline double bayes_update(double likelihood, double prior) {
  const double num = likelihood * prior;
  const double den = num + (1.0 - likelihood) * (1.0 - prior);
  if (den == 0.0) return prior;
  return std::clamp(num / den, 0.0, 1.0);
}

// Running prior carried between steps in online mode.
struct ScoreState {
  double prior = 0.1;
  std::size_t steps = 0;

  static ScoreState from(const ScoreConfig& cfg) { return {cfg.prior, 0}; }
};

struct ScoreStep {
  double v_prev = 0.0;
  double v_cur = 0.0;
  double delta_v = 0.0;
  double likelihood = 0.0;
  double posterior = 0.0;
};

// Static mode scores every step against cfg.prior; online mode feeds each
// posterior forward as the next prior.
inline ScoreStep score_step(const Matrix& x_prev, const Matrix& x_now,
                            const ScoreConfig& cfg, ScoreState& state) {
  if (x_prev.rows() != x_now.rows() || x_prev.cols() != x_now.cols()) {
    throw DimensionMismatch("score_step snapshots are " + shape_of(x_prev) +
                            " and " + shape_of(x_now));
  }
  ScoreStep s;
  s.v_prev = scaled_mean_variance(x_prev, cfg.scale).mean;
  s.v_cur = scaled_mean_variance(x_now, cfg.scale).mean;
  const auto d = drift_likelihood(s.v_cur, s.v_prev, cfg.exponent);
  s.delta_v = d.delta_v;
  s.likelihood = d.likelihood;
  const double prior = cfg.mode == PriorMode::Online ? state.prior : cfg.prior;
  s.posterior = bayes_update(s.likelihood, prior);
  if (cfg.mode == PriorMode::Online) state.prior = s.posterior;
  ++state.steps;
  return s;
}

struct FrobeniusDrift {
  double norm = 0.0;
  bool flagged = false;
};

inline FrobeniusDrift frobenius_drift(const Matrix& c_prev, const Matrix& c_now,
                                      double delta) {
  if (c_prev.rows() != c_now.rows() || c_prev.cols() != c_now.cols()) {
    throw DimensionMismatch("frobenius_drift operands are " + shape_of(c_prev) +
                            " and " + shape_of(c_now));
  }
  FrobeniusDrift d;
  d.norm = (c_now - c_prev).norm();
  d.flagged = d.norm > delta;
  return d;
}

inline FrobeniusDrift frobenius_drift(const LogicMatrix& c_prev,
                                      const LogicMatrix& c_now, double delta) {
  return frobenius_drift(c_prev.c(), c_now.c(), delta);
}

struct TimelineEntry {
  std::size_t step = 0;
  double wt = 0.0;
  double delta_v = 0.0;
  double likelihood = 0.0;
  double posterior = 0.0;
  PriorMode mode = PriorMode::Static;
};

struct AnomalyTimeline {
  std::vector<TimelineEntry> entries;

  void write_csv(std::ostream& out, bool header = true) const {
    if (header) out << "step,wt,delta_v,likelihood,posterior,mode\n";
    for (const auto& e : entries) {
      out << e.step << ',' << io::format_real(e.wt) << ','
          << io::format_real(e.delta_v) << ',' << io::format_real(e.likelihood)
          << ',' << io::format_real(e.posterior) << ',' << to_string(e.mode)
          << '\n';
    }
  }
};

// Scores every snapshot in `states` against a fixed baseline.
inline AnomalyTimeline score_against_baseline(const Matrix& baseline,
                                              const std::vector<Matrix>& states,
                                              const ScoreConfig& cfg, double wt,
                                              std::size_t first_step = 1) {
  cfg.validate();
  AnomalyTimeline tl;
  ScoreState state = ScoreState::from(cfg);
  for (std::size_t k = 0; k < states.size(); ++k) {
    const auto s = score_step(baseline, states[k], cfg, state);
    tl.entries.push_back({first_step + k, wt, s.delta_v, s.likelihood, s.posterior, cfg.mode});
  }
  return tl;
}

}  // namespace opinet

#endif  // OPINET_DETECTION_HPP
