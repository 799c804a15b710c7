// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "generators.hpp"
#include "opinet/opinet.hpp"
#include "oracles.hpp"

using namespace opinet;
namespace fs = std::filesystem;

namespace {

const std::string kDir = OPINET_SCENARIO_DIR;

// Collects failed checks for one criterion.
struct Check {
  std::vector<std::string> failures;

  void expect(bool ok, const std::string& what) {
    if (!ok && failures.size() < 8) failures.push_back(what);
    if (!ok) ++failed;
  }
  std::size_t failed = 0;
};

using Seconds = std::chrono::duration<double>;

std::vector<TopicSummary> epoch_topics(const std::string& scenario) {
  const auto rs = resolve(load_scenario(kDir + "/" + scenario));
  const auto runs = run_timeline(rs, CommandOptions{});
  return summarize_topics(runs.front().outcome);
}

// 1. Ground-truth convergence pattern on the shipped Simulation-1 scenarios.
void criterion_ground_truth(Check& c) {
  const auto start = std::chrono::steady_clock::now();
  const auto hat = epoch_topics("sim1_hat.json");
  const auto bar = epoch_topics("sim1_bar.json");
  const double secs = Seconds(std::chrono::steady_clock::now() - start).count();

  c.expect(hat.size() == 5 && bar.size() == 5, "five topics per configuration");
  for (const auto& t : hat) {
    const bool ok = t.kind == VerdictKind::Consensus && t.spread < 1e-6;
    c.expect(ok, "hat topic " + std::to_string(t.topic + 1) + " is not consensus");
  }
  for (const auto& t : bar) {
    const bool want = t.topic != 2;
    const bool got = t.kind == VerdictKind::Consensus && t.spread < 1e-6;
    c.expect(want == got, "bar topic " + std::to_string(t.topic + 1) + " verdict " +
                              std::string(to_string(t.kind)));
  }
  const auto tilde = epoch_topics("sim1_tilde.json");
  auto split = [](const std::vector<TopicSummary>& rows) {
    std::size_t k = 0;
    for (const auto& r : rows) k += r.kind != VerdictKind::Consensus;
    return k;
  };
  c.expect(split(tilde) > split(bar), "tilde has no more split topics than bar");
  char buf[64];
  std::snprintf(buf, sizeof buf, "runtime %.3f s", secs);
  c.expect(secs < 5.0, buf);
}

// 2. Necessity check agrees with simulation on random open singleton blocks.
void criterion_necessity(Check& c) {
  std::mt19937_64 rng(20240502);
  int satisfiable = 0;
  for (int k = 0; k < 200; ++k) {
    const Index n = 2 + static_cast<Index>(rng() % 5);
    const auto w = validate_influence(gen::random_influence(rng, n));
    const bool want_sat = k % 2 == 0;
    const std::size_t nq = 1 + rng() % 2;

    // Agent i splits its external mass 1 - c_pp,i between the externals in
    // proportion f_i : 1 - f_i with signs s_q, so its candidate is
    // s_1 a_1 f_i + s_2 a_2 (1 - f_i).
    std::vector<double> alpha(nq), sign(nq);
    for (std::size_t q = 0; q < nq; ++q) {
      alpha[q] = gen::uniform(rng, -1.0, 1.0);
      sign[q] = gen::coin(rng) ? 1.0 : -1.0;
    }
    if (nq == 1 && std::abs(alpha[0]) < 0.1) alpha[0] = alpha[0] < 0 ? -0.5 : 0.5;
    if (nq == 2 && std::abs(sign[0] * alpha[0] - sign[1] * alpha[1]) < 0.2) {
      alpha[1] = -sign[1] * sign[0] * (alpha[0] >= 0 ? 0.6 : -0.6);
    }
    GammaDiag gpp{Vector(n)};
    std::vector<GammaDiag> gq(nq, GammaDiag{Vector::Zero(n)});
    const double f_common = nq == 1 ? 1.0 : gen::uniform(rng, 0.0, 1.0);
    // An inconsistent instance needs two agents with candidates.
    const bool allow_vacuous = want_sat || n > 2;
    const Index vacuous = allow_vacuous && gen::coin(rng, 0.2)
                              ? static_cast<Index>(rng() % static_cast<std::uint64_t>(n))
                              : -1;
    Index odd_agent = static_cast<Index>(rng() % static_cast<std::uint64_t>(n));
    if (odd_agent == vacuous) odd_agent = (odd_agent + 1) % n;
    for (Index i = 0; i < n; ++i) {
      if (i == vacuous) {
        gpp.entries(i) = 1.0;
        continue;
      }
      gpp.entries(i) = gen::uniform(rng, 0.0, 0.9);
      const double mass = 1.0 - gpp.entries(i);
      double f = f_common;
      double flip = 1.0;
      if (!want_sat && i == odd_agent) {
        if (nq == 1) {
          flip = -1.0;
        } else {
          f = f_common > 0.5 ? f_common - 0.5 : f_common + 0.5;
        }
      }
      gq[0].entries(i) = flip * sign[0] * mass * f;
      if (nq == 2) gq[1].entries(i) = sign[1] * mass * (1.0 - f);
    }
    SingletonExternals ext;
    for (std::size_t q = 0; q < nq; ++q) ext.emplace(q + 1, SingletonExternal{alpha[q], gq[q]});

    const auto nec = check_necessity(gpp, ext);
    const auto step = open_singleton_stepper(w, gpp, ext);
    const Matrix x0 = gen::random_opinions(rng, n, 1);
    const auto run = run_to_verdict(OpinionState{x0, 0}, step);
    const bool consensus = run.verdict.kind == VerdictKind::Consensus;
    const std::string tag = "instance " + std::to_string(k);
    c.expect(nec.satisfiable == want_sat, tag + ": necessity disagrees with construction");
    c.expect(consensus == nec.satisfiable, tag + ": simulation disagrees with necessity");
    if (nec.satisfiable && consensus) {
      ++satisfiable;
      c.expect(nec.kappa.has_value() &&
                   std::abs(run.verdict.consensus(0) - *nec.kappa) <= 1e-6,
               tag + ": consensus value differs from kappa");
    }
  }
  c.expect(satisfiable == 100, "expected 100 satisfiable instances");
}

// 3. Injected rows match the reference perturbed rows.
void criterion_injection(Check& c) {
  struct Printed {
    double wt;
    std::vector<std::vector<double>> rows;
  };
  const std::vector<Printed> printed{
      {2.0, {{0, 0.571, 0, 0.143, 0.286}, {0, 0.571, 0, 0.286, 0.143}}},
      {50.0, {{0, 0.971, 0, 0.010, 0.019}, {0, 0.971, 0, 0.019, 0.010}}}};

  // Base row [0, 0, 0, 1/3, 2/3] with unnormalized mass 3 gains 2 wt on
  // column 2.
  Matrix base = Matrix::Identity(5, 5);
  base.row(3) << 0, 0, 0, 1.0 / 3.0, 2.0 / 3.0;
  const auto lbase = validate_logic(base);
  auto close = [](const Eigen::RowVectorXd& got, const std::vector<double>& want) {
    for (Index q = 0; q < 5; ++q) {
      if (std::abs(got(q) - want[static_cast<std::size_t>(q)]) > 0.001) return false;
    }
    return true;
  };
  for (const auto& p : printed) {
    const std::vector<InjectionEdge> edges{{3, 1, 2.0 * p.wt}};
    const auto bar = inject_cross_influence(lbase, edges, 3.0);
    c.expect(close(bar.c().row(3), p.rows[0]),
             "single-row injection misses printed row at wt=" + io::format_real(p.wt));
  }

  // Shipped scenario: both perturbed directories' rows appear in print.
  const auto rs = resolve(load_scenario(kDir + "/sim2.json"));
  for (const auto& p : printed) {
    const auto bar = rs.injected_logic(p.wt);
    for (const auto& want : p.rows) {
      const bool found = close(bar.c().row(3).head(5), want) || close(bar.c().row(4).head(5), want);
      c.expect(found, "scenario injection misses a printed row at wt=" + io::format_real(p.wt));
    }
    c.expect(bar.c().row(3).tail(2).isZero(0.0) && bar.c().row(4).tail(2).isZero(0.0),
             "injection touched users 6-7");
  }
}

// 4 and 5 share one sweep.
struct SweepData {
  std::map<std::pair<double, PriorMode>, AnomalyTimeline> timelines;
  double seconds = 0.0;
};

SweepData run_sim2_sweep() {
  const auto start = std::chrono::steady_clock::now();
  auto scen = load_scenario(kDir + "/sim2.json");
  scen.injection->sweep = {0, 1, 2, 5, 10, 50, 100, 1000};
  const auto rs = resolve(scen);
  const auto res = run_sweep(rs, CommandOptions{});
  SweepData d;
  d.seconds = Seconds(std::chrono::steady_clock::now() - start).count();
  for (const auto& tl : res.timelines) {
    d.timelines[{tl.entries.front().wt, tl.entries.front().mode}] = tl;
  }
  return d;
}

void criterion_sweep(Check& c, const SweepData& d) {
  const std::vector<double> weights{1, 2, 5, 10, 50, 100, 1000};
  for (auto mode : {PriorMode::Static, PriorMode::Online}) {
    const std::string m(to_string(mode));
    for (std::size_t j = 1; j < weights.size(); ++j) {
      const auto& lo = d.timelines.at({weights[j - 1], mode}).entries;
      const auto& hi = d.timelines.at({weights[j], mode}).entries;
      c.expect(lo.size() == hi.size() && !lo.empty(), "timeline lengths differ");
      for (std::size_t s = 0; s < std::min(lo.size(), hi.size()); ++s) {
        const std::string at = m + " step " + std::to_string(lo[s].step) + " wt " +
                               io::format_real(weights[j - 1]) + "->" +
                               io::format_real(weights[j]);
        c.expect(hi[s].delta_v >= lo[s].delta_v, "delta_v decreases, " + at);
        c.expect(hi[s].likelihood >= lo[s].likelihood, "likelihood decreases, " + at);
        c.expect(hi[s].posterior >= lo[s].posterior, "posterior decreases, " + at);
      }
    }
    // The injection must register at all.
    c.expect(d.timelines.at({1000.0, mode}).entries.front().delta_v > 0.0,
             "no variance drift at wt=1000");
  }
  for (const auto& e : d.timelines.at({0.0, PriorMode::Static}).entries) {
    c.expect(e.delta_v < 1e-9 && e.posterior < 1e-9, "wt=0 is not quiet");
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "sweep runtime %.3f s", d.seconds);
  c.expect(d.seconds < 60.0, buf);
}

// 5. Online prior compounds; the L = 0.9 sequence is 0.5 then 0.9.
void criterion_online(Check& c, const SweepData& d) {
  const double dv = -std::log(0.1);
  const Matrix prev = Matrix::Zero(2, 1);
  Matrix now(2, 1);
  now << -std::sqrt(dv), std::sqrt(dv);
  ScoreConfig stat{0.1, 1.0, 1.0, PriorMode::Static};
  ScoreConfig online{0.1, 1.0, 1.0, PriorMode::Online};
  auto ss = ScoreState::from(stat);
  auto os = ScoreState::from(online);
  const auto s1 = score_step(prev, now, stat, ss);
  const auto o1 = score_step(prev, now, online, os);
  const auto s2 = score_step(prev, now, stat, ss);
  const auto o2 = score_step(prev, now, online, os);
  c.expect(std::abs(s1.likelihood - 0.9) <= 1e-12, "likelihood is not 0.9");
  c.expect(std::abs(o1.posterior - 0.5) <= 1e-12, "online pi_1 != 0.5");
  c.expect(std::abs(o2.posterior - 0.9) <= 1e-12, "online pi_2 != 0.9");
  c.expect(std::abs(s2.posterior - 0.5) <= 1e-12, "static pi_2 != 0.5");
  c.expect(o2.posterior > s2.posterior, "online does not exceed static");

  // Grid over constant L > 0.5 and priors.
  for (double l = 0.51; l < 1.0; l += 0.04) {
    for (double prior = 0.01; prior < 1.0; prior += 0.07) {
      double p = prior;
      for (int k = 1; k <= 6; ++k) {
        p = bayes_update(l, p);
        if (k >= 2) c.expect(p > bayes_update(l, prior), "grid dominance fails");
      }
    }
  }

  // On the sim2 sweep, wherever L > 0.5 has held from the first step, online
  // leads static from step 2 on.
  std::size_t compared = 0;
  for (double wt : {1.0, 2.0, 5.0, 10.0, 50.0, 100.0, 1000.0}) {
    const auto& st = d.timelines.at({wt, PriorMode::Static}).entries;
    const auto& on = d.timelines.at({wt, PriorMode::Online}).entries;
    for (std::size_t s = 0; s < st.size() && st[s].likelihood > 0.5; ++s) {
      if (s == 0) continue;
      ++compared;
      c.expect(on[s].posterior > st[s].posterior,
               "sim2 online <= static at wt " + io::format_real(wt));
    }
  }
  c.expect(compared > 0, "sim2 sweep never sustains L > 0.5");
}

// 6. Exact points of the Bayes update.
void criterion_bayes(Check& c) {
  c.expect(std::abs(bayes_update(0.0, 0.1) - 0.0) <= 1e-12, "L=0");
  c.expect(std::abs(bayes_update(1.0, 0.1) - 1.0) <= 1e-12, "L=1");
  for (double prior : {0.0, 0.1, 0.3, 0.5, 0.77, 1.0}) {
    c.expect(std::abs(bayes_update(0.5, prior) - prior) <= 1e-12, "L=0.5 keeps prior");
  }
  c.expect(std::abs(bayes_update(0.9, 0.1) - 0.5) <= 1e-12, "L=0.9, prior 0.1");
}

// 7. Frobenius drift on the reference pair.
void criterion_frobenius(Check& c) {
  Matrix t0(3, 3), t1(3, 3);
  t0 << 0, 0.5, 0.5,
        0.5, 0, 0.5,
        0.5, 0.5, 0;
  t1 << 0, 0.2, 0.8,
        0.4, 0, 0.6,
        0.3, 0.7, 0;
  const auto a = validate_logic(t0);
  const auto b = validate_logic(t1);
  double sq = 0.0;
  for (Index i = 0; i < 3; ++i) {
    for (Index j = 0; j < 3; ++j) sq += (t1(i, j) - t0(i, j)) * (t1(i, j) - t0(i, j));
  }
  const double brute = std::sqrt(sq);
  const auto d = frobenius_drift(a, b, 0.5);
  c.expect(std::abs(d.norm - brute) <= 1e-9, "norm differs from elementwise sum");
  c.expect(std::abs(d.norm - std::sqrt(0.28)) <= 1e-9, "norm differs from sqrt(0.28)");
  for (double delta : {0.0, 0.1, 0.5, 0.52, 0.53, 0.6, 1.0, 10.0}) {
    c.expect(frobenius_drift(a, b, delta).flagged == (brute > delta),
             "flag wrong at delta " + io::format_real(delta));
  }
  c.expect(!frobenius_drift(a, a, 0.0).flagged, "identical matrices flagged");
}

// 8. SCC decomposition against reachability closure; DAG order.
void criterion_structure(Check& c) {
  std::mt19937_64 rng(8);
  for (int k = 0; k < 1000; ++k) {
    const Index m = 1 + static_cast<Index>(rng() % 8);
    const double density = gen::uniform(rng, 0.0, 0.45);
    std::vector<LogicMatrix> agents;
    Matrix pattern = Matrix::Zero(m, m);
    const int count = k % 3 == 0 ? 3 : 1;
    for (int a = 0; a < count; ++a) {
      agents.push_back(validate_logic(gen::random_logic(rng, m, density)));
      pattern += agents.back().c().cwiseAbs();
    }
    const AgentLogicAssignment assignment(agents);
    BlockAnalysis res;
    try {
      res = analyze(assignment);
    } catch (const Error& e) {
      c.expect(false, "instance " + std::to_string(k) + ": " + e.what());
      continue;
    }
    std::vector<std::vector<std::size_t>> got;
    for (const auto& b : res.blocks) {
      got.push_back(b.topics);
      c.expect(b.rule.has_value(), "block without rule");
    }
    c.expect(got == oracle::scc_by_closure(pattern),
             "instance " + std::to_string(k) + ": components differ from closure oracle");
    c.expect(oracle::is_linear_extension(res.dag),
             "instance " + std::to_string(k) + ": order is not a linear extension");
  }
}

// 9. Fixed-point residuals and boundedness.
void criterion_dynamics(Check& c) {
  std::mt19937_64 rng(9);
  std::size_t settled = 0;
  for (int k = 0; k < 1000; ++k) {
    const Index n = 2 + static_cast<Index>(rng() % 5);
    const Index m = 1 + static_cast<Index>(rng() % 5);
    const auto w = validate_influence(gen::random_influence(rng, n));
    std::vector<LogicMatrix> agents;
    std::vector<Matrix> raw;
    const bool shared = gen::coin(rng);
    for (Index i = 0; i < n; ++i) {
      if (!shared || i == 0) raw.push_back(gen::random_logic(rng, m, 0.5, true));
      else raw.push_back(raw.front());
      agents.push_back(validate_logic(raw.back()));
    }
    const AgentLogicAssignment assignment(agents);
    const auto analysis = analyze(assignment);
    const Matrix x0 = gen::random_opinions(rng, n, m);
    RunConfig cfg;
    const auto out = run_all(analysis, w, assignment, x0, cfg);
    const std::string tag = "instance " + std::to_string(k);
    c.expect(!out.early_terminated, tag + ": early termination");
    for (const auto& [id, res] : out.results) {
      for (const auto& s : res.history.snapshots) {
        c.expect(s.x.cwiseAbs().maxCoeff() <= 1.0 + 1e-12, tag + ": iterate left [-1, 1]");
      }
      if (!res.verdict.settled) continue;
      ++settled;
      ExternalConsensus ext;
      for (auto q : analysis.block(id).external_deps) ext.emplace(q, out.external_values.at(q));
      const auto f = oracle::block_affine_map(w.w(), raw, res.topics, ext);
      const double r = oracle::fixed_point_residual(f, res.final_state);
      c.expect(r < 1e-8, tag + ": residual " + io::format_real(r));
    }
  }
  c.expect(settled > 1000, "too few settled blocks: " + std::to_string(settled));

  // Shipped Simulation-1 runs.
  for (const char* name : {"sim1_hat.json", "sim1_bar.json", "sim1_tilde.json"}) {
    const auto rs = resolve(load_scenario(kDir + "/" + name));
    const auto runs = run_timeline(rs, CommandOptions{});
    const auto& er = runs.front();
    std::vector<Matrix> raw;
    for (const auto& a : er.logic.agents()) raw.push_back(a.c());
    for (const auto& [id, res] : er.outcome.results) {
      c.expect(res.verdict.settled, std::string(name) + ": block did not settle");
      ExternalConsensus ext;
      for (auto q : er.analysis.block(id).external_deps) {
        ext.emplace(q, er.outcome.external_values.at(q));
      }
      const auto f = oracle::block_affine_map(rs.w.w(), raw, res.topics, ext);
      c.expect(oracle::fixed_point_residual(f, res.final_state) < 1e-8,
               std::string(name) + ": residual too large");
    }
  }
}

// 10. Same seed, same bytes.
std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

void criterion_determinism(Check& c) {
  const fs::path root = fs::temp_directory_path() / ("opinet-accept-" + std::to_string(::getpid()));
  fs::remove_all(root);
  std::ostringstream log;
  for (const char* name : {"sim1_hat.json", "sim1_bar.json", "sim1_tilde.json",
                           "identity.json", "sim2.json", "access_demo.json"}) {
    for (std::uint64_t seed : {42u, 7u}) {
      std::vector<fs::path> dirs;
      for (int run = 0; run < 2; ++run) {
        CommandOptions opt;
        opt.seed = seed;
        opt.out_dir = (root / (std::string(name) + std::to_string(seed) + "_" + std::to_string(run))).string();
        c.expect(cmd_simulate(kDir + "/" + name, opt, log) == kExitOk,
                 std::string(name) + ": simulate failed");
        if (std::string(name) == "sim2.json") {
          c.expect(cmd_sweep(kDir + "/" + name, opt, log) == kExitOk,
                   std::string(name) + ": sweep failed");
        }
        dirs.emplace_back(opt.out_dir);
      }
      for (const char* file : {"trajectory.csv", "results_simple.csv", "scores.csv"}) {
        if (!fs::exists(dirs[0] / file)) continue;
        const auto a = slurp(dirs[0] / file);
        c.expect(!a.empty() && a == slurp(dirs[1] / file),
                 std::string(name) + "/" + file + " differs between runs");
      }
    }
  }
  fs::remove_all(root);
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<void(Check&)> run;
  };
  SweepData sweep;
  const std::vector<Criterion> criteria{
      {1, "ground-truth convergence pattern", criterion_ground_truth},
      {2, "necessity agrees with simulation", criterion_necessity},
      {3, "injection reproduces reference rows", criterion_injection},
      {4, "sweep monotone in injection weight",
       [&](Check& c) {
         sweep = run_sim2_sweep();
         criterion_sweep(c, sweep);
       }},
      {5, "online prior compounds", [&](Check& c) { criterion_online(c, sweep); }},
      {6, "bayes update exact points", criterion_bayes},
      {7, "frobenius drift", criterion_frobenius},
      {8, "structural oracles", criterion_structure},
      {9, "dynamics oracles", criterion_dynamics},
      {10, "determinism", criterion_determinism},
  };

  int failed = 0;
  for (const auto& cr : criteria) {
    Check c;
    const auto start = std::chrono::steady_clock::now();
    try {
      cr.run(c);
    } catch (const std::exception& e) {
      c.expect(false, std::string("exception: ") + e.what());
    }
    const double secs = Seconds(std::chrono::steady_clock::now() - start).count();
    std::printf("%s criterion %2d: %s (%.2f s)\n", c.failed ? "FAIL" : "PASS", cr.id, cr.name,
                secs);
    for (const auto& f : c.failures) std::printf("       - %s\n", f.c_str());
    if (c.failed > c.failures.size()) {
      std::printf("       ... %zu more\n", c.failed - c.failures.size());
    }
    failed += c.failed ? 1 : 0;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}
