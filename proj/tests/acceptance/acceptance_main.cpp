// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails. Criterion names given on the command line
// restrict the run to those criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "phasechange/agent.hpp"
#include "phasechange/env_config.hpp"
#include "phasechange/environment.hpp"
#include "phasechange/harness.hpp"
#include "phasechange/nn.hpp"
#include "phasechange/oracle.hpp"
#include "support/reference.hpp"

namespace pc = phasechange;
using pc::env::Action;
using pc::env::Cell;
using pc::env::EnvState;
using pc::env::LatentFlag;
using pc::env::Mode;
using pc::env::Orientation;
using pc::env::PhaseDiagram;
using pc::env::ScenarioConfig;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
  std::vector<std::string> failures;

  void Check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (failures.size() < 5) failures.push_back(what);
    }
  }
};

struct Criterion {
  std::string name;
  double budget_seconds;
  std::function<Outcome()> run;
};

std::string Format(const char* fmt, double a, double b = 0.0, double c = 0.0,
                   double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, fmt, a, b, c, d);
  return buf;
}

int FlagToRef(LatentFlag f) {
  switch (f) {
    case LatentFlag::kNone: return 0;
    case LatentFlag::kPrimedPositive: return 1;
    case LatentFlag::kPrimedNegative: return -1;
  }
  return 0;
}

LatentFlag RefToFlag(int f) {
  return f == 0 ? LatentFlag::kNone
                : (f > 0 ? LatentFlag::kPrimedPositive : LatentFlag::kPrimedNegative);
}

// ---- environment ------------------------------------------------------------

Outcome EnvironmentConformance() {
  Outcome o;
  const PhaseDiagram d = PhaseDiagram::Default();
  const auto map = pc::testing::MakeBoundaryMap(d);
  int checked = 0;
  for (int p = 0; p < d.height(); ++p) {
    for (int t = 0; t < d.width(); ++t) {
      for (int flag = -1; flag <= 1; ++flag) {
        for (int a = 0; a < 4; ++a) {
          const pc::testing::RefState rs{t, p, flag};
          const EnvState s{t, p, RefToFlag(flag)};
          for (Mode mode : {Mode::kSemiMarkov, Mode::kMarkov}) {
            const bool semi = mode == Mode::kSemiMarkov;
            const auto want = pc::testing::RefStep(d.width(), d.height(), map, semi, rs, a);
            const EnvState got =
                pc::env::ApplyAction(d, mode, s, pc::env::ActionFromIndex(a));
            ++checked;
            o.Check(got.t == want.t && got.p == want.p &&
                        FlagToRef(got.flag) == want.flag,
                    Format("mismatch at (%g,%g) flag %g action %g", t, p, flag, a));
          }
          // Markov boundaries behave exactly like the interior.
          const auto interior = pc::testing::RefMove(d.width(), d.height(), rs, a);
          const EnvState m = pc::env::ApplyAction(d, Mode::kMarkov, s,
                                                  pc::env::ActionFromIndex(a));
          o.Check(m.t == interior.t && m.p == interior.p,
                  Format("markov move differs at (%g,%g)", t, p));
        }
      }
      // Every boundary cell needs exactly the documented pair in each
      // direction: the crossing action alone stalls, partner then crossing
      // moves one cell.
      const auto orient = d.BoundaryAt({t, p});
      if (!orient) continue;
      const bool vertical = *orient == Orientation::kVertical;
      for (int dir : {-1, 1}) {
        const Action partner = vertical
            ? (dir > 0 ? Action::kWPlus : Action::kWMinus)
            : (dir > 0 ? Action::kQPlus : Action::kQMinus);
        const Action cross = vertical
            ? (dir > 0 ? Action::kQPlus : Action::kQMinus)
            : (dir > 0 ? Action::kWPlus : Action::kWMinus);
        const EnvState s0{t, p, LatentFlag::kNone};
        o.Check(pc::env::ApplyAction(d, Mode::kSemiMarkov, s0, cross) == s0,
                Format("single crossing action moved at (%g,%g)", t, p));
        const EnvState primed = pc::env::ApplyAction(d, Mode::kSemiMarkov, s0, partner);
        o.Check(primed.cell() == s0.cell(), Format("priming moved at (%g,%g)", t, p));
        const EnvState after = pc::env::ApplyAction(d, Mode::kSemiMarkov, primed, cross);
        const Cell expect = vertical
            ? Cell{std::clamp(t + dir, 0, d.width() - 1), p}
            : Cell{t, std::clamp(p + dir, 0, d.height() - 1)};
        o.Check(after.cell() == expect && after.flag == LatentFlag::kNone,
                Format("pair did not cross at (%g,%g)", t, p));
      }
    }
  }
  // Horizontal-boundary fixture: (s_x, s_y), a=1, (s_x, s_y), a=3, (s_x, s_y+1).
  const PhaseDiagram fixture(8, 8, {{Orientation::kHorizontal, 4, 0, 7}});
  pc::env::Environment env(fixture, {"fixture", {3, 4}, {7, 7}, Mode::kSemiMarkov});
  const auto o0 = env.Reset();
  const auto o1 = env.Step(pc::env::ActionFromIndex(1)).observation;
  const auto o2 = env.Step(pc::env::ActionFromIndex(3)).observation;
  o.Check(o0.t == 3 && o0.p == 4 && o1.t == 3 && o1.p == 4 && o2.t == 3 && o2.p == 5,
          "horizontal fixture sequence");
  o.detail = std::to_string(checked) + " transitions + fixture sequence";
  return o;
}

// ---- oracle -----------------------------------------------------------------

Outcome OracleValues() {
  Outcome o;
  const PhaseDiagram d = PhaseDiagram::Default();
  // hard: 40 per the published result; the rest from the reference solver.
  const std::map<std::pair<std::string, Mode>, int> expected = {
      {{"hard", Mode::kMarkov}, 40}, {{"hard", Mode::kSemiMarkov}, 42},
      {{"mod", Mode::kMarkov}, 18},  {{"mod", Mode::kSemiMarkov}, 19},
      {{"easy", Mode::kMarkov}, 6},  {{"easy", Mode::kSemiMarkov}, 6}};
  std::ostringstream detail;
  for (const auto& [key, want] : expected) {
    const ScenarioConfig sc =
        pc::env::FindScenario(pc::env::DefaultScenarios(key.second), key.first);
    const int got = pc::oracle::OptimalSteps(d, sc);
    const auto ref = pc::testing::RefShortestPath(d, sc);
    o.Check(got == want && ref && *ref == want,
            key.first + "/" + std::string(pc::env::ModeName(key.second)) + " = " +
                std::to_string(got));
    detail << key.first << '/' << pc::env::ModeName(key.second) << '=' << got << ' ';
  }
  o.detail = detail.str();
  return o;
}

Outcome OracleCrossCheck() {
  Outcome o;
  std::mt19937_64 rng(2024);
  long pairs = 0;
  int grids = 0;
  for (int w = 2; w <= 12; ++w) {
    for (int h = 2; h <= 12; ++h) {
      const bool vertical = std::uniform_int_distribution<int>(0, 1)(rng) == 1;
      const int across = vertical ? w : h;
      const int along = vertical ? h : w;
      const int index = std::uniform_int_distribution<int>(0, across - 1)(rng);
      int a = std::uniform_int_distribution<int>(0, along - 1)(rng);
      int b = std::uniform_int_distribution<int>(0, along - 1)(rng);
      if (a > b) std::swap(a, b);
      const PhaseDiagram d(w, h, {{vertical ? Orientation::kVertical
                                            : Orientation::kHorizontal,
                                   index, a, b}});
      ++grids;
      for (int s = 0; s < w * h; ++s) {
        const Cell start{s % w, s / w};
        const auto semi_ref = pc::testing::RefDistances(d, start, Mode::kSemiMarkov);
        const auto markov_ref = pc::testing::RefDistances(d, start, Mode::kMarkov);
        for (int g = 0; g < w * h; ++g) {
          if (g == s) continue;
          const Cell goal{g % w, g / w};
          ++pairs;
          const auto bfs =
              pc::oracle::FindShortestPath(d, {"x", start, goal, Mode::kSemiMarkov});
          const int bfs_steps = bfs ? bfs->steps : -1;
          o.Check(bfs_steps == semi_ref[g],
                  Format("semi %gx%g start %g goal %g", w, h, s, g));
          const int manhattan = pc::oracle::ManhattanLowerBound({"x", start, goal, Mode::kMarkov});
          const auto markov =
              pc::oracle::FindShortestPath(d, {"x", start, goal, Mode::kMarkov});
          o.Check(markov && markov->steps == manhattan && markov_ref[g] == manhattan,
                  Format("markov %gx%g start %g goal %g", w, h, s, g));
        }
      }
    }
  }
  o.detail = std::to_string(grids) + " grids, " + std::to_string(pairs) +
             " start/goal pairs per mode";
  return o;
}

// ---- gradients --------------------------------------------------------------

using pc::nn::Matrix;
using pc::nn::Vector;

// 0.5 * sum_b (q[a_b, b] - y_b)^2: the per-sample TD regression.
struct TdProblem {
  Matrix x;
  Matrix h;
  std::vector<int> actions;
  Vector targets;
};

double TdValue(const Matrix& q, const TdProblem& pr) {
  double loss = 0.0;
  for (int b = 0; b < q.cols(); ++b) {
    const double e = q(pr.actions[b], b) - pr.targets[b];
    loss += 0.5 * e * e;
  }
  return loss;
}

Matrix TdDq(const Matrix& q, const TdProblem& pr) {
  Matrix dq = Matrix::Zero(q.rows(), q.cols());
  for (int b = 0; b < q.cols(); ++b) {
    dq(pr.actions[b], b) = q(pr.actions[b], b) - pr.targets[b];
  }
  return dq;
}

double MaxRelativeError(const Vector& analytic, const Vector& numeric) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < analytic.size(); ++i) {
    const double a = analytic[i];
    const double n = numeric[i];
    const double scale = std::max({std::abs(a), std::abs(n), 1e-6});
    worst = std::max(worst, std::abs(a - n) / scale);
  }
  return worst;
}

// Central differences of f at x, step 1e-5.
Vector NumericGradient(Vector x, const std::function<double(const Vector&)>& f) {
  constexpr double kStep = 1e-5;
  Vector g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + kStep;
    const double up = f(x);
    x[i] = keep - kStep;
    const double down = f(x);
    x[i] = keep;
    g[i] = (up - down) / (2 * kStep);
  }
  return g;
}

TdProblem RandomProblem(int input, int hidden, int batch, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<int> act(0, 3);
  TdProblem pr;
  pr.x = Matrix::NullaryExpr(input, batch, [&] { return u(rng); });
  pr.h = Matrix::NullaryExpr(hidden, batch, [&] { return u(rng); });
  pr.targets = Vector::NullaryExpr(batch, [&] { return 2.0 * u(rng); });
  for (int b = 0; b < batch; ++b) pr.actions.push_back(act(rng));
  return pr;
}

Outcome GradientVerification() {
  Outcome o;
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> width(2, 10);
  std::uniform_int_distribution<int> batch(1, 6);
  double mlp_worst = 0.0;
  double gru_worst = 0.0;
  constexpr int kInstances = 20;
  for (int i = 0; i < kInstances; ++i) {
    const int input = i % 2 == 0 ? 2 : 4;
    {
      const int hidden = width(rng);
      auto params = pc::nn::NetworkParams::Random(
          {pc::nn::NetworkKind::kMlp, input, hidden, 4}, rng);
      const TdProblem pr = RandomProblem(input, hidden, batch(rng), rng);
      const auto out = pc::nn::MlpForward(params, pr.x);
      const Vector analytic = pc::nn::MlpBackward(params, out.cache, TdDq(out.q, pr));
      const Vector numeric = NumericGradient(params.values(), [&](const Vector& v) {
        pc::nn::NetworkParams probe = params;
        probe.values() = v;
        return TdValue(pc::nn::MlpForward(probe, pr.x).q, pr);
      });
      mlp_worst = std::max(mlp_worst, MaxRelativeError(analytic, numeric));
    }
    {
      const int hidden = width(rng);
      auto params = pc::nn::NetworkParams::Random(
          {pc::nn::NetworkKind::kGru, input, hidden, 4}, rng);
      const TdProblem pr = RandomProblem(input, hidden, batch(rng), rng);
      const auto out = pc::nn::GruForward(params, pr.x, pr.h);
      const auto grads = pc::nn::GruBackward(params, out.cache, TdDq(out.q, pr));
      const Vector numeric = NumericGradient(params.values(), [&](const Vector& v) {
        pc::nn::NetworkParams probe = params;
        probe.values() = v;
        return TdValue(pc::nn::GruForward(probe, pr.x, pr.h).q, pr);
      });
      gru_worst = std::max(gru_worst, MaxRelativeError(grads.params, numeric));
      const Vector h_flat = pr.h.reshaped();
      const Vector numeric_h = NumericGradient(h_flat, [&](const Vector& v) {
        const Matrix hm = v.reshaped(pr.h.rows(), pr.h.cols());
        return TdValue(pc::nn::GruForward(params, pr.x, hm).q, pr);
      });
      const Vector analytic_h = grads.h_prev.reshaped();
      gru_worst = std::max(gru_worst, MaxRelativeError(analytic_h, numeric_h));
    }
  }
  o.Check(mlp_worst < 1e-4, Format("mlp max relative error %.3g", mlp_worst));
  o.Check(gru_worst < 1e-4, Format("gru max relative error %.3g", gru_worst));
  o.detail = Format("%g instances each, max rel err mlp %.2e gru %.2e", kInstances,
                    mlp_worst, gru_worst);
  return o;
}

// ---- tabular ----------------------------------------------------------------

Outcome TabularSolvability() {
  Outcome o;
  const PhaseDiagram d = PhaseDiagram::Scaled16();
  std::ostringstream detail;
  std::uint64_t seed = 5;
  for (const char* name : {"easy", "mod"}) {
    const ScenarioConfig sc =
        pc::env::FindScenario(pc::env::Scaled16Scenarios(Mode::kSemiMarkov), name);
    const auto ref = pc::testing::RefShortestPath(d, sc);
    const int bfs = pc::oracle::OptimalSteps(d, sc);
    std::mt19937_64 rng(seed++);
    const auto r = pc::oracle::TabularQLearning(d, sc, {}, rng);
    const int greedy = r.greedy_steps.value_or(-1);
    o.Check(ref && *ref == bfs && greedy == bfs,
            std::string(name) + ": greedy " + std::to_string(greedy) + " vs optimal " +
                std::to_string(bfs));
    detail << name << " greedy=" << greedy << " optimal=" << bfs << ' ';
  }
  o.detail = detail.str();
  return o;
}

// ---- HER --------------------------------------------------------------------

Outcome HerStatistics() {
  Outcome o;
  const PhaseDiagram d = PhaseDiagram::Scaled16();
  constexpr int kTuples = 10'000;
  std::mt19937_64 layout(3);
  std::uniform_int_distribution<int> coord(0, 15);
  const Cell goal{15, 5};
  std::vector<pc::agents::Transition> episode;
  for (int i = 0; i < kTuples; ++i) {
    pc::agents::Transition tr;
    const Cell from{coord(layout), coord(layout)};
    const Cell to{coord(layout), coord(layout)};
    tr.obs = Eigen::Map<const Vector>(
        pc::env::EncodeObservation({from.t, from.p, goal}, d).data(), 4);
    tr.next_obs = Eigen::Map<const Vector>(
        pc::env::EncodeObservation({to.t, to.p, goal}, d).data(), 4);
    tr.action = pc::env::ActionFromIndex(i % 4);
    tr.goal = goal;
    tr.achieved = to;
    episode.push_back(tr);
  }
  std::mt19937_64 rng(11);
  int count = 0;
  const auto out = pc::agents::HerRelabel(episode, 0.05, rng, &count);
  int relabeled = 0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto& tr = out[i];
    if (tr.reward == 0.0) {
      o.Check(!tr.done && tr.goal == goal, "untouched tuple changed");
      continue;
    }
    ++relabeled;
    const auto achieved = pc::env::EncodeObservation(
        {episode[i].achieved.t, episode[i].achieved.p, episode[i].achieved}, d);
    o.Check(tr.reward == 1.0 && tr.done && tr.goal == episode[i].achieved &&
                std::abs(tr.next_obs[2] - achieved[2]) < 1e-15 &&
                std::abs(tr.next_obs[3] - achieved[3]) < 1e-15,
            "relabeled tuple " + std::to_string(i));
  }
  const double fraction = static_cast<double>(relabeled) / kTuples;
  o.Check(relabeled == count, "reported count differs from observed");
  o.Check(std::abs(fraction - 0.05) <= 0.0065, Format("fraction %.4f", fraction));
  o.detail = Format("relabeled %.4f of 10000 (bound 0.05 +/- 0.0065)", fraction);
  return o;
}

// ---- scaled trend -----------------------------------------------------------

// Results of one (agent, mode) cell on the scaled hard scenario, per seed.
using Curves = std::map<std::uint64_t, std::vector<pc::harness::EvalPoint>>;

constexpr int kTrendEpisodes = 3'000;
constexpr int kTrendInterval = 50;
constexpr int kTrendSeeds = 5;
constexpr int kFinalWindow = 10;  // eval points averaged for "final" steps

pc::harness::ExperimentConfig TrendConfig(const std::string& agent, Mode mode) {
  pc::harness::ExperimentConfig c;
  c.environment = pc::env::EnvironmentConfig::Scaled16();
  c.agents = {agent};
  c.scenarios = {"hard"};
  c.modes = {mode};
  c.episodes = kTrendEpisodes;
  c.eval_interval = kTrendInterval;
  c.seeds = pc::harness::ExperimentConfig::DefaultSeeds(kTrendSeeds);
  c.agent.epsilon.cadence = pc::agents::EpsilonCadence::kPerEpisode;
  c.jobs = 1;
  return c;
}

Curves RunCell(const std::string& agent, Mode mode) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto result = pc::harness::RunExperiment(TrendConfig(agent, mode));
  Curves curves;
  for (const auto& row : result.raw) curves[row.seed].push_back(row);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("  [trend] %s/%s: %zu seeds, %zu failures, %.0f s\n", agent.c_str(),
              std::string(pc::env::ModeName(mode)).c_str(), curves.size(),
              result.failures.size(), secs);
  std::fflush(stdout);
  return curves;
}

double Median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  if (n == 0) return std::nan("");
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<double> FinalSteps(const Curves& curves) {
  std::vector<double> out;
  for (const auto& [seed, rows] : curves) {
    double sum = 0.0;
    const int n = std::min<int>(kFinalWindow, static_cast<int>(rows.size()));
    for (int i = static_cast<int>(rows.size()) - n; i < static_cast<int>(rows.size()); ++i) {
      sum += rows[i].steps;
    }
    out.push_back(sum / n);
  }
  return out;
}

// First eval episode at which the trailing mean of five eval points is at
// most `threshold`; runs that never get there count as budget + interval.
std::vector<double> EpisodesToReach(const Curves& curves, double threshold) {
  std::vector<double> out;
  for (const auto& [seed, rows] : curves) {
    double reached = kTrendEpisodes + kTrendInterval;
    for (std::size_t i = 4; i < rows.size(); ++i) {
      double sum = 0.0;
      for (std::size_t j = i - 4; j <= i; ++j) sum += rows[j].steps;
      if (sum / 5.0 <= threshold) {
        reached = rows[i].episode;
        break;
      }
    }
    out.push_back(reached);
  }
  return out;
}

// Sign test over matched (seed, eval point) pairs with episode >= `from`:
// one-sided p-value that `better` has fewer steps than `worse`.
double PairedSignTest(const Curves& better, const Curves& worse, int from,
                      int* wins_out = nullptr, int* losses_out = nullptr) {
  int wins = 0;
  int losses = 0;
  for (const auto& [seed, rows] : better) {
    const auto it = worse.find(seed);
    if (it == worse.end()) continue;
    for (std::size_t i = 0; i < rows.size() && i < it->second.size(); ++i) {
      if (rows[i].episode < from) continue;
      if (rows[i].steps < it->second[i].steps) ++wins;
      if (rows[i].steps > it->second[i].steps) ++losses;
    }
  }
  if (wins_out) *wins_out = wins;
  if (losses_out) *losses_out = losses;
  return pc::harness::SignTestPValue(wins, losses);
}

std::string Join(const std::vector<double>& v) {
  std::ostringstream s;
  s << '[';
  for (std::size_t i = 0; i < v.size(); ++i) s << (i ? " " : "") << v[i];
  s << ']';
  return s.str();
}

struct TrendData {
  Curves dqn_markov, dqn_semi, drqn_semi, her_semi;
  int optimal_markov = 0;
  int optimal_semi = 0;
};

const TrendData& Trend() {
  static const TrendData data = [] {
    TrendData t;
    const PhaseDiagram d = PhaseDiagram::Scaled16();
    t.optimal_markov = pc::oracle::OptimalSteps(
        d, pc::env::FindScenario(pc::env::Scaled16Scenarios(Mode::kMarkov), "hard"));
    t.optimal_semi = pc::oracle::OptimalSteps(
        d, pc::env::FindScenario(pc::env::Scaled16Scenarios(Mode::kSemiMarkov), "hard"));
    t.dqn_markov = RunCell("dqn", Mode::kMarkov);
    t.dqn_semi = RunCell("dqn", Mode::kSemiMarkov);
    t.drqn_semi = RunCell("drqn", Mode::kSemiMarkov);
    t.her_semi = RunCell("dqn_her", Mode::kSemiMarkov);
    return t;
  }();
  return data;
}

constexpr double kSignTestAlpha = 0.01;
// First eval point counted once the replay warmup is certainly over.
constexpr int kAfterWarmup = kTrendInterval;
constexpr int kFinalFrom = kTrendEpisodes - (kFinalWindow - 1) * kTrendInterval;

Outcome TrendMarkovVsSemi() {
  Outcome o;
  const TrendData& t = Trend();
  const double markov = Median(FinalSteps(t.dqn_markov));
  const double semi = Median(FinalSteps(t.dqn_semi));
  int wins = 0, losses = 0;
  const double p = PairedSignTest(t.dqn_markov, t.dqn_semi, kAfterWarmup, &wins, &losses);
  o.Check(markov < 1.5 * t.optimal_markov,
          Format("markov median final %.1f not < %.1f", markov, 1.5 * t.optimal_markov));
  o.Check(semi > 2.0 * t.optimal_semi,
          Format("semi median final %.1f not > %.1f", semi, 2.0 * t.optimal_semi));
  o.Check(p < kSignTestAlpha, Format("markov-vs-semi sign test p = %.3g", p));
  o.detail = "median final markov " + Format("%.1f (< %.1f), semi %.1f (> %.1f); ",
                                             markov, 1.5 * t.optimal_markov, semi,
                                             2.0 * t.optimal_semi) +
             Format("sign test %g/%g p=%.2g; ", wins, losses, p) +
             "per seed markov " + Join(FinalSteps(t.dqn_markov)) + " semi " +
             Join(FinalSteps(t.dqn_semi));
  return o;
}

Outcome TrendDrqnVsDqn() {
  Outcome o;
  const TrendData& t = Trend();
  const double drqn = Median(FinalSteps(t.drqn_semi));
  const double dqn = Median(FinalSteps(t.dqn_semi));
  int wins = 0, losses = 0;
  const double p = PairedSignTest(t.drqn_semi, t.dqn_semi, kFinalFrom, &wins, &losses);
  o.Check(drqn < dqn, Format("drqn median final %.1f not < dqn %.1f", drqn, dqn));
  o.Check(p < kSignTestAlpha, Format("final-window sign test p = %.3g", p));
  o.detail = Format("median final drqn %.1f vs dqn %.1f; sign test %g/%g ", drqn, dqn,
                    wins, losses) +
             Format("p=%.2g; per seed drqn ", p) + Join(FinalSteps(t.drqn_semi));
  return o;
}

Outcome TrendHerSpeedup() {
  Outcome o;
  const TrendData& t = Trend();
  const double threshold = 2.0 * t.optimal_semi;
  const auto her = EpisodesToReach(t.her_semi, threshold);
  const auto dqn = EpisodesToReach(t.dqn_semi, threshold);
  const double her_median = Median(her);
  const double dqn_median = Median(dqn);
  int wins = 0, losses = 0;
  for (std::size_t i = 0; i < her.size() && i < dqn.size(); ++i) {
    if (her[i] < dqn[i]) ++wins;
    if (her[i] > dqn[i]) ++losses;
  }
  o.Check(her_median <= 0.75 * dqn_median,
          Format("median episodes-to-%.0f with HER %.0f, without %.0f", threshold,
                 her_median, dqn_median));
  o.Check(wins > losses, Format("HER faster on %g seeds, slower on %g", wins, losses));
  o.detail = Format("median episodes to <= %.0f steps: HER %.0f vs DQN %.0f", threshold,
                    her_median, dqn_median) +
             " (censored at " + std::to_string(kTrendEpisodes + kTrendInterval) +
             "); per seed HER " + Join(her) + " DQN " + Join(dqn);
  return o;
}

// ---- determinism ------------------------------------------------------------

std::string ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome SweepDeterminism() {
  Outcome o;
  pc::harness::ExperimentConfig c;
  c.environment = pc::env::EnvironmentConfig::Scaled16();
  c.episodes = 60;
  c.eval_interval = 20;
  c.eval_step_cap = 300;
  c.train_step_cap = 300;
  c.seeds = {0, 1};
  c.agent.warmup = 100;
  c.dqn_hidden = 8;
  c.drqn_hidden = 8;
  const auto dir = std::filesystem::temp_directory_path() / "phasechange_acceptance";
  std::filesystem::remove_all(dir);
  std::vector<std::string> raw;
  for (int run = 0; run < 2; ++run) {
    c.jobs = run + 1;
    const auto files =
        pc::harness::WriteResults(pc::harness::RunExperiment(c), dir / std::to_string(run));
    raw.push_back(ReadFile(files.raw));
  }
  std::filesystem::remove_all(dir);
  o.Check(!raw[0].empty() && raw[0] == raw[1], "raw CSVs differ");
  o.detail = std::to_string(raw[0].size()) + " bytes, full matrix, 2 seeds";
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria = {
      {"environment-conformance", 1.0, EnvironmentConformance},
      {"oracle-values", 1.0, OracleValues},
      {"oracle-cross-check", 30.0, OracleCrossCheck},
      {"gradient-verification", 10.0, GradientVerification},
      {"tabular-solvability", 60.0, TabularSolvability},
      {"her-statistics", 1.0, HerStatistics},
      {"trend-markov-vs-semi", 0.0, TrendMarkovVsSemi},
      {"trend-drqn-vs-dqn", 0.0, TrendDrqnVsDqn},
      {"trend-her-speedup", 0.0, TrendHerSpeedup},
      {"sweep-determinism", 0.0, SweepDeterminism},
  };
  const std::set<std::string> only(argv + 1, argv + argc);
  for (const auto& name : only) {
    if (std::none_of(criteria.begin(), criteria.end(),
                     [&](const Criterion& c) { return c.name == name; })) {
      std::fprintf(stderr, "unknown criterion: %s\n", name.c_str());
      return 2;
    }
  }
  int failed = 0;
  for (const Criterion& c : criteria) {
    if (!only.empty() && !only.contains(c.name)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.Check(false, std::string("exception: ") + e.what());
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.budget_seconds > 0.0) {
      o.Check(secs < c.budget_seconds,
              Format("took %.2f s, budget %.0f s", secs, c.budget_seconds));
    }
    std::printf("%s %s (%.2f s): %s\n", o.pass ? "PASS" : "FAIL", c.name.c_str(), secs,
                o.detail.c_str());
    for (const auto& f : o.failures) std::printf("    %s\n", f.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  std::printf("%d criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
