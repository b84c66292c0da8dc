#include <gtest/gtest.h>

#include <map>

#include "femtoq/simulator.hpp"

using namespace femtoq;

namespace {

SimConfig dpcq_config(Paradigm paradigm, std::size_t nf, std::uint64_t iterations, std::uint64_t seed = 3) {
  SimConfig c;
  c.algorithm = Algorithm::Dpcq;
  c.paradigm = paradigm;
  c.initial_femtos = nf;
  c.iterations = iterations;
  c.seed = seed;
  c.log_stride = 1;
  return c;
}

// Macro user 50 m from the MBS, one femtocell whose user sits 100 m from the
// MBS: the macro link is far above 6 bits/s/Hz and the femto link is drowned
// by macro interference, so R1 rewards start out negative.
NetworkTopology strong_macro_topology() {
  NetworkTopology t;
  t.macro_user = {50.0, 0.0};
  t.fbs = {{0.0, 180.0}};
  t.femto_users = {{0.0, 100.0}};
  return t;
}

}  // namespace

TEST(EpsilonSchedule, Examples) {
  SimConfig c;
  c.iterations = 60000;
  c.epsilon_off_at = 50000;
  EXPECT_DOUBLE_EQ(epsilon_schedule(0, c), 0.1);
  EXPECT_DOUBLE_EQ(epsilon_schedule(49999, c), 0.1);
  EXPECT_DOUBLE_EQ(epsilon_schedule(50000, c), 0.0);
  c.epsilon_off_at.reset();
  EXPECT_DOUBLE_EQ(epsilon_schedule(123456, c), 0.1);
}

TEST(Convergence, Window) {
  auto rec = [](std::vector<double> c) {
    IterationRecord r;
    r.macro_capacity = std::move(c);
    return r;
  };
  std::vector<IterationRecord> at_target(5, rec({6.0, 6.0}));
  EXPECT_TRUE(check_convergence(at_target, 6.0, 1.0, 5));
  auto one_out = at_target;
  one_out[3] = rec({6.0, 7.5});
  EXPECT_FALSE(check_convergence(one_out, 6.0, 1.0, 5));
  EXPECT_TRUE(check_convergence(one_out, 6.0, 1.0, 1));
  auto boundary = at_target;
  boundary[4] = rec({7.0, 5.0});
  EXPECT_TRUE(check_convergence(boundary, 6.0, 1.0, 5));
  EXPECT_FALSE(check_convergence(at_target, 6.0, 1.0, 6));  // not enough records
  EXPECT_THROW(check_convergence(at_target, 6.0, 1.0, 0), ConfigError);
}

TEST(Convergence, AggregateScope) {
  IterationRecord r;
  r.macro_capacity = {3.0, 3.5, 4.0};
  std::vector<IterationRecord> t{r};
  EXPECT_TRUE(check_convergence(t, 10.0, 1.0, 1, TargetScope::Aggregate));
  EXPECT_FALSE(check_convergence(t, 3.5, 1.0, 1, TargetScope::Aggregate));
  EXPECT_TRUE(check_convergence(t, 3.5, 1.0, 1, TargetScope::PerSubcarrier));
}

TEST(Convergence, Reconvergence) {
  std::vector<IterationRecord> trace;
  for (std::uint64_t i = 0; i < 100; ++i) {
    IterationRecord r;
    r.iteration = i * 10;
    r.macro_capacity = {(i >= 50 && i < 53) ? 9.0 : 6.0};
    trace.push_back(r);
  }
  EXPECT_EQ(reconvergence_time(trace, 0, 6.0, 1.0, 5), 0U);
  EXPECT_EQ(reconvergence_time(trace, 500, 6.0, 1.0, 5), 30U);
  EXPECT_EQ(reconvergence_time(trace, 505, 6.0, 1.0, 5), 25U);
  EXPECT_FALSE(reconvergence_time(trace, 500, 20.0, 1.0, 5).has_value());
}

TEST(Config, DefaultsAndValidation) {
  SimConfig c;
  EXPECT_EQ(c.subcarrier_count(), 6U);
  c.algorithm = Algorithm::Pdpcq;
  EXPECT_EQ(c.subcarrier_count(), 3U);
  EXPECT_DOUBLE_EQ(c.learning.alpha, 0.5);
  EXPECT_DOUBLE_EQ(c.learning.gamma, 0.9);
  EXPECT_DOUBLE_EQ(c.learning.epsilon, 0.1);
  EXPECT_DOUBLE_EQ(c.noise_w, 1e-7);

  SimConfig bad;
  bad.iterations = 10;
  bad.epsilon_off_at = 11;
  EXPECT_THROW(bad.validate(), ConfigError);
  SimConfig big;
  big.algorithm = Algorithm::Cpcq;
  big.initial_femtos = 5;
  EXPECT_THROW(big.validate(), ConfigError);
}

TEST(Schedule, Validation) {
  SimConfig c = dpcq_config(Paradigm::Independent, 2, 100);
  EXPECT_NO_THROW((DeploymentSchedule{{{10, 1, InitMode::Scratch}, {20, 2, InitMode::Docitive}}}.validate(c)));
  EXPECT_THROW((DeploymentSchedule{{{20, 1, InitMode::Scratch}, {20, 1, InitMode::Scratch}}}.validate(c)),
               ConfigError);
  EXPECT_THROW((DeploymentSchedule{{{10, 0, InitMode::Scratch}}}.validate(c)), ConfigError);
  EXPECT_THROW((DeploymentSchedule{{{100, 1, InitMode::Scratch}}}.validate(c)), ConfigError);
}

TEST(Run, ZeroIterationsCpcq) {
  SimConfig c;
  c.algorithm = Algorithm::Cpcq;
  c.subcarriers = 1;
  c.initial_femtos = 1;
  c.iterations = 0;
  const auto r = run(c);
  EXPECT_TRUE(r.trace.empty());
  EXPECT_EQ(r.final_state.iteration(), 0U);
  EXPECT_EQ(r.final_state.controller().table, QTable(2, 3));
  EXPECT_EQ(r.total_messages, 0U);
}

TEST(Run, Deterministic) {
  for (auto alg : {Algorithm::Dpcq, Algorithm::Pdpcq, Algorithm::Cpcq}) {
    SimConfig c = dpcq_config(Paradigm::Cooperative, 2, 500, 11);
    c.algorithm = alg;
    const auto a = run(c);
    const auto b = run(c);
    ASSERT_EQ(a.trace.size(), b.trace.size());
    for (std::size_t i = 0; i < a.trace.size(); ++i) {
      EXPECT_EQ(a.trace[i].macro_capacity, b.trace[i].macro_capacity);
      EXPECT_EQ(a.trace[i].aggregate_femto_capacity, b.trace[i].aggregate_femto_capacity);
      EXPECT_EQ(a.trace[i].mean_reward, b.trace[i].mean_reward);
    }
  }
}

TEST(Run, LogStride) {
  SimConfig c = dpcq_config(Paradigm::Independent, 1, 1000);
  c.log_stride = 100;
  const auto r = run(c);
  ASSERT_EQ(r.trace.size(), 10U);
  EXPECT_EQ(r.trace[0].iteration, 0U);
  EXPECT_EQ(r.trace[9].iteration, 900U);
}

TEST(Run, InitialPowersAreMinimum) {
  SimConfig c = dpcq_config(Paradigm::Independent, 3, 0);
  auto [topo, rng] = sample_topology(c);
  const Simulation sim(c, topo, rng);
  for (const auto& row : sim.allocation_dbm()) {
    for (double p : row) EXPECT_NEAR(p, -20.0, 1e-12);
  }
  c.algorithm = Algorithm::Pdpcq;
  const Simulation p(c, topo, rng);
  for (const auto& row : p.allocation_dbm()) {
    for (double v : row) EXPECT_NEAR(v, 0.0, 1e-12);
  }
}

TEST(Messages, CooperativeCounts) {
  const auto r = run(dpcq_config(Paradigm::Cooperative, 5, 50));
  for (const auto& rec : r.trace) EXPECT_EQ(rec.messages, 20U);
  EXPECT_EQ(r.total_messages, 50U * 20U);

  const auto il = run(dpcq_config(Paradigm::Independent, 5, 50));
  for (const auto& rec : il.trace) EXPECT_EQ(rec.messages, 0U);
  EXPECT_EQ(il.total_messages, 0U);
}

TEST(Messages, GrowAfterDeployment) {
  SimConfig c = dpcq_config(Paradigm::Cooperative, 5, 40);
  const auto r = run(c, DeploymentSchedule{{{20, 1, InitMode::Docitive}}});
  for (const auto& rec : r.trace) {
    EXPECT_EQ(rec.n_femto, rec.iteration < 20 ? 5U : 6U);
    EXPECT_EQ(rec.messages, rec.iteration < 20 ? 20U : 30U);
  }
  EXPECT_EQ(r.total_messages, 20U * 20U + 20U * 30U);
}

TEST(Messages, CooperationRadius) {
  SimConfig c = dpcq_config(Paradigm::Cooperative, 2, 3);
  NetworkTopology t;
  t.macro_user = {500.0, 0.0};
  t.fbs = {{0.0, 100.0}, {0.0, 300.0}};
  t.femto_users = {{0.0, 120.0}, {0.0, 280.0}};
  c.cooperation_radius = 150.0;
  Simulation far(c, t);
  EXPECT_EQ(far.step().messages, 0U);
  c.cooperation_radius = 250.0;
  Simulation near(c, t);
  EXPECT_EQ(near.step().messages, 2U);
}

TEST(Deployment, ScratchAndDocitive) {
  SimConfig c = dpcq_config(Paradigm::Cooperative, 3, 0);
  auto [topo, rng] = sample_topology(c);
  Simulation sim(c, topo, rng);
  QTable pattern(kDpcqStateCount, 18);
  pattern.set(0, 4, 0.75);
  pattern.set(3, 1, -1.25);
  for (auto& a : sim.dpcq_agents()) {
    for (auto& t : a.tables) t = pattern;
  }
  sim.deploy_femtocell(InitMode::Docitive);
  for (const auto& t : sim.dpcq_agents().back().tables) EXPECT_EQ(t, pattern);
  sim.deploy_femtocell(InitMode::Scratch);
  for (const auto& t : sim.dpcq_agents().back().tables) EXPECT_EQ(t, QTable(kDpcqStateCount, 18));
  EXPECT_EQ(sim.femto_count(), 5U);
  EXPECT_TRUE(satisfies(sim.topology(), c.bounds));
}

TEST(Deployment, DocitiveAveragesDonors) {
  SimConfig c = dpcq_config(Paradigm::Cooperative, 2, 0);
  c.algorithm = Algorithm::Pdpcq;
  auto [topo, rng] = sample_topology(c);
  Simulation sim(c, topo, rng);
  sim.pdpcq_agents()[0].table.set(1, 2, 1.0);
  sim.pdpcq_agents()[1].table.set(1, 2, 3.0);
  sim.deploy_femtocell(InitMode::Docitive);
  EXPECT_DOUBLE_EQ(sim.pdpcq_agents()[2].table(1, 2), 2.0);
}

TEST(Deployment, CpcqRefuses) {
  SimConfig c;
  c.algorithm = Algorithm::Cpcq;
  c.initial_femtos = 1;
  c.iterations = 10;
  EXPECT_THROW(run(c, DeploymentSchedule{{{5, 1, InitMode::Scratch}}}), ConfigError);
}

TEST(Deployment, AgentCountChangesOnlyAtSchedule) {
  SimConfig c = dpcq_config(Paradigm::Independent, 2, 300);
  const DeploymentSchedule s{{{100, 1, InitMode::Scratch}, {200, 2, InitMode::Docitive}}};
  const auto r = run(c, s);
  for (std::size_t i = 1; i < r.trace.size(); ++i) {
    const auto& prev = r.trace[i - 1];
    const auto& cur = r.trace[i];
    EXPECT_GE(cur.n_femto, prev.n_femto);
    if (cur.n_femto != prev.n_femto) {
      EXPECT_TRUE(cur.iteration == 100 || cur.iteration == 200);
    }
  }
  EXPECT_EQ(r.trace.back().n_femto, 5U);
}

// Actions chosen at iteration t depend only on tables as they stood before t.
TEST(Step, SelectionUsesPreIterationTables) {
  for (auto paradigm : {Paradigm::Independent, Paradigm::Cooperative}) {
    SimConfig c = dpcq_config(paradigm, 4, 2000, 21);
    auto [topo, rng] = sample_topology(c);
    Simulation sim(c, topo, rng);
    for (int t = 0; t < 1500; ++t) sim.step();
    for (int t = 0; t < 50; ++t) {
      const auto before = sim.dpcq_agents();
      sim.step({.learn = true, .epsilon = 0.0});
      const auto& after = sim.dpcq_agents();
      for (std::size_t n = 0; n < after.size(); ++n) {
        for (std::size_t k = 0; k < sim.subcarriers(); ++k) {
          std::vector<double> score(18, 0.0);
          for (std::size_t j = 0; j < after.size(); ++j) {
            if (paradigm == Paradigm::Independent && j != n) continue;
            const auto row = before[j].tables[k].row(after[j].states[k]);
            for (std::size_t a = 0; a < 18; ++a) score[a] += row[a];
          }
          ASSERT_EQ(after[n].actions[k], argmax_lowest(score)) << "agent " << n << " task " << k;
        }
      }
    }
  }
}

TEST(Step, CooperativeExploitAgrees) {
  SimConfig c = dpcq_config(Paradigm::Cooperative, 5, 0, 8);
  auto [topo, rng] = sample_topology(c);
  Simulation sim(c, topo, rng);
  for (int t = 0; t < 2000; ++t) sim.step();
  for (int t = 0; t < 20; ++t) {
    sim.step({.learn = true, .epsilon = 0.0});
    // Every agent sums the same set of rows, so exploit steps agree.
    const auto& agents = sim.dpcq_agents();
    for (std::size_t k = 0; k < sim.subcarriers(); ++k) {
      for (std::size_t n = 1; n < agents.size(); ++n) EXPECT_EQ(agents[n].actions[k], agents[0].actions[k]);
    }
  }
}

TEST(Step, NoLearningLeavesTablesUntouched) {
  SimConfig c = dpcq_config(Paradigm::Independent, 2, 0);
  auto [topo, rng] = sample_topology(c);
  Simulation sim(c, topo, rng);
  for (int t = 0; t < 100; ++t) sim.step();
  const auto before = sim.dpcq_agents();
  for (int t = 0; t < 10; ++t) sim.step({.learn = false, .epsilon = 0.3});
  for (std::size_t n = 0; n < before.size(); ++n) EXPECT_EQ(before[n].tables, sim.dpcq_agents()[n].tables);
}

TEST(Rewards, R0Freezes) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    SimConfig c = dpcq_config(Paradigm::Independent, 1, 0, seed);
    c.subcarriers = 1;
    c.reward = RewardKind::R0;
    c.learning.epsilon = 0.0;
    auto [topo, rng] = sample_topology(c);
    Simulation sim(c, topo, rng);
    std::map<std::size_t, std::size_t> first_action;
    for (int t = 0; t < 2000; ++t) {
      sim.step();
      const auto& a = sim.dpcq_agents()[0];
      const auto [it, inserted] = first_action.emplace(a.states[0], a.actions[0]);
      ASSERT_EQ(it->second, a.actions[0]) << "seed " << seed << " iteration " << t;
    }
  }
}

TEST(Rewards, R1CanAbandonFirstAction) {
  SimConfig c = dpcq_config(Paradigm::Independent, 1, 0);
  c.subcarriers = 1;
  c.learning.epsilon = 0.0;
  Simulation sim(c, strong_macro_topology());
  const auto first = sim.step();
  EXPECT_LT(first.mean_reward, 0.0);
  const std::size_t a0 = sim.dpcq_agents()[0].actions[0];
  bool changed = false;
  for (int t = 0; t < 50 && !changed; ++t) {
    sim.step();
    changed = sim.dpcq_agents()[0].actions[0] != a0;
  }
  EXPECT_TRUE(changed);
}

TEST(Rewards, RecordedRewardsWithinRange) {
  for (auto kind : {RewardKind::R0, RewardKind::R1}) {
    SimConfig c = dpcq_config(Paradigm::Cooperative, 3, 1000);
    c.reward = kind;
    const auto r = run(c);
    for (const auto& rec : r.trace) {
      EXPECT_GE(rec.mean_reward, kind == RewardKind::R1 ? -2.0 : -1.0);
      EXPECT_LE(rec.mean_reward, 1.0);
    }
  }
}

TEST(Target, MacroOffset) {
  SimConfig c;
  c.algorithm = Algorithm::Pdpcq;
  c.initial_femtos = 2;
  c.target_mode = TargetMode::MacroOffset;
  c.target = -2.0;
  auto [topo, rng] = sample_topology(c);
  const Simulation sim(c, topo, rng);
  const auto g = compute_gains(topo, 3);
  const double alone = 3.0 * std::log2(1.0 + g.mbs_to_macro[0] * dbm_to_watts(43.0) / 3.0 / 1e-7);
  EXPECT_NEAR(sim.target(), alone - 2.0, 1e-12);
}
