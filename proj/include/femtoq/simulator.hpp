#pragma once

// Experiment engine. One Simulation owns a topology, its learners and the
// current joint power allocation, and advances them one synchronous iteration
// at a time: observe -> share (CL) -> select -> apply -> evaluate -> reward -> update.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "femtoq/agents.hpp"
#include "femtoq/netmodel.hpp"
#include "femtoq/qcore.hpp"
#include "femtoq/random.hpp"
#include "femtoq/units.hpp"

namespace femtoq {

enum class Algorithm { Dpcq, Pdpcq, Cpcq };
enum class Paradigm { Independent, Cooperative };
enum class InitMode { Scratch, Docitive };
enum class TargetMode { Absolute, MacroOffset };
/// Whether the macro target applies to each subcarrier or to the aggregate.
enum class TargetScope { PerSubcarrier, Aggregate };

struct SimConfig {
  Algorithm algorithm = Algorithm::Dpcq;
  Paradigm paradigm = Paradigm::Independent;
  RewardKind reward = RewardKind::R1;
  std::optional<std::size_t> subcarriers;  // unset: 6 for DPC-Q, 3 otherwise
  std::size_t initial_femtos = 5;
  // Gamma_o for DPC-Q (per subcarrier), beta_o for PDPC-Q / CPC-Q (aggregate).
  double target = 6.0;
  // MacroOffset: the effective target is the macro-alone capacity plus `target`.
  TargetMode target_mode = TargetMode::Absolute;
  double band = 1.0;
  LearningParams learning;
  double noise_w = 1e-7;
  double pmax_macro_dbm = 43.0;
  double pmax_femto_dbm = 15.0;
  double a1_db = 5.0;
  double a2_db = 5.0;
  double path_loss = 2.0;
  std::uint64_t iterations = 0;
  std::optional<std::uint64_t> epsilon_off_at;
  std::uint64_t seed = 1;
  std::uint64_t log_stride = 100;
  double cooperation_radius = std::numeric_limits<double>::infinity();
  MergeRule docitive_merge = MergeRule::Mean;
  double dpcq_min_dbm = -20.0;
  double dpcq_max_dbm = 15.0;
  double dpcq_step_db = 2.0;
  std::vector<double> vector_levels_dbm = default_vector_levels();
  DistanceBounds bounds;

  std::size_t subcarrier_count() const {
    if (subcarriers) return *subcarriers;
    return algorithm == Algorithm::Dpcq ? 6 : 3;
  }

  TargetScope target_scope() const {
    return algorithm == Algorithm::Dpcq ? TargetScope::PerSubcarrier : TargetScope::Aggregate;
  }

  void validate() const {
    learning.validate();
    bounds.validate();
    if (subcarrier_count() == 0) throw ConfigError("subcarriers must be >= 1");
    if (initial_femtos == 0) throw ConfigError("femtocells must be >= 1");
    if (!(band > 0.0)) throw ConfigError("band must be positive");
    if (!(noise_w > 0.0)) throw ConfigError("noise must be positive");
    if (log_stride == 0) throw ConfigError("log_stride must be >= 1");
    if (!(path_loss > 0.0)) throw ConfigError("path_loss must be positive");
    if (epsilon_off_at && *epsilon_off_at > iterations) {
      throw ConfigError("epsilon_off_at (" + std::to_string(*epsilon_off_at) + ") exceeds iterations (" +
                        std::to_string(iterations) + ")");
    }
    if (!(cooperation_radius > 0.0)) throw ConfigError("cooperation_radius must be positive");
    if (vector_levels_dbm.empty()) throw ConfigError("levels_dbm must not be empty");
    if (algorithm == Algorithm::Cpcq && initial_femtos * subcarrier_count() > kCpcqMaxCells) {
      throw ConfigError("CPC-Q action space too large: " +
                        std::to_string(cpcq_raw_cardinality(initial_femtos, subcarrier_count(),
                                                            vector_levels_dbm.size())) +
                        " matrices");
    }
    (void)dpcq_action_set(dpcq_min_dbm, dpcq_max_dbm, dpcq_step_db);
  }
};

struct DeploymentEvent {
  std::uint64_t iteration = 0;
  std::size_t add_count = 1;
  InitMode mode = InitMode::Scratch;
};

struct DeploymentSchedule {
  std::vector<DeploymentEvent> events;

  void validate(const SimConfig& config) const {
    for (std::size_t i = 0; i < events.size(); ++i) {
      if (events[i].add_count == 0) throw ConfigError("deployment add_count must be >= 1");
      if (i > 0 && events[i].iteration <= events[i - 1].iteration) {
        throw ConfigError("deployment iterations must be strictly increasing");
      }
      if (events[i].iteration >= config.iterations) {
        throw ConfigError("deployment at iteration " + std::to_string(events[i].iteration) +
                          " lies beyond the run (" + std::to_string(config.iterations) + " iterations)");
      }
    }
    if (!events.empty() && config.algorithm == Algorithm::Cpcq) {
      throw ConfigError("CPC-Q has a fixed joint action space; deployments are not supported");
    }
  }
};

struct IterationRecord {
  std::uint64_t iteration = 0;
  std::size_t n_femto = 0;
  std::vector<double> macro_capacity;  // [k]
  double aggregate_femto_capacity = 0.0;
  double mean_reward = 0.0;  // mean over agents of the per-agent mean over tasks
  std::uint64_t messages = 0;
  double epsilon = 0.0;
  bool converged = false;  // macro capacity inside target +- band on this iteration
};

inline double epsilon_schedule(std::uint64_t iteration, const SimConfig& config) {
  if (config.epsilon_off_at && iteration >= *config.epsilon_off_at) return 0.0;
  return config.learning.epsilon;
}

inline bool in_band(const IterationRecord& r, double target, double band, TargetScope scope) {
  auto inside = [&](double c) { return c >= target - band && c <= target + band; };
  if (scope == TargetScope::Aggregate) {
    double sum = 0.0;
    for (double c : r.macro_capacity) sum += c;
    return inside(sum);
  }
  return std::all_of(r.macro_capacity.begin(), r.macro_capacity.end(), inside);
}

/// True iff the last `window_len` records are all inside the closed band.
inline bool check_convergence(std::span<const IterationRecord> trace, double target, double band,
                              std::size_t window_len, TargetScope scope = TargetScope::PerSubcarrier) {
  if (window_len == 0) throw ConfigError("convergence window must be >= 1");
  if (trace.size() < window_len) return false;
  const auto window = trace.subspan(trace.size() - window_len);
  return std::all_of(window.begin(), window.end(),
                     [&](const IterationRecord& r) { return in_band(r, target, band, scope); });
}

/// Iterations from `deployment_iteration` until the first full in-band window
/// of `window_len` records starts; nullopt if that never happens in `trace`.
inline std::optional<std::uint64_t> reconvergence_time(std::span<const IterationRecord> trace,
                                                       std::uint64_t deployment_iteration, double target,
                                                       double band, std::size_t window_len,
                                                       TargetScope scope = TargetScope::PerSubcarrier) {
  if (window_len == 0) throw ConfigError("convergence window must be >= 1");
  const auto first = std::find_if(trace.begin(), trace.end(), [&](const IterationRecord& r) {
    return r.iteration >= deployment_iteration;
  });
  std::size_t run = 0;  // consecutive in-band records ending at i
  for (auto it = first; it != trace.end(); ++it) {
    run = in_band(*it, target, band, scope) ? run + 1 : 0;
    if (run == window_len) return (it - static_cast<std::ptrdiff_t>(window_len - 1))->iteration - deployment_iteration;
  }
  return std::nullopt;
}

struct StepOptions {
  bool learn = true;
  std::optional<double> epsilon;  // overrides the schedule when set
};

class Simulation {
 public:
  Simulation(const SimConfig& config, NetworkTopology topology)
      : Simulation(config, std::move(topology), Rng(config.seed).split()) {}

  // `topology_rng` drives later deployments; action draws use a stream derived from the seed.
  Simulation(SimConfig config, NetworkTopology topology, Rng topology_rng)
      : config_(std::move(config)), topology_(std::move(topology)), topology_rng_(topology_rng) {
    config_.validate();
    Rng seeder(config_.seed ^ 0x5eed5eed5eedULL);
    action_rng_ = seeder.split();
    subcarriers_ = config_.subcarrier_count();
    topology_.path_loss_exponent = config_.path_loss;
    if (topology_.femto_count() == 0) throw ConfigError("simulation needs at least one femtocell");
    gains_ = compute_gains(topology_, subcarriers_);
    alloc_.macro_w = macro_equal_split(config_.pmax_macro_dbm, subcarriers_);

    switch (config_.algorithm) {
      case Algorithm::Dpcq:
        scalar_levels_ = dpcq_action_set(config_.dpcq_min_dbm, config_.dpcq_max_dbm, config_.dpcq_step_db);
        break;
      case Algorithm::Pdpcq:
        vectors_ = pdpcq_action_set(subcarriers_, config_.vector_levels_dbm, config_.pmax_femto_dbm);
        break;
      case Algorithm::Cpcq:
        controller_ = CpcqController(topology_.femto_count(), subcarriers_, config_.vector_levels_dbm,
                                     config_.pmax_femto_dbm);
        break;
    }
    for (std::size_t n = 0; n < topology_.femto_count(); ++n) add_learner(InitMode::Scratch);
    apply_actions();
    report_ = evaluate(gains_, alloc_, config_.noise_w);

    const double macro_alone =
        std::log2(1.0 + gains_.mbs_to_macro[0] * alloc_.macro_w[0] / config_.noise_w);
    const double alone = config_.target_scope() == TargetScope::Aggregate
                             ? macro_alone * static_cast<double>(subcarriers_)
                             : macro_alone;
    target_ = config_.target_mode == TargetMode::MacroOffset ? alone + config_.target : config_.target;
  }

  const SimConfig& config() const { return config_; }
  const NetworkTopology& topology() const { return topology_; }
  const ChannelGains& gains() const { return gains_; }
  const PowerAllocation& allocation() const { return alloc_; }
  const CapacityReport& report() const { return report_; }
  std::size_t femto_count() const { return topology_.femto_count(); }
  std::size_t subcarriers() const { return subcarriers_; }
  double target() const { return target_; }
  std::uint64_t iteration() const { return iteration_; }
  std::uint64_t total_messages() const { return total_messages_; }

  const std::vector<DpcqAgent>& dpcq_agents() const { return dpcq_; }
  std::vector<DpcqAgent>& dpcq_agents() { return dpcq_; }
  const std::vector<PdpcqAgent>& pdpcq_agents() const { return pdpcq_; }
  std::vector<PdpcqAgent>& pdpcq_agents() { return pdpcq_; }
  const CpcqController& controller() const { return controller_; }
  CpcqController& controller() { return controller_; }
  const std::vector<double>& scalar_levels() const { return scalar_levels_; }
  const std::vector<std::vector<double>>& power_vector_set() const { return vectors_; }

  /// Current joint allocation in dBm, [femto][k].
  std::vector<std::vector<double>> allocation_dbm() const {
    std::vector<std::vector<double>> out;
    for (const auto& row : alloc_.femto_w) {
      std::vector<double> r;
      for (double w : row) r.push_back(watts_to_dbm(w));
      out.push_back(std::move(r));
    }
    return out;
  }

  /// Current action indices of every learner, flattened in a fixed order.
  std::vector<std::size_t> joint_action() const {
    std::vector<std::size_t> out;
    switch (config_.algorithm) {
      case Algorithm::Dpcq:
        for (const auto& a : dpcq_) out.insert(out.end(), a.actions.begin(), a.actions.end());
        break;
      case Algorithm::Pdpcq:
        for (const auto& a : pdpcq_) out.push_back(a.action);
        break;
      case Algorithm::Cpcq:
        out.push_back(controller_.action);
        break;
    }
    return out;
  }

  /// Puts every femtocell back on the cold-start action (minimum power).
  void reset_powers() {
    for (auto& a : dpcq_) std::fill(a.actions.begin(), a.actions.end(), 0);
    for (auto& a : pdpcq_) a.action = 0;
    controller_.action = 0;
    apply_actions();
    report_ = evaluate(gains_, alloc_, config_.noise_w);
  }

  /// Adds a femtocell at a sampled constraint-satisfying position.
  void deploy_femtocell(InitMode mode) {
    if (config_.algorithm == Algorithm::Cpcq) {
      throw ConfigError("CPC-Q has a fixed joint action space; deployments are not supported");
    }
    add_femtocell(topology_, config_.bounds, topology_rng_);
    on_topology_grown(mode);
  }

  /// Adds a femtocell at explicit positions (no constraint check).
  void deploy_femtocell_at(Point fbs, Point user, InitMode mode) {
    if (config_.algorithm == Algorithm::Cpcq) {
      throw ConfigError("CPC-Q has a fixed joint action space; deployments are not supported");
    }
    topology_.fbs.push_back(fbs);
    topology_.femto_users.push_back(user);
    on_topology_grown(mode);
  }

  IterationRecord step(const StepOptions& options = {}) {
    LearningParams params = config_.learning;
    params.epsilon = options.epsilon.value_or(epsilon_schedule(iteration_, config_));

    observe();
    const std::uint64_t messages = select(params);
    apply_actions();
    report_ = evaluate(gains_, alloc_, config_.noise_w);
    const double mean_reward = reward_and_update(params, options.learn);

    IterationRecord rec;
    rec.iteration = iteration_;
    rec.n_femto = femto_count();
    rec.macro_capacity = report_.macro_capacity;
    rec.aggregate_femto_capacity = report_.total_femto;
    rec.mean_reward = mean_reward;
    rec.messages = messages;
    rec.epsilon = params.epsilon;
    rec.converged = in_band(rec, target_, config_.band, config_.target_scope());
    total_messages_ += messages;
    ++iteration_;
    return rec;
  }

 private:
  bool cooperative() const {
    return config_.paradigm == Paradigm::Cooperative && config_.algorithm != Algorithm::Cpcq;
  }

  bool in_range(std::size_t i, std::size_t j) const {
    return distance(topology_.fbs[i], topology_.fbs[j]) <= config_.cooperation_radius;
  }

  void add_learner(InitMode mode) {
    const std::size_t id = (config_.algorithm == Algorithm::Dpcq) ? dpcq_.size() : pdpcq_.size();
    auto donors_of = [&](auto table_of) {
      std::vector<QTable> donors;
      if (mode == InitMode::Docitive) {
        for (std::size_t j = 0; j < id; ++j) {
          if (in_range(id, j)) donors.push_back(table_of(j));
        }
      }
      return donors;
    };
    switch (config_.algorithm) {
      case Algorithm::Dpcq: {
        DpcqAgent agent(id, subcarriers_, scalar_levels_.size());
        for (std::size_t k = 0; k < subcarriers_; ++k) {
          const auto donors = donors_of([&](std::size_t j) { return dpcq_[j].tables[k]; });
          agent.tables[k] = docitive_init(donors, kDpcqStateCount, scalar_levels_.size(), config_.docitive_merge);
        }
        dpcq_.push_back(std::move(agent));
        break;
      }
      case Algorithm::Pdpcq: {
        PdpcqAgent agent(id, vectors_.size());
        const auto donors = donors_of([&](std::size_t j) { return pdpcq_[j].table; });
        agent.table = docitive_init(donors, 2, vectors_.size(), config_.docitive_merge);
        pdpcq_.push_back(std::move(agent));
        break;
      }
      case Algorithm::Cpcq:
        break;
    }
  }

  void on_topology_grown(InitMode mode) {
    gains_ = compute_gains(topology_, subcarriers_);
    alloc_.femto_w.emplace_back(subcarriers_, 0.0);
    add_learner(mode);
    apply_actions();
    report_ = evaluate(gains_, alloc_, config_.noise_w);
  }

  void apply_actions() {
    alloc_.femto_w.resize(femto_count());
    for (std::size_t n = 0; n < femto_count(); ++n) {
      auto& row = alloc_.femto_w[n];
      row.assign(subcarriers_, 0.0);
      for (std::size_t k = 0; k < subcarriers_; ++k) {
        double dbm = 0.0;
        switch (config_.algorithm) {
          case Algorithm::Dpcq: dbm = scalar_levels_[dpcq_[n].actions[k]]; break;
          case Algorithm::Pdpcq: dbm = vectors_[pdpcq_[n].action][k]; break;
          case Algorithm::Cpcq: dbm = controller_.space.row(controller_.action, n)[k]; break;
        }
        row[k] = dbm_to_watts(dbm);
      }
    }
  }

  // States from the currently applied powers and their capacities.
  void observe() {
    switch (config_.algorithm) {
      case Algorithm::Dpcq:
        for (std::size_t n = 0; n < dpcq_.size(); ++n) {
          const double total = alloc_.femto_total_w(n);
          for (std::size_t k = 0; k < subcarriers_; ++k) {
            dpcq_[n].states[k] = dpcq_encode_state(report_.macro_capacity[k], total, target_,
                                                   config_.pmax_femto_dbm, config_.a1_db, config_.a2_db)
                                     .index();
          }
        }
        break;
      case Algorithm::Pdpcq:
        for (auto& a : pdpcq_) a.state = pdpcq_encode_state(report_.macro_aggregate, target_);
        break;
      case Algorithm::Cpcq:
        controller_.state = pdpcq_encode_state(report_.macro_aggregate, target_);
        break;
    }
  }

  // Chooses every learner's next action from tables as they stood at the start
  // of the iteration. Returns the number of messages exchanged.
  std::uint64_t select(const LearningParams& params) {
    if (config_.algorithm == Algorithm::Cpcq) {
      controller_.action = select_egreedy(controller_.table, controller_.state, params, action_rng_);
      return 0;
    }
    const std::size_t n = femto_count();
    if (!cooperative()) {
      for (std::size_t i = 0; i < n; ++i) {
        if (config_.algorithm == Algorithm::Dpcq) {
          for (std::size_t k = 0; k < subcarriers_; ++k) {
            dpcq_[i].actions[k] = select_egreedy(dpcq_[i].tables[k], dpcq_[i].states[k], params, action_rng_);
          }
        } else {
          pdpcq_[i].action = select_egreedy(pdpcq_[i].table, pdpcq_[i].state, params, action_rng_);
        }
      }
      return 0;
    }

    std::vector<AgentView> views;
    views.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (config_.algorithm == Algorithm::Dpcq) {
        views.push_back({i, dpcq_[i].tables, dpcq_[i].states});
      } else {
        views.push_back({i, std::span<const QTable>(&pdpcq_[i].table, 1),
                         std::span<const std::size_t>(&pdpcq_[i].state, 1)});
      }
    }
    const auto round = broadcast_rows(std::span<const AgentView>(views),
                                      [this](std::size_t i, std::size_t j) { return in_range(i, j); });
    for (std::size_t i = 0; i < n; ++i) {
      if (config_.algorithm == Algorithm::Dpcq) {
        for (std::size_t k = 0; k < subcarriers_; ++k) {
          dpcq_[i].actions[k] = select_cooperative(round.received[i][k], params, action_rng_);
        }
      } else {
        pdpcq_[i].action = select_cooperative(round.received[i][0], params, action_rng_);
      }
    }
    return round.messages;
  }

  static void check_reward(double r, double lo, double hi) {
    if (!(r >= lo && r <= hi)) {
      throw std::logic_error("reward " + std::to_string(r) + " outside [" + std::to_string(lo) + ", " +
                             std::to_string(hi) + "]");
    }
  }

  // Rewards for the applied joint action, next-state observation and Q-updates.
  // Returns the mean per-agent reward.
  double reward_and_update(const LearningParams& params, bool learn) {
    const double budget_dbm = config_.pmax_femto_dbm;
    switch (config_.algorithm) {
      case Algorithm::Dpcq: {
        double sum = 0.0;
        for (std::size_t n = 0; n < dpcq_.size(); ++n) {
          auto& agent = dpcq_[n];
          const double total_w = alloc_.femto_total_w(n);
          const double total_dbm = watts_to_dbm(total_w);
          double agent_sum = 0.0;
          for (std::size_t k = 0; k < subcarriers_; ++k) {
            const double r = dpcq_reward(config_.reward, report_.macro_capacity[k], report_.femto_capacity[n][k],
                                         total_dbm, target_, budget_dbm);
            if (total_dbm <= budget_dbm) {
              config_.reward == RewardKind::R1 ? check_reward(r, -1.0, 1.0) : check_reward(r, 0.0, 1.0);
            }
            agent_sum += r;
            if (learn) {
              const auto next = dpcq_encode_state(report_.macro_capacity[k], total_w, target_, budget_dbm,
                                                  config_.a1_db, config_.a2_db);
              q_update(agent.tables[k], agent.states[k], agent.actions[k], r, next.index(), params);
            }
          }
          sum += agent_sum / static_cast<double>(subcarriers_);
        }
        return sum / static_cast<double>(dpcq_.size());
      }
      case Algorithm::Pdpcq: {
        double sum = 0.0;
        const std::size_t next = pdpcq_encode_state(report_.macro_aggregate, target_);
        for (std::size_t n = 0; n < pdpcq_.size(); ++n) {
          const double r = pdpcq_reward(report_.macro_aggregate, report_.femto_aggregate[n], target_);
          check_reward(r, -1.0, 1.0);
          sum += r;
          if (learn) q_update(pdpcq_[n].table, pdpcq_[n].state, pdpcq_[n].action, r, next, params);
        }
        return sum / static_cast<double>(pdpcq_.size());
      }
      case Algorithm::Cpcq: {
        const double r = cpcq_reward(report_.macro_aggregate, report_.total_femto, target_);
        check_reward(r, -1.0, 1.0);
        if (learn) {
          const std::size_t next = pdpcq_encode_state(report_.macro_aggregate, target_);
          q_update(controller_.table, controller_.state, controller_.action, r, next, params);
        }
        return r;
      }
    }
    return 0.0;
  }

  SimConfig config_;
  NetworkTopology topology_;
  Rng topology_rng_;
  Rng action_rng_;
  std::size_t subcarriers_ = 0;
  ChannelGains gains_;
  PowerAllocation alloc_;
  CapacityReport report_;
  double target_ = 0.0;
  std::uint64_t iteration_ = 0;
  std::uint64_t total_messages_ = 0;

  std::vector<double> scalar_levels_;
  std::vector<std::vector<double>> vectors_;
  std::vector<DpcqAgent> dpcq_;
  std::vector<PdpcqAgent> pdpcq_;
  CpcqController controller_;
};

struct RunResult {
  std::vector<IterationRecord> trace;
  std::uint64_t total_messages = 0;
  double target = 0.0;
  NetworkTopology initial_topology;
  Simulation final_state;
};

/// Samples the initial topology for `config` from its seed. Returns the topology
/// and the stream that later deployments continue from.
inline std::pair<NetworkTopology, Rng> sample_topology(const SimConfig& config) {
  Rng rng(config.seed);
  Rng topo_rng = rng.split();
  NetworkTopology topo = place_network(config.bounds, config.initial_femtos, topo_rng, config.path_loss);
  return {std::move(topo), topo_rng};
}

/// Executes `config.iterations` iterations, firing deployments before the
/// iteration they are scheduled at, and logs every `log_stride`-th record.
inline RunResult run(const SimConfig& config, const DeploymentSchedule& schedule, NetworkTopology topology,
                     Rng topology_rng) {
  config.validate();
  schedule.validate(config);
  NetworkTopology initial = topology;
  Simulation sim(config, std::move(topology), topology_rng);
  std::vector<IterationRecord> trace;
  std::size_t next_event = 0;
  for (std::uint64_t t = 0; t < config.iterations; ++t) {
    while (next_event < schedule.events.size() && schedule.events[next_event].iteration == t) {
      for (std::size_t c = 0; c < schedule.events[next_event].add_count; ++c) {
        sim.deploy_femtocell(schedule.events[next_event].mode);
      }
      ++next_event;
    }
    IterationRecord rec = sim.step();
    if (t % config.log_stride == 0) trace.push_back(std::move(rec));
  }
  const double target = sim.target();
  const std::uint64_t messages = sim.total_messages();
  return {std::move(trace), messages, target, std::move(initial), std::move(sim)};
}

inline RunResult run(const SimConfig& config, const DeploymentSchedule& schedule = {}) {
  config.validate();
  auto [topology, topo_rng] = sample_topology(config);
  return run(config, schedule, std::move(topology), topo_rng);
}

}  // namespace femtoq
