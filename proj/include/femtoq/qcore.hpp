#pragma once

// Tabular Q-learning primitives shared by every power-control formulation.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "femtoq/random.hpp"
#include "femtoq/units.hpp"

namespace femtoq {

/// Dense states x actions table of Q-values, zero-initialized.
class QTable {
 public:
  QTable() = default;
  QTable(std::size_t states, std::size_t actions)
      : states_(states), actions_(actions), values_(states * actions, 0.0) {}

  std::size_t state_count() const { return states_; }
  std::size_t action_count() const { return actions_; }

  double operator()(std::size_t s, std::size_t a) const { return values_[index(s, a)]; }

  void set(std::size_t s, std::size_t a, double v) {
    if (!std::isfinite(v)) throw std::logic_error("QTable: refusing to store a non-finite value");
    values_[index(s, a)] = v;
  }

  std::span<const double> row(std::size_t s) const {
    check_state(s);
    return {values_.data() + s * actions_, actions_};
  }

  std::span<const double> values() const { return values_; }

  bool same_shape(const QTable& other) const {
    return states_ == other.states_ && actions_ == other.actions_;
  }

  friend bool operator==(const QTable&, const QTable&) = default;

 private:
  void check_state(std::size_t s) const {
    if (s >= states_) {
      throw std::out_of_range("QTable: state " + std::to_string(s) + " >= " + std::to_string(states_));
    }
  }
  std::size_t index(std::size_t s, std::size_t a) const {
    check_state(s);
    if (a >= actions_) {
      throw std::out_of_range("QTable: action " + std::to_string(a) + " >= " + std::to_string(actions_));
    }
    return s * actions_ + a;
  }

  std::size_t states_ = 0;
  std::size_t actions_ = 0;
  std::vector<double> values_;
};

struct LearningParams {
  double alpha = 0.5;
  double gamma = 0.9;
  double epsilon = 0.1;

  void validate() const {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in [0, 1]");
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ConfigError("epsilon must lie in [0, 1]");
  }
};

/// Index of the largest element; ties go to the lowest index.
inline std::size_t argmax_lowest(std::span<const double> values) {
  if (values.empty()) throw std::logic_error("argmax of an empty row");
  std::size_t best = 0;
  for (std::size_t a = 1; a < values.size(); ++a) {
    if (values[a] > values[best]) best = a;
  }
  return best;
}

inline void q_update(QTable& table, std::size_t s, std::size_t a, double reward, std::size_t s_next,
                     const LearningParams& params) {
  if (!std::isfinite(reward)) throw std::logic_error("q_update: non-finite reward");
  const auto next = table.row(s_next);
  const double best_next = *std::max_element(next.begin(), next.end());
  const double updated = (1.0 - params.alpha) * table(s, a) + params.alpha * (reward + params.gamma * best_next);
  table.set(s, a, updated);
}

// Both selectors always consume exactly one exploration draw, and a second one
// when exploring, so the random stream stays aligned whatever epsilon is.
inline std::size_t select_egreedy(const QTable& table, std::size_t s, const LearningParams& params, Rng& rng) {
  const auto row = table.row(s);
  if (rng.uniform() < params.epsilon) return static_cast<std::size_t>(rng.below(row.size()));
  return argmax_lowest(row);
}

/// One agent's current-state row, as sent to its cooperating neighbours.
struct SharedRow {
  std::size_t sender = 0;
  std::size_t state = 0;
  std::vector<double> row;
};

/// Exploit step: argmax of the element-wise sum of all rows.
inline std::size_t cooperative_argmax(std::span<const SharedRow> rows) {
  if (rows.empty()) throw ConfigError("cooperative selection needs at least one row");
  const std::size_t width = rows.front().row.size();
  std::vector<double> sum(width, 0.0);
  for (const auto& r : rows) {
    if (r.row.size() != width) {
      throw ConfigError("shared row from agent " + std::to_string(r.sender) + " has length " +
                        std::to_string(r.row.size()) + ", expected " + std::to_string(width));
    }
    for (std::size_t a = 0; a < width; ++a) sum[a] += r.row[a];
  }
  return argmax_lowest(sum);
}

inline std::size_t select_cooperative(std::span<const SharedRow> rows, const LearningParams& params, Rng& rng) {
  const std::size_t chosen = cooperative_argmax(rows);  // validates before any draw
  if (rng.uniform() < params.epsilon) return static_cast<std::size_t>(rng.below(rows.front().row.size()));
  return chosen;
}

/// What one agent exposes to a sharing round: its per-task tables and current states.
struct AgentView {
  std::size_t id = 0;
  std::span<const QTable> tables;
  std::span<const std::size_t> states;
};

struct BroadcastRound {
  // received[i][task] holds agent i's own row first, then its neighbours' rows
  // in ascending agent order.
  std::vector<std::vector<std::vector<SharedRow>>> received;
  std::uint64_t messages = 0;
};

/// One sharing round. Every agent sends one message (its current-state rows for
/// all tasks) to each agent for which `in_range(i, j)` holds. A fully connected
/// group of N agents costs N(N-1) messages.
template <class InRange>
BroadcastRound broadcast_rows(std::span<const AgentView> agents, InRange&& in_range) {
  BroadcastRound round;
  round.received.resize(agents.size());
  auto row_of = [](const AgentView& v, std::size_t task) {
    const auto r = v.tables[task].row(v.states[task]);
    return SharedRow{v.id, v.states[task], std::vector<double>(r.begin(), r.end())};
  };
  for (std::size_t i = 0; i < agents.size(); ++i) {
    const std::size_t tasks = agents[i].tables.size();
    round.received[i].resize(tasks);
    for (std::size_t t = 0; t < tasks; ++t) round.received[i][t].push_back(row_of(agents[i], t));
    for (std::size_t j = 0; j < agents.size(); ++j) {
      if (j == i || !in_range(i, j)) continue;
      ++round.messages;
      if (agents[j].tables.size() != tasks) throw ConfigError("cooperating agents disagree on task count");
      for (std::size_t t = 0; t < tasks; ++t) round.received[i][t].push_back(row_of(agents[j], t));
    }
  }
  return round;
}

inline BroadcastRound broadcast_rows(std::span<const AgentView> agents) {
  return broadcast_rows(agents, [](std::size_t, std::size_t) { return true; });
}

enum class MergeRule { Mean, CopyFirst, Max };

/// Initial table for a newcomer: all-zero when there are no donors, otherwise
/// a merge of the donors' tables.
inline QTable docitive_init(std::span<const QTable> donors, std::size_t states, std::size_t actions,
                            MergeRule rule = MergeRule::Mean) {
  QTable out(states, actions);
  if (donors.empty()) return out;
  for (const auto& d : donors) {
    if (d.state_count() != states || d.action_count() != actions) {
      throw ConfigError("docitive_init: donor table shape mismatch");
    }
  }
  for (std::size_t s = 0; s < states; ++s) {
    for (std::size_t a = 0; a < actions; ++a) {
      double v = donors.front()(s, a);
      switch (rule) {
        case MergeRule::CopyFirst:
          break;
        case MergeRule::Max:
          for (const auto& d : donors) v = std::max(v, d(s, a));
          break;
        case MergeRule::Mean: {
          double sum = 0.0;
          for (const auto& d : donors) sum += d(s, a);
          v = sum / static_cast<double>(donors.size());
          break;
        }
      }
      out.set(s, a, v);
    }
  }
  return out;
}

inline QTable docitive_init(std::span<const QTable> donors, MergeRule rule = MergeRule::Mean) {
  if (donors.empty()) throw ConfigError("docitive_init: shape required when there are no donors");
  return docitive_init(donors, donors.front().state_count(), donors.front().action_count(), rule);
}

}  // namespace femtoq
