#pragma once

// States, actions and rewards of the three power-control formulations:
//   DPC-Q   one learner per femtocell and subcarrier, scalar power actions
//   PDPC-Q  one learner per femtocell, power-vector actions over all subcarriers
//   CPC-Q   one central learner, power-matrix actions over all femtocells

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "femtoq/qcore.hpp"
#include "femtoq/units.hpp"

namespace femtoq {

enum class RewardKind { R0, R1 };

// ---------------------------------------------------------------------------
// DPC-Q

inline constexpr std::size_t kDpcqStateCount = 6;

struct DpcqTaskState {
  int interference = 0;  // 1 when the macro capacity on this subcarrier is below target
  int power_level = 0;   // 0 low, 1 near budget, 2 over budget

  std::size_t index() const { return static_cast<std::size_t>(interference * 3 + power_level); }
  static DpcqTaskState from_index(std::size_t i) {
    return {static_cast<int>(i / 3), static_cast<int>(i % 3)};
  }
  friend bool operator==(const DpcqTaskState&, const DpcqTaskState&) = default;
};

/// Power levels from `min_dbm` up to and including `max_dbm` in `step_db` increments.
/// With the defaults the grid stops at 14 dBm, one step short of the 15 dBm budget.
inline std::vector<double> dpcq_action_set(double min_dbm = -20.0, double max_dbm = 15.0, double step_db = 2.0) {
  if (!(step_db > 0.0) || max_dbm < min_dbm) throw ConfigError("invalid DPC-Q action grid");
  const auto count = static_cast<std::size_t>(std::floor((max_dbm - min_dbm) / step_db + 1e-9)) + 1;
  std::vector<double> levels;
  levels.reserve(count);
  for (std::size_t i = 0; i < count; ++i) levels.push_back(min_dbm + step_db * static_cast<double>(i));
  return levels;
}

/// Quantized total-power level, compared in the dBm domain: 2 above the budget,
/// 0 below pmax - a1, 1 on [pmax - a2, pmax]. A gap left by a2 < a1 reads as 0.
inline int dpcq_power_level(double total_power_w, double pmax_f_dbm, double a1_db, double a2_db) {
  if (!(total_power_w > 0.0)) return 0;
  const double total_dbm = watts_to_dbm(total_power_w);
  if (total_dbm > pmax_f_dbm) return 2;
  if (total_dbm < pmax_f_dbm - a1_db) return 0;
  return total_dbm >= pmax_f_dbm - a2_db ? 1 : 0;
}

inline DpcqTaskState dpcq_encode_state(double macro_capacity_k, double total_power_w, double target,
                                       double pmax_f_dbm, double a1_db, double a2_db) {
  if (total_power_w < 0.0) throw DomainError("dpcq_encode_state: negative total power");
  return {macro_capacity_k < target ? 1 : 0, dpcq_power_level(total_power_w, pmax_f_dbm, a1_db, a2_db)};
}

inline double dpcq_reward(RewardKind kind, double macro_capacity_k, double femto_capacity_k,
                          double total_power_dbm, double target, double pmax_f_dbm) {
  const bool within_budget = total_power_dbm <= pmax_f_dbm;
  const double protection = std::exp(-(macro_capacity_k - target) * (macro_capacity_k - target));
  if (kind == RewardKind::R1) return within_budget ? protection - std::exp(-femto_capacity_k) : -2.0;
  return within_budget ? protection : -1.0;
}

// ---------------------------------------------------------------------------
// PDPC-Q / CPC-Q shared power vectors

inline const std::vector<double>& default_vector_levels() {
  static const std::vector<double> levels{0.0, 6.0, 12.0};
  return levels;
}

inline std::uint64_t checked_pow(std::uint64_t base, std::uint64_t exp) {
  std::uint64_t r = 1;
  for (std::uint64_t i = 0; i < exp; ++i) {
    if (base != 0 && r > UINT64_MAX / base) throw ConfigError("action-space cardinality overflows 64 bits");
    r *= base;
  }
  return r;
}

/// Every length-K vector over `levels_dbm`, lexicographic (first subcarrier most
/// significant), keeping only vectors whose linear total is within `pmax_f_dbm`.
inline std::vector<std::vector<double>> power_vectors(std::size_t subcarriers, const std::vector<double>& levels_dbm,
                                                      double pmax_f_dbm) {
  if (subcarriers == 0) throw ConfigError("at least one subcarrier is required");
  if (levels_dbm.empty()) throw ConfigError("power level set is empty");
  const double budget_w = dbm_to_watts(pmax_f_dbm);
  const std::uint64_t total = checked_pow(levels_dbm.size(), subcarriers);
  std::vector<std::vector<double>> out;
  std::vector<std::size_t> digits(subcarriers, 0);
  for (std::uint64_t i = 0; i < total; ++i) {
    std::vector<double> v(subcarriers);
    double sum_w = 0.0;
    for (std::size_t k = 0; k < subcarriers; ++k) {
      v[k] = levels_dbm[digits[k]];
      sum_w += dbm_to_watts(v[k]);
    }
    if (sum_w <= budget_w) out.push_back(std::move(v));
    for (std::size_t k = subcarriers; k-- > 0;) {
      if (++digits[k] < levels_dbm.size()) break;
      digits[k] = 0;
    }
  }
  return out;
}

inline std::vector<std::vector<double>> pdpcq_action_set(std::size_t subcarriers,
                                                         const std::vector<double>& levels_dbm = default_vector_levels(),
                                                         double pmax_f_dbm = 15.0) {
  return power_vectors(subcarriers, levels_dbm, pmax_f_dbm);
}

/// 1 when the aggregate macro capacity is below its target.
inline std::size_t pdpcq_encode_state(double macro_aggregate, double target) {
  if (macro_aggregate < 0.0) throw DomainError("pdpcq_encode_state: negative capacity");
  return macro_aggregate < target ? 1 : 0;
}

inline double pdpcq_reward(double macro_aggregate, double femto_aggregate, double target) {
  return std::exp(-(macro_aggregate - target) * (macro_aggregate - target)) - std::exp(-femto_aggregate);
}

inline double cpcq_reward(double macro_aggregate, double total_femto, double target) {
  return std::exp(-(macro_aggregate - target) * (macro_aggregate - target)) - std::exp(-total_femto);
}

inline constexpr std::size_t kCpcqMaxCells = 12;  // 3^12 = 531441 raw matrices

/// Unfiltered matrix count |levels|^(N_f K).
inline std::uint64_t cpcq_raw_cardinality(std::size_t n_femto, std::size_t subcarriers, std::size_t level_count = 3) {
  return checked_pow(level_count, n_femto * subcarriers);
}

/// Joint action space of the central controller: one filtered power vector per
/// femtocell, enumerated lexicographically with femtocell 0 most significant.
class CpcqActionSpace {
 public:
  CpcqActionSpace() = default;
  CpcqActionSpace(std::size_t n_femto, std::size_t subcarriers,
                  const std::vector<double>& levels_dbm = default_vector_levels(), double pmax_f_dbm = 15.0)
      : n_femto_(n_femto), subcarriers_(subcarriers) {
    if (n_femto * subcarriers > kCpcqMaxCells) {
      throw ConfigError("CPC-Q action space too large: " +
                        std::to_string(cpcq_raw_cardinality(n_femto, subcarriers, levels_dbm.size())) +
                        " matrices for N_f=" + std::to_string(n_femto) + ", K=" + std::to_string(subcarriers) +
                        " (limit N_f*K <= " + std::to_string(kCpcqMaxCells) + ")");
    }
    vectors_ = power_vectors(subcarriers, levels_dbm, pmax_f_dbm);
    size_ = checked_pow(vectors_.size(), n_femto);
  }

  std::size_t size() const { return static_cast<std::size_t>(size_); }
  std::size_t femto_count() const { return n_femto_; }
  std::size_t per_femto_count() const { return vectors_.size(); }

  /// Row n of matrix `index`.
  const std::vector<double>& row(std::size_t index, std::size_t n) const {
    std::size_t divisor = 1;
    for (std::size_t j = n + 1; j < n_femto_; ++j) divisor *= vectors_.size();
    return vectors_[(index / divisor) % vectors_.size()];
  }

  std::vector<std::vector<double>> matrix(std::size_t index) const {
    std::vector<std::vector<double>> m;
    m.reserve(n_femto_);
    for (std::size_t n = 0; n < n_femto_; ++n) m.push_back(row(index, n));
    return m;
  }

 private:
  std::size_t n_femto_ = 0;
  std::size_t subcarriers_ = 0;
  std::vector<std::vector<double>> vectors_;
  std::uint64_t size_ = 0;
};

inline std::vector<std::vector<std::vector<double>>> cpcq_action_set(std::size_t n_femto, std::size_t subcarriers,
                                                                     const std::vector<double>& levels_dbm = default_vector_levels(),
                                                                     double pmax_f_dbm = 15.0) {
  const CpcqActionSpace space(n_femto, subcarriers, levels_dbm, pmax_f_dbm);
  std::vector<std::vector<std::vector<double>>> out;
  out.reserve(space.size());
  for (std::size_t i = 0; i < space.size(); ++i) out.push_back(space.matrix(i));
  return out;
}

// ---------------------------------------------------------------------------
// Learners

struct DpcqAgent {
  std::size_t id = 0;
  std::vector<QTable> tables;          // one per subcarrier task
  std::vector<std::size_t> actions;    // current action index per subcarrier
  std::vector<std::size_t> states;     // state observed at the start of the iteration

  DpcqAgent() = default;
  DpcqAgent(std::size_t id_, std::size_t subcarriers, std::size_t action_count)
      : id(id_),
        tables(subcarriers, QTable(kDpcqStateCount, action_count)),
        actions(subcarriers, 0),
        states(subcarriers, 0) {}
};

struct PdpcqAgent {
  std::size_t id = 0;
  QTable table;
  std::size_t action = 0;
  std::size_t state = 0;

  PdpcqAgent() = default;
  PdpcqAgent(std::size_t id_, std::size_t action_count) : id(id_), table(2, action_count) {}
};

struct CpcqController {
  CpcqActionSpace space;
  QTable table;
  std::size_t action = 0;
  std::size_t state = 0;

  CpcqController() = default;
  CpcqController(std::size_t n_femto, std::size_t subcarriers, const std::vector<double>& levels_dbm,
                 double pmax_f_dbm)
      : space(n_femto, subcarriers, levels_dbm, pmax_f_dbm), table(2, space.size()) {}
};

}  // namespace femtoq
