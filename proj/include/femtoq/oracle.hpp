#pragma once

// Exhaustive-search ground truth for the discrete joint power allocation
// problem, and extraction of a trained policy's greedy allocation so the two
// can be compared.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "femtoq/agents.hpp"
#include "femtoq/netmodel.hpp"
#include "femtoq/simulator.hpp"
#include "femtoq/units.hpp"

namespace femtoq {

struct OracleOptions {
  std::uint64_t max_evaluations = 100'000'000;
  unsigned threads = 1;
};

struct OracleResult {
  bool feasible = false;
  std::vector<std::vector<double>> best_allocation_dbm;  // [femto][k]
  double best_total_femto = 0.0;
  double best_macro_aggregate = 0.0;
  std::uint64_t feasible_count = 0;
  std::uint64_t evaluated_count = 0;
};

namespace detail {

struct OracleChunk {
  bool found = false;
  std::uint64_t best_index = 0;
  double best_value = -std::numeric_limits<double>::infinity();
  double best_macro = 0.0;
  std::uint64_t feasible = 0;
  std::uint64_t evaluated = 0;
};

// Scans matrix indices [begin, end). Digit order is (femto, subcarrier) with
// femto 0 / subcarrier 0 most significant, so increasing index is lexicographic.
inline OracleChunk oracle_scan(const ChannelGains& gains, std::span<const double> macro_w, double noise_w,
                               std::span<const double> level_w, double target, double band, double budget_w,
                               std::uint64_t begin, std::uint64_t end) {
  const std::size_t nf = gains.femto_count();
  const std::size_t nk = gains.subcarriers;
  const std::size_t cells = nf * nk;
  const std::size_t base = level_w.size();

  std::vector<std::size_t> digits(cells, 0);
  std::uint64_t rem = begin;
  for (std::size_t c = cells; c-- > 0;) {
    digits[c] = static_cast<std::size_t>(rem % base);
    rem /= base;
  }

  PowerAllocation alloc;
  alloc.macro_w.assign(macro_w.begin(), macro_w.end());
  alloc.femto_w.assign(nf, std::vector<double>(nk, 0.0));

  OracleChunk out;
  for (std::uint64_t idx = begin; idx < end; ++idx) {
    ++out.evaluated;
    bool within_budget = true;
    for (std::size_t n = 0; n < nf && within_budget; ++n) {
      double total = 0.0;
      for (std::size_t k = 0; k < nk; ++k) {
        alloc.femto_w[n][k] = level_w[digits[n * nk + k]];
        total += alloc.femto_w[n][k];
      }
      within_budget = total <= budget_w;
    }
    if (within_budget) {
      double macro = 0.0;
      for (std::size_t k = 0; k < nk; ++k) macro += macro_capacity(k, gains, alloc, noise_w);
      if (std::abs(macro - target) <= band) {
        ++out.feasible;
        double femto = 0.0;
        for (std::size_t n = 0; n < nf; ++n) {
          for (std::size_t k = 0; k < nk; ++k) femto += femto_capacity(n, k, gains, alloc, noise_w);
        }
        if (!out.found || femto > out.best_value) {
          out.found = true;
          out.best_value = femto;
          out.best_index = idx;
          out.best_macro = macro;
        }
      }
    }
    for (std::size_t c = cells; c-- > 0;) {
      if (++digits[c] < base) break;
      digits[c] = 0;
    }
  }
  return out;
}

}  // namespace detail

/// Maximum aggregate femto capacity over every N_f x K matrix of `levels_dbm`
/// that respects the per-femto budget and keeps the aggregate macro capacity
/// within `target` +- `band`. Ties go to the lexicographically smallest matrix.
inline OracleResult exhaustive_optimal(const ChannelGains& gains, std::span<const double> macro_w, double noise_w,
                                       std::span<const double> levels_dbm, double target, double band,
                                       double pmax_f_dbm, const OracleOptions& options = {}) {
  if (!(band > 0.0)) throw ConfigError("oracle band must be positive");
  if (levels_dbm.empty()) throw ConfigError("oracle needs at least one power level");
  if (macro_w.size() != gains.subcarriers) throw ConfigError("macro power vector does not match subcarriers");
  const std::size_t cells = gains.femto_count() * gains.subcarriers;
  std::uint64_t total = 1;
  for (std::size_t c = 0; c < cells; ++c) {
    if (total > options.max_evaluations / levels_dbm.size()) {
      throw ConfigError("oracle refused: " + std::to_string(levels_dbm.size()) + "^" + std::to_string(cells) +
                        " allocations exceed the cap of " + std::to_string(options.max_evaluations));
    }
    total *= levels_dbm.size();
  }

  std::vector<double> level_w;
  for (double l : levels_dbm) level_w.push_back(dbm_to_watts(l));
  const double budget_w = dbm_to_watts(pmax_f_dbm);

  const unsigned workers = std::max(1U, std::min<unsigned>(options.threads, static_cast<unsigned>(total)));
  std::vector<detail::OracleChunk> chunks(workers);
  auto bounds_of = [&](unsigned w) { return std::pair{total * w / workers, total * (w + 1) / workers}; };
  if (workers == 1) {
    chunks[0] = detail::oracle_scan(gains, macro_w, noise_w, level_w, target, band, budget_w, 0, total);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        const auto [b, e] = bounds_of(w);
        chunks[w] = detail::oracle_scan(gains, macro_w, noise_w, level_w, target, band, budget_w, b, e);
      });
    }
  }

  // Chunks are in index order, so a strict comparison keeps the lowest index on ties.
  OracleResult result;
  detail::OracleChunk best;
  for (const auto& c : chunks) {
    result.feasible_count += c.feasible;
    result.evaluated_count += c.evaluated;
    if (c.found && (!best.found || c.best_value > best.best_value)) best = c;
  }
  if (!best.found) return result;

  result.feasible = true;
  result.best_total_femto = best.best_value;
  result.best_macro_aggregate = best.best_macro;
  const std::size_t nf = gains.femto_count();
  const std::size_t nk = gains.subcarriers;
  result.best_allocation_dbm.assign(nf, std::vector<double>(nk, 0.0));
  std::uint64_t rem = best.best_index;
  for (std::size_t c = cells; c-- > 0;) {
    result.best_allocation_dbm[c / nk][c % nk] = levels_dbm[static_cast<std::size_t>(rem % levels_dbm.size())];
    rem /= levels_dbm.size();
  }
  return result;
}

/// Oracle for a simulation's current topology and configuration, with the
/// simulation's (resolved) target.
inline OracleResult exhaustive_optimal(const Simulation& sim, const OracleOptions& options = {}) {
  const auto& cfg = sim.config();
  return exhaustive_optimal(sim.gains(), sim.allocation().macro_w, cfg.noise_w, cfg.vector_levels_dbm, sim.target(),
                            cfg.band, cfg.pmax_femto_dbm, options);
}

struct PolicyValue {
  std::vector<std::vector<double>> allocation_dbm;
  PowerAllocation allocation;
  CapacityReport report;
  bool in_band = false;
  std::size_t steps = 0;     // greedy steps taken before the joint action repeated
  bool cycled = false;       // repeat was a cycle longer than one step
};

/// Rolls the trained greedy policy forward from the cold-start allocation,
/// without learning, until a joint action repeats (or `max_steps`). Returns the
/// best visited allocation: in-band ones first, then by aggregate femto capacity.
inline PolicyValue greedy_policy_value(const Simulation& trained, std::size_t max_steps = 100) {
  Simulation sim = trained;
  sim.reset_powers();
  const double target = sim.target();
  const double band = sim.config().band;
  const TargetScope scope = sim.config().target_scope();

  std::vector<std::vector<std::size_t>> seen;
  PolicyValue best;
  bool have_best = false;
  for (std::size_t step = 0; step < max_steps; ++step) {
    const IterationRecord rec = sim.step({.learn = false, .epsilon = 0.0});
    const auto action = sim.joint_action();
    const auto hit = std::find(seen.begin(), seen.end(), action);
    if (hit != seen.end()) {
      best.cycled = (seen.end() - hit) > 1;
      break;
    }
    seen.push_back(action);
    best.steps = step + 1;

    const bool inside = in_band(rec, target, band, scope);
    const double value = sim.report().total_femto;
    const bool better = !have_best || (inside && !best.in_band) ||
                        (inside == best.in_band && value > best.report.total_femto);
    if (better) {
      have_best = true;
      best.allocation_dbm = sim.allocation_dbm();
      best.allocation = sim.allocation();
      best.report = sim.report();
      best.in_band = inside;
    }
  }
  return best;
}

}  // namespace femtoq
