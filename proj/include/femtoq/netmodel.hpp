#pragma once

// Network geometry, path-loss channel gains and downlink capacities for one
// macrocell underlaid with closed-access femtocells sharing K subcarriers.

#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "femtoq/random.hpp"
#include "femtoq/units.hpp"

namespace femtoq {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

inline double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

/// Maximum-distance constraints on the deployment, in meters.
struct DistanceBounds {
  double mbs_to_macro_user = 1000.0;
  double mbs_to_femto_user = 800.0;
  double fbs_to_own_user = 80.0;
  double fbs_to_foreign_user = 300.0;
  double fbs_to_macro_user = 800.0;
  // Inner radius of the annulus the macro user is drawn from (0 = full disc).
  double macro_user_min = 0.0;
  // Floor on every transmitter-receiver distance that enters a gain.
  double min_separation = 1.0;
  int max_retries = 10000;

  void validate() const {
    for (double b : {mbs_to_macro_user, mbs_to_femto_user, fbs_to_own_user, fbs_to_foreign_user,
                     fbs_to_macro_user}) {
      if (!(b > 0.0)) throw ConfigError("distance bounds must be positive");
    }
    if (macro_user_min < 0.0 || macro_user_min >= mbs_to_macro_user) {
      throw ConfigError("macro_user_min must lie in [0, mbs_to_macro_user)");
    }
    if (!(min_separation > 0.0)) throw ConfigError("min_separation must be positive");
    if (max_retries < 1) throw ConfigError("max_retries must be >= 1");
  }
};

struct NetworkTopology {
  Point mbs;
  Point macro_user;
  std::vector<Point> fbs;
  std::vector<Point> femto_users;
  double path_loss_exponent = 2.0;

  std::size_t femto_count() const { return fbs.size(); }
};

/// True when every constraint of `bounds` holds for `topo`.
inline bool satisfies(const NetworkTopology& topo, const DistanceBounds& bounds) {
  const double floor = bounds.min_separation;
  auto within = [floor](double d, double hi) { return d >= floor && d <= hi; };
  if (!within(distance(topo.mbs, topo.macro_user), bounds.mbs_to_macro_user)) return false;
  if (distance(topo.mbs, topo.macro_user) < bounds.macro_user_min) return false;
  if (topo.fbs.size() != topo.femto_users.size()) return false;
  const std::size_t n = topo.fbs.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (!within(distance(topo.mbs, topo.femto_users[i]), bounds.mbs_to_femto_user)) return false;
    if (!within(distance(topo.fbs[i], topo.femto_users[i]), bounds.fbs_to_own_user)) return false;
    if (!within(distance(topo.fbs[i], topo.macro_user), bounds.fbs_to_macro_user)) return false;
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j && !within(distance(topo.fbs[i], topo.femto_users[j]), bounds.fbs_to_foreign_user)) {
        return false;
      }
    }
  }
  return true;
}

namespace detail {

inline Point uniform_in_annulus(Point center, double r_min, double r_max, Rng& rng) {
  const double r = std::sqrt(r_min * r_min + rng.uniform() * (r_max * r_max - r_min * r_min));
  const double theta = 2.0 * std::numbers::pi * rng.uniform();
  return {center.x + r * std::cos(theta), center.y + r * std::sin(theta)};
}

}  // namespace detail

/// Places one more femtocell (FBS + its user) into `topo` by rejection sampling.
/// The FBS is drawn uniformly in the macro disc, its user uniformly in the femto disc.
inline void add_femtocell(NetworkTopology& topo, const DistanceBounds& bounds, Rng& rng) {
  bounds.validate();
  const double floor = bounds.min_separation;
  for (int attempt = 0; attempt < bounds.max_retries; ++attempt) {
    const Point fbs = detail::uniform_in_annulus(topo.mbs, 0.0, bounds.mbs_to_macro_user, rng);
    const Point user = detail::uniform_in_annulus(fbs, 0.0, bounds.fbs_to_own_user, rng);

    const double d_own = distance(fbs, user);
    const double d_mbs_user = distance(topo.mbs, user);
    const double d_macro = distance(fbs, topo.macro_user);
    if (d_own < floor || d_mbs_user < floor || d_mbs_user > bounds.mbs_to_femto_user) continue;
    if (d_macro < floor || d_macro > bounds.fbs_to_macro_user) continue;

    bool ok = true;
    for (std::size_t j = 0; ok && j < topo.fbs.size(); ++j) {
      const double to_their_user = distance(fbs, topo.femto_users[j]);
      const double from_their_fbs = distance(topo.fbs[j], user);
      ok = to_their_user >= floor && to_their_user <= bounds.fbs_to_foreign_user &&
           from_their_fbs >= floor && from_their_fbs <= bounds.fbs_to_foreign_user;
    }
    if (!ok) continue;

    topo.fbs.push_back(fbs);
    topo.femto_users.push_back(user);
    return;
  }
  throw InfeasibleError("topology infeasible: could not place femtocell " +
                        std::to_string(topo.fbs.size()) + " after " +
                        std::to_string(bounds.max_retries) + " attempts");
}

inline NetworkTopology place_network(const DistanceBounds& bounds, std::size_t n_femto, Rng& rng,
                                     double path_loss_exponent = 2.0) {
  bounds.validate();
  NetworkTopology topo;
  topo.path_loss_exponent = path_loss_exponent;
  topo.mbs = {0.0, 0.0};
  const double r_min = std::max(bounds.macro_user_min, bounds.min_separation);
  topo.macro_user = detail::uniform_in_annulus(topo.mbs, r_min, bounds.mbs_to_macro_user, rng);
  for (std::size_t i = 0; i < n_femto; ++i) add_femtocell(topo, bounds, rng);
  return topo;
}

/// Path-loss dominated gain: distance^(-pl_exponent).
inline double channel_gain(double distance_m, double pl_exponent) {
  if (!(distance_m > 0.0)) {
    throw DomainError("channel_gain: distance must be positive, got " + std::to_string(distance_m));
  }
  return std::pow(distance_m, -pl_exponent);
}

/// Per-subcarrier gains. Indexing is [femto][k] and [src][dst][k] for the
/// femto-to-femto cross links (src == dst entries are unused and zero).
struct ChannelGains {
  std::size_t subcarriers = 0;
  std::vector<double> mbs_to_macro;                          // h_oo
  std::vector<std::vector<double>> fbs_to_macro;             // h_no
  std::vector<std::vector<double>> fbs_to_own;               // h_nn
  std::vector<std::vector<std::vector<double>>> fbs_to_foreign;  // h_n'n
  std::vector<std::vector<double>> mbs_to_femto;             // h_on

  std::size_t femto_count() const { return fbs_to_own.size(); }
};

inline ChannelGains compute_gains(const NetworkTopology& topo, std::size_t subcarriers) {
  if (subcarriers == 0) throw ConfigError("at least one subcarrier is required");
  const double pl = topo.path_loss_exponent;
  const std::size_t n = topo.femto_count();
  auto flat = [subcarriers, pl](double d) { return std::vector<double>(subcarriers, channel_gain(d, pl)); };

  ChannelGains g;
  g.subcarriers = subcarriers;
  g.mbs_to_macro = flat(distance(topo.mbs, topo.macro_user));
  g.fbs_to_macro.reserve(n);
  g.fbs_to_own.reserve(n);
  g.mbs_to_femto.reserve(n);
  g.fbs_to_foreign.assign(n, std::vector<std::vector<double>>(n, std::vector<double>(subcarriers, 0.0)));
  for (std::size_t i = 0; i < n; ++i) {
    g.fbs_to_macro.push_back(flat(distance(topo.fbs[i], topo.macro_user)));
    g.fbs_to_own.push_back(flat(distance(topo.fbs[i], topo.femto_users[i])));
    g.mbs_to_femto.push_back(flat(distance(topo.mbs, topo.femto_users[i])));
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) g.fbs_to_foreign[i][j] = flat(distance(topo.fbs[i], topo.femto_users[j]));
    }
  }
  return g;
}

/// Transmit powers in watts, per subcarrier.
struct PowerAllocation {
  std::vector<double> macro_w;               // [k]
  std::vector<std::vector<double>> femto_w;  // [n][k]

  double femto_total_w(std::size_t n) const {
    double total = 0.0;
    for (double p : femto_w[n]) total += p;
    return total;
  }
};

/// Equal split of the macro budget across subcarriers.
inline std::vector<double> macro_equal_split(double pmax_macro_dbm, std::size_t subcarriers) {
  return std::vector<double>(subcarriers, dbm_to_watts(pmax_macro_dbm) / static_cast<double>(subcarriers));
}

struct CapacityReport {
  std::vector<double> macro_capacity;               // [k], bits/s/Hz
  std::vector<std::vector<double>> femto_capacity;  // [n][k]
  double macro_aggregate = 0.0;
  std::vector<double> femto_aggregate;  // [n]
  double total_femto = 0.0;
};

inline double macro_capacity(std::size_t k, const ChannelGains& gains, const PowerAllocation& alloc,
                             double noise_w) {
  double interference = 0.0;
  for (std::size_t n = 0; n < alloc.femto_w.size(); ++n) {
    interference += gains.fbs_to_macro[n][k] * alloc.femto_w[n][k];
  }
  return std::log2(1.0 + gains.mbs_to_macro[k] * alloc.macro_w[k] / (interference + noise_w));
}

inline double femto_capacity(std::size_t n, std::size_t k, const ChannelGains& gains,
                             const PowerAllocation& alloc, double noise_w) {
  double interference = 0.0;
  for (std::size_t j = 0; j < alloc.femto_w.size(); ++j) {
    if (j != n) interference += gains.fbs_to_foreign[j][n][k] * alloc.femto_w[j][k];
  }
  interference += gains.mbs_to_femto[n][k] * alloc.macro_w[k];
  return std::log2(1.0 + gains.fbs_to_own[n][k] * alloc.femto_w[n][k] / (interference + noise_w));
}

inline void check_shapes(const ChannelGains& gains, const PowerAllocation& alloc, double noise_w) {
  if (!(noise_w > 0.0)) throw ConfigError("noise power must be positive");
  const std::size_t k = gains.subcarriers;
  const std::size_t n = gains.femto_count();
  if (gains.mbs_to_macro.size() != k || alloc.macro_w.size() != k) {
    throw ConfigError("macro power / gain vectors do not match subcarrier count");
  }
  if (alloc.femto_w.size() != n || gains.fbs_to_macro.size() != n || gains.mbs_to_femto.size() != n ||
      gains.fbs_to_foreign.size() != n) {
    throw ConfigError("femto power rows (" + std::to_string(alloc.femto_w.size()) +
                      ") do not match gain rows (" + std::to_string(n) + ")");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (alloc.femto_w[i].size() != k || gains.fbs_to_own[i].size() != k ||
        gains.fbs_to_macro[i].size() != k || gains.mbs_to_femto[i].size() != k ||
        gains.fbs_to_foreign[i].size() != n) {
      throw ConfigError("per-femto vectors do not match subcarrier count");
    }
  }
}

inline CapacityReport evaluate(const ChannelGains& gains, const PowerAllocation& alloc, double noise_w) {
  check_shapes(gains, alloc, noise_w);
  const std::size_t nk = gains.subcarriers;
  const std::size_t nf = gains.femto_count();
  CapacityReport r;
  r.macro_capacity.resize(nk);
  r.femto_capacity.assign(nf, std::vector<double>(nk, 0.0));
  r.femto_aggregate.assign(nf, 0.0);
  for (std::size_t k = 0; k < nk; ++k) {
    r.macro_capacity[k] = macro_capacity(k, gains, alloc, noise_w);
    r.macro_aggregate += r.macro_capacity[k];
  }
  for (std::size_t n = 0; n < nf; ++n) {
    for (std::size_t k = 0; k < nk; ++k) {
      r.femto_capacity[n][k] = femto_capacity(n, k, gains, alloc, noise_w);
      r.femto_aggregate[n] += r.femto_capacity[n][k];
    }
    r.total_femto += r.femto_aggregate[n];
  }
  return r;
}

}  // namespace femtoq
