#pragma once

// Helpers shared by the unit tests and the acceptance runner: hand-built
// channel instances and a scalar re-evaluation of the capacity formulas that
// works from positions, not from ChannelGains.

#include <cmath>
#include <cstddef>
#include <vector>

#include "femtoq/netmodel.hpp"
#include "femtoq/random.hpp"

namespace femtoq::testkit {

/// Flat gains with the same value for every femtocell and subcarrier.
inline ChannelGains uniform_gains(std::size_t nf, std::size_t nk, double h_oo, double h_no, double h_nn,
                                  double h_on, double h_cross) {
  ChannelGains g;
  g.subcarriers = nk;
  g.mbs_to_macro.assign(nk, h_oo);
  g.fbs_to_macro.assign(nf, std::vector<double>(nk, h_no));
  g.fbs_to_own.assign(nf, std::vector<double>(nk, h_nn));
  g.mbs_to_femto.assign(nf, std::vector<double>(nk, h_on));
  g.fbs_to_foreign.assign(nf, std::vector<std::vector<double>>(nf, std::vector<double>(nk, h_cross)));
  for (std::size_t i = 0; i < nf; ++i) g.fbs_to_foreign[i][i].assign(nk, 0.0);
  return g;
}

inline PowerAllocation uniform_alloc(std::size_t nf, std::size_t nk, double p_macro, double p_femto) {
  return {std::vector<double>(nk, p_macro), std::vector<std::vector<double>>(nf, std::vector<double>(nk, p_femto))};
}

struct RandomInstance {
  ChannelGains gains;
  PowerAllocation alloc;
  double noise = 1.0;
};

/// Arbitrary positive gains and powers spread over three decades, narrow
/// enough that every term stays visible in double precision.
inline RandomInstance random_instance(Rng& rng, std::size_t nf, std::size_t nk) {
  auto draw = [&] { return std::pow(10.0, rng.uniform(-3.0, 0.0)); };
  RandomInstance inst;
  auto& g = inst.gains;
  g.subcarriers = nk;
  for (std::size_t k = 0; k < nk; ++k) g.mbs_to_macro.push_back(draw());
  g.fbs_to_macro.assign(nf, {});
  g.fbs_to_own.assign(nf, {});
  g.mbs_to_femto.assign(nf, {});
  g.fbs_to_foreign.assign(nf, std::vector<std::vector<double>>(nf, std::vector<double>(nk, 0.0)));
  for (std::size_t n = 0; n < nf; ++n) {
    for (std::size_t k = 0; k < nk; ++k) {
      g.fbs_to_macro[n].push_back(draw());
      g.fbs_to_own[n].push_back(draw());
      g.mbs_to_femto[n].push_back(draw());
      for (std::size_t m = 0; m < nf; ++m) {
        if (m != n) g.fbs_to_foreign[n][m][k] = draw();
      }
    }
  }
  inst.alloc.macro_w.resize(nk);
  for (auto& p : inst.alloc.macro_w) p = draw();
  inst.alloc.femto_w.assign(nf, std::vector<double>(nk));
  for (auto& row : inst.alloc.femto_w) {
    for (auto& p : row) p = draw();
  }
  inst.noise = draw() * 1e-2;
  return inst;
}

/// Macro capacity on subcarrier k straight from positions.
inline double reference_macro(const NetworkTopology& t, const PowerAllocation& a, double noise, std::size_t k) {
  const double pl = t.path_loss_exponent;
  auto gain = [pl](Point p, Point q) { return 1.0 / std::pow(std::hypot(p.x - q.x, p.y - q.y), pl); };
  double interference = noise;
  for (std::size_t n = 0; n < t.fbs.size(); ++n) interference += gain(t.fbs[n], t.macro_user) * a.femto_w[n][k];
  return std::log2(1.0 + gain(t.mbs, t.macro_user) * a.macro_w[k] / interference);
}

/// Femto capacity of cell n on subcarrier k straight from positions.
inline double reference_femto(const NetworkTopology& t, const PowerAllocation& a, double noise, std::size_t n,
                              std::size_t k) {
  const double pl = t.path_loss_exponent;
  auto gain = [pl](Point p, Point q) { return 1.0 / std::pow(std::hypot(p.x - q.x, p.y - q.y), pl); };
  double interference = noise + gain(t.mbs, t.femto_users[n]) * a.macro_w[k];
  for (std::size_t m = 0; m < t.fbs.size(); ++m) {
    if (m != n) interference += gain(t.fbs[m], t.femto_users[n]) * a.femto_w[m][k];
  }
  return std::log2(1.0 + gain(t.fbs[n], t.femto_users[n]) * a.femto_w[n][k] / interference);
}

inline bool rel_close(double a, double b, double rel) {
  return std::abs(a - b) <= rel * std::max({std::abs(a), std::abs(b), 1e-300});
}

}  // namespace femtoq::testkit
