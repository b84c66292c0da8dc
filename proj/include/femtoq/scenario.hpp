#pragma once

// Scenario files: flat `key = value` text, `#` comments, repeated
// `deploy = <iteration>,<count>,<scratch|docitive>` lines. Missing keys take
// the defaults below; unknown or repeated keys are rejected with the line number.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "femtoq/simulator.hpp"
#include "femtoq/units.hpp"

namespace femtoq {

struct Scenario {
  std::string name = "scenario";
  SimConfig config;
  DeploymentSchedule schedule;
  bool oracle = false;
  std::size_t convergence_window = 200;

  void validate() const {
    config.validate();
    schedule.validate(config);
    if (convergence_window == 0) throw ConfigError("convergence_window must be >= 1");
  }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

inline std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class LineParser {
 public:
  LineParser(std::string_view source, std::size_t line) : source_(source), line_(line) {}

  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError(std::string(source_) + ":" + std::to_string(line_) + ": " + what);
  }

  double number(std::string_view v) const {
    const std::string low = lower(v);
    if (low == "inf" || low == "infinity") return std::numeric_limits<double>::infinity();
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out)) {
      fail("expected a number, got '" + std::string(v) + "'");
    }
    return out;
  }

  std::uint64_t count(std::string_view v) const {
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) {
      fail("expected a non-negative integer, got '" + std::string(v) + "'");
    }
    return out;
  }

  bool boolean(std::string_view v) const {
    const std::string low = lower(v);
    if (low == "true" || low == "yes" || low == "1") return true;
    if (low == "false" || low == "no" || low == "0") return false;
    fail("expected true or false, got '" + std::string(v) + "'");
  }

  template <class Enum>
  Enum choice(std::string_view v, const std::map<std::string, Enum>& options) const {
    const auto it = options.find(lower(v));
    if (it != options.end()) return it->second;
    std::string allowed;
    for (const auto& [k, _] : options) allowed += (allowed.empty() ? "" : "|") + k;
    fail("expected one of " + allowed + ", got '" + std::string(v) + "'");
  }

  std::vector<std::string_view> split(std::string_view v) const {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
      const auto comma = v.find(',', start);
      parts.push_back(trim(v.substr(start, comma - start)));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    return parts;
  }

 private:
  std::string_view source_;
  std::size_t line_;
};

inline const std::map<std::string, Algorithm>& algorithm_names() {
  static const std::map<std::string, Algorithm> m{
      {"dpcq", Algorithm::Dpcq}, {"pdpcq", Algorithm::Pdpcq}, {"cpcq", Algorithm::Cpcq}};
  return m;
}
inline const std::map<std::string, Paradigm>& paradigm_names() {
  static const std::map<std::string, Paradigm> m{{"il", Paradigm::Independent}, {"cl", Paradigm::Cooperative}};
  return m;
}
inline const std::map<std::string, RewardKind>& reward_names() {
  static const std::map<std::string, RewardKind> m{{"r0", RewardKind::R0}, {"r1", RewardKind::R1}};
  return m;
}
inline const std::map<std::string, TargetMode>& target_mode_names() {
  static const std::map<std::string, TargetMode> m{{"absolute", TargetMode::Absolute},
                                                   {"macro_offset", TargetMode::MacroOffset}};
  return m;
}
inline const std::map<std::string, MergeRule>& merge_names() {
  static const std::map<std::string, MergeRule> m{
      {"mean", MergeRule::Mean}, {"first", MergeRule::CopyFirst}, {"max", MergeRule::Max}};
  return m;
}
inline const std::map<std::string, InitMode>& init_mode_names() {
  static const std::map<std::string, InitMode> m{{"scratch", InitMode::Scratch}, {"docitive", InitMode::Docitive}};
  return m;
}

template <class Enum>
std::string name_of(Enum e, const std::map<std::string, Enum>& names) {
  for (const auto& [k, v] : names) {
    if (v == e) return k;
  }
  return "?";
}

}  // namespace detail

inline std::string to_string(Algorithm a) { return detail::name_of(a, detail::algorithm_names()); }
inline std::string to_string(Paradigm p) { return detail::name_of(p, detail::paradigm_names()); }
inline std::string to_string(RewardKind r) { return detail::name_of(r, detail::reward_names()); }
inline std::string to_string(InitMode m) { return detail::name_of(m, detail::init_mode_names()); }

inline Scenario parse_scenario(std::string_view text, std::string_view source = "<scenario>") {
  Scenario sc;
  SimConfig& c = sc.config;
  std::set<std::string> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = (nl == std::string_view::npos) ? text.size() + 1 : nl + 1;
    ++line_no;

    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;

    const detail::LineParser p(source, line_no);
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) p.fail("expected 'key = value'");
    const std::string key = detail::lower(detail::trim(line.substr(0, eq)));
    const std::string_view v = detail::trim(line.substr(eq + 1));
    if (key.empty()) p.fail("missing key");
    if (v.empty()) p.fail("missing value for '" + key + "'");
    if (key != "deploy" && !seen.insert(key).second) p.fail("duplicate key '" + key + "'");

    if (key == "name") sc.name = std::string(v);
    else if (key == "algorithm") c.algorithm = p.choice(v, detail::algorithm_names());
    else if (key == "paradigm") c.paradigm = p.choice(v, detail::paradigm_names());
    else if (key == "reward") c.reward = p.choice(v, detail::reward_names());
    else if (key == "subcarriers") c.subcarriers = static_cast<std::size_t>(p.count(v));
    else if (key == "femtocells") c.initial_femtos = static_cast<std::size_t>(p.count(v));
    else if (key == "target") c.target = p.number(v);
    else if (key == "target_mode") c.target_mode = p.choice(v, detail::target_mode_names());
    else if (key == "band") c.band = p.number(v);
    else if (key == "alpha") c.learning.alpha = p.number(v);
    else if (key == "gamma") c.learning.gamma = p.number(v);
    else if (key == "epsilon") c.learning.epsilon = p.number(v);
    else if (key == "epsilon_off_at") {
      if (detail::lower(v) == "none") c.epsilon_off_at.reset();
      else c.epsilon_off_at = p.count(v);
    }
    else if (key == "noise_w") c.noise_w = p.number(v);
    else if (key == "pmax_macro_dbm") c.pmax_macro_dbm = p.number(v);
    else if (key == "pmax_femto_dbm") c.pmax_femto_dbm = p.number(v);
    else if (key == "a1_db") c.a1_db = p.number(v);
    else if (key == "a2_db") c.a2_db = p.number(v);
    else if (key == "path_loss") c.path_loss = p.number(v);
    else if (key == "iterations") c.iterations = p.count(v);
    else if (key == "seed") c.seed = p.count(v);
    else if (key == "log_stride") c.log_stride = p.count(v);
    else if (key == "cooperation_radius") c.cooperation_radius = p.number(v);
    else if (key == "docitive_merge") c.docitive_merge = p.choice(v, detail::merge_names());
    else if (key == "dpcq_min_dbm") c.dpcq_min_dbm = p.number(v);
    else if (key == "dpcq_max_dbm") c.dpcq_max_dbm = p.number(v);
    else if (key == "dpcq_step_db") c.dpcq_step_db = p.number(v);
    else if (key == "levels_dbm") {
      c.vector_levels_dbm.clear();
      for (auto part : p.split(v)) c.vector_levels_dbm.push_back(p.number(part));
    }
    else if (key == "max_mbs_macro_user") c.bounds.mbs_to_macro_user = p.number(v);
    else if (key == "max_mbs_femto_user") c.bounds.mbs_to_femto_user = p.number(v);
    else if (key == "max_fbs_own_user") c.bounds.fbs_to_own_user = p.number(v);
    else if (key == "max_fbs_foreign_user") c.bounds.fbs_to_foreign_user = p.number(v);
    else if (key == "max_fbs_macro_user") c.bounds.fbs_to_macro_user = p.number(v);
    else if (key == "macro_user_min_distance") c.bounds.macro_user_min = p.number(v);
    else if (key == "min_separation") c.bounds.min_separation = p.number(v);
    else if (key == "placement_retries") c.bounds.max_retries = static_cast<int>(p.count(v));
    else if (key == "oracle") sc.oracle = p.boolean(v);
    else if (key == "convergence_window") sc.convergence_window = static_cast<std::size_t>(p.count(v));
    else if (key == "deploy") {
      const auto parts = p.split(v);
      if (parts.size() != 3) p.fail("deploy expects <iteration>,<count>,<scratch|docitive>");
      sc.schedule.events.push_back({p.count(parts[0]), static_cast<std::size_t>(p.count(parts[1])),
                                    p.choice(parts[2], detail::init_mode_names())});
    }
    else p.fail("unknown key '" + key + "'");
  }
  try {
    sc.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string(source) + ": " + e.what());
  }
  return sc;
}

inline Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open scenario file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  Scenario sc = parse_scenario(buf.str(), path.string());
  if (buf.str().find("name") == std::string::npos || sc.name == "scenario") sc.name = path.stem().string();
  return sc;
}

/// Canonical text form with every key spelled out.
inline std::string serialize_scenario(const Scenario& sc) {
  const SimConfig& c = sc.config;
  using detail::format_double;
  std::ostringstream o;
  o << "name = " << sc.name << "\n";
  o << "algorithm = " << to_string(c.algorithm) << "\n";
  o << "paradigm = " << to_string(c.paradigm) << "\n";
  o << "reward = " << to_string(c.reward) << "\n";
  o << "subcarriers = " << c.subcarrier_count() << "\n";
  o << "femtocells = " << c.initial_femtos << "\n";
  o << "target = " << format_double(c.target) << "\n";
  o << "target_mode = " << detail::name_of(c.target_mode, detail::target_mode_names()) << "\n";
  o << "band = " << format_double(c.band) << "\n";
  o << "alpha = " << format_double(c.learning.alpha) << "\n";
  o << "gamma = " << format_double(c.learning.gamma) << "\n";
  o << "epsilon = " << format_double(c.learning.epsilon) << "\n";
  o << "epsilon_off_at = " << (c.epsilon_off_at ? std::to_string(*c.epsilon_off_at) : "none") << "\n";
  o << "noise_w = " << format_double(c.noise_w) << "\n";
  o << "pmax_macro_dbm = " << format_double(c.pmax_macro_dbm) << "\n";
  o << "pmax_femto_dbm = " << format_double(c.pmax_femto_dbm) << "\n";
  o << "a1_db = " << format_double(c.a1_db) << "\n";
  o << "a2_db = " << format_double(c.a2_db) << "\n";
  o << "path_loss = " << format_double(c.path_loss) << "\n";
  o << "iterations = " << c.iterations << "\n";
  o << "seed = " << c.seed << "\n";
  o << "log_stride = " << c.log_stride << "\n";
  o << "cooperation_radius = " << format_double(c.cooperation_radius) << "\n";
  o << "docitive_merge = " << detail::name_of(c.docitive_merge, detail::merge_names()) << "\n";
  o << "dpcq_min_dbm = " << format_double(c.dpcq_min_dbm) << "\n";
  o << "dpcq_max_dbm = " << format_double(c.dpcq_max_dbm) << "\n";
  o << "dpcq_step_db = " << format_double(c.dpcq_step_db) << "\n";
  o << "levels_dbm = ";
  for (std::size_t i = 0; i < c.vector_levels_dbm.size(); ++i) {
    o << (i ? "," : "") << format_double(c.vector_levels_dbm[i]);
  }
  o << "\n";
  o << "max_mbs_macro_user = " << format_double(c.bounds.mbs_to_macro_user) << "\n";
  o << "max_mbs_femto_user = " << format_double(c.bounds.mbs_to_femto_user) << "\n";
  o << "max_fbs_own_user = " << format_double(c.bounds.fbs_to_own_user) << "\n";
  o << "max_fbs_foreign_user = " << format_double(c.bounds.fbs_to_foreign_user) << "\n";
  o << "max_fbs_macro_user = " << format_double(c.bounds.fbs_to_macro_user) << "\n";
  o << "macro_user_min_distance = " << format_double(c.bounds.macro_user_min) << "\n";
  o << "min_separation = " << format_double(c.bounds.min_separation) << "\n";
  o << "placement_retries = " << c.bounds.max_retries << "\n";
  o << "oracle = " << (sc.oracle ? "true" : "false") << "\n";
  o << "convergence_window = " << sc.convergence_window << "\n";
  for (const auto& e : sc.schedule.events) {
    o << "deploy = " << e.iteration << "," << e.add_count << "," << to_string(e.mode) << "\n";
  }
  return o.str();
}

// ---------------------------------------------------------------------------
// Desk-scale versions of the published experiment protocols.

/// Incremental deployment: 5 femtocells learn with exploration, exploration is
/// switched off at 60% of the run, then one femtocell joins every 2000
/// iterations until there are 10. Every iteration is logged.
inline Scenario deployment_preset(Paradigm paradigm, InitMode mode, std::uint64_t seed = 1) {
  Scenario sc;
  sc.name = std::string("deploy_") + to_string(paradigm) + "_" + (mode == InitMode::Scratch ? "scratch" : "share");
  SimConfig& c = sc.config;
  c.algorithm = Algorithm::Dpcq;
  c.paradigm = paradigm;
  c.reward = RewardKind::R1;
  c.subcarriers = 6;
  c.initial_femtos = 5;
  c.target = 6.0;
  c.iterations = 25000;
  c.epsilon_off_at = 15000;
  c.seed = seed;
  c.log_stride = 1;
  c.bounds.macro_user_min = 500.0;
  for (std::uint64_t t = 16000; t <= 24000; t += 2000) sc.schedule.events.push_back({t, 1, mode});
  sc.convergence_window = 200;
  return sc;
}

/// Small-scale benchmark against exhaustive search: target set 2 bits/s/Hz
/// below the macro-alone aggregate capacity.
inline Scenario benchmark_preset(Algorithm algorithm, Paradigm paradigm, std::size_t n_femto,
                                 std::uint64_t seed = 1) {
  Scenario sc;
  sc.name = "bench_" + to_string(algorithm) + (algorithm == Algorithm::Cpcq ? "" : "_" + to_string(paradigm)) +
            "_nf" + std::to_string(n_femto);
  SimConfig& c = sc.config;
  c.algorithm = algorithm;
  c.paradigm = paradigm;
  c.reward = RewardKind::R1;
  c.subcarriers = 3;
  c.initial_femtos = n_femto;
  c.target = -2.0;
  c.target_mode = TargetMode::MacroOffset;
  c.iterations = 30000;
  c.epsilon_off_at = 20000;
  c.seed = seed;
  c.log_stride = 100;
  sc.oracle = true;
  sc.convergence_window = 20;
  return sc;
}

inline std::vector<Scenario> preset_scenarios(std::string_view name, std::uint64_t seed = 1) {
  std::vector<Scenario> out;
  if (name == "fig2" || name == "fig3") {
    for (auto p : {Paradigm::Cooperative, Paradigm::Independent}) {
      for (auto m : {InitMode::Docitive, InitMode::Scratch}) out.push_back(deployment_preset(p, m, seed));
    }
  } else if (name == "fig1a") {
    for (std::size_t nf = 1; nf <= 5; ++nf) {
      if (nf <= 3) out.push_back(benchmark_preset(Algorithm::Cpcq, Paradigm::Independent, nf, seed));
      out.push_back(benchmark_preset(Algorithm::Pdpcq, Paradigm::Cooperative, nf, seed));
      out.push_back(benchmark_preset(Algorithm::Pdpcq, Paradigm::Independent, nf, seed));
    }
  } else {
    throw ConfigError("unknown preset '" + std::string(name) + "' (expected fig1a, fig2 or fig3)");
  }
  for (const auto& sc : out) sc.validate();
  return out;
}

}  // namespace femtoq
