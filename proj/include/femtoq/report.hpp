#pragma once

// Trace CSV round trip, run summaries and minimal SVG line charts.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "femtoq/oracle.hpp"
#include "femtoq/scenario.hpp"
#include "femtoq/simulator.hpp"
#include "femtoq/units.hpp"

namespace femtoq {

namespace detail {

inline std::string sig9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace detail

inline std::string trace_csv_header(std::size_t subcarriers) {
  std::string h = "iteration,n_femto";
  for (std::size_t k = 1; k <= subcarriers; ++k) h += ",macro_c_k" + std::to_string(k);
  return h + ",agg_femto,mean_reward,messages,epsilon,converged";
}

/// Floating columns carry 9 significant digits; lines end in LF.
inline std::string format_trace_csv(std::span<const IterationRecord> trace, std::size_t subcarriers) {
  std::string out = trace_csv_header(subcarriers) + "\n";
  for (const auto& r : trace) {
    if (r.macro_capacity.size() != subcarriers) throw ConfigError("trace record has the wrong subcarrier count");
    out += std::to_string(r.iteration) + "," + std::to_string(r.n_femto);
    for (double c : r.macro_capacity) out += "," + detail::sig9(c);
    out += "," + detail::sig9(r.aggregate_femto_capacity) + "," + detail::sig9(r.mean_reward) + "," +
           std::to_string(r.messages) + "," + detail::sig9(r.epsilon) + "," + (r.converged ? "1" : "0") + "\n";
  }
  return out;
}

inline std::vector<IterationRecord> parse_trace_csv(std::string_view text) {
  std::vector<IterationRecord> trace;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  std::size_t subcarriers = 0;
  auto fail = [&](const std::string& what) -> void {
    throw ConfigError("trace line " + std::to_string(line_no) + ": " + what);
  };
  while (pos < text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;

    std::vector<std::string_view> cells;
    for (std::size_t s = 0;;) {
      const auto c = line.find(',', s);
      cells.push_back(line.substr(s, c == std::string_view::npos ? std::string_view::npos : c - s));
      if (c == std::string_view::npos) break;
      s = c + 1;
    }
    if (line_no == 1) {
      if (cells.size() < 7) fail("header has too few columns");
      subcarriers = cells.size() - 7;
      if (std::string(line) != trace_csv_header(subcarriers)) fail("unexpected header");
      continue;
    }
    if (cells.size() != subcarriers + 7) fail("expected " + std::to_string(subcarriers + 7) + " columns");

    auto integer = [&](std::string_view s) {
      std::uint64_t v = 0;
      const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || p != s.data() + s.size()) fail("bad integer '" + std::string(s) + "'");
      return v;
    };
    auto real = [&](std::string_view s) {
      double v = 0.0;
      const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || p != s.data() + s.size()) fail("bad number '" + std::string(s) + "'");
      return v;
    };

    IterationRecord r;
    r.iteration = integer(cells[0]);
    r.n_femto = static_cast<std::size_t>(integer(cells[1]));
    for (std::size_t k = 0; k < subcarriers; ++k) r.macro_capacity.push_back(real(cells[2 + k]));
    r.aggregate_femto_capacity = real(cells[2 + subcarriers]);
    r.mean_reward = real(cells[3 + subcarriers]);
    r.messages = integer(cells[4 + subcarriers]);
    r.epsilon = real(cells[5 + subcarriers]);
    const auto conv = integer(cells[6 + subcarriers]);
    if (conv > 1) fail("converged must be 0 or 1");
    r.converged = conv == 1;
    trace.push_back(std::move(r));
  }
  if (line_no == 0) throw ConfigError("trace is empty");
  return trace;
}

inline void write_trace_csv(const std::filesystem::path& path, std::span<const IterationRecord> trace,
                            std::size_t subcarriers) {
  detail::write_file(path, format_trace_csv(trace, subcarriers));
}

inline std::vector<IterationRecord> read_trace_csv(const std::filesystem::path& path) {
  return parse_trace_csv(detail::read_file(path));
}

// ---------------------------------------------------------------------------
// Summaries

struct RunSummary {
  std::string name;
  std::string algorithm;
  std::string paradigm;
  std::uint64_t seed = 0;
  double target = 0.0;
  double band = 0.0;
  std::uint64_t iterations = 0;
  std::size_t final_femtos = 0;
  bool converged = false;            // last `window` logged records all in band
  std::size_t window = 0;
  double final_window_femto = 0.0;   // mean aggregate femto capacity over that window
  double in_band_fraction = 0.0;     // over all logged records
  std::uint64_t total_messages = 0;
  std::vector<std::pair<std::uint64_t, std::optional<std::uint64_t>>> reconvergence;
  double wall_seconds = 0.0;
  std::optional<OracleResult> oracle;
  std::optional<double> greedy_femto;
  std::optional<bool> greedy_in_band;
};

inline RunSummary summarize(const Scenario& sc, const RunResult& result, double wall_seconds) {
  RunSummary s;
  const SimConfig& c = sc.config;
  const auto scope = c.target_scope();
  s.name = sc.name;
  s.algorithm = to_string(c.algorithm);
  s.paradigm = c.algorithm == Algorithm::Cpcq ? "central" : to_string(c.paradigm);
  s.seed = c.seed;
  s.target = result.target;
  s.band = c.band;
  s.iterations = c.iterations;
  s.final_femtos = result.final_state.femto_count();
  s.window = std::min(sc.convergence_window, result.trace.size());
  s.converged = s.window > 0 && check_convergence(result.trace, result.target, c.band, s.window, scope);
  if (s.window > 0) {
    double sum = 0.0;
    for (std::size_t i = result.trace.size() - s.window; i < result.trace.size(); ++i) {
      sum += result.trace[i].aggregate_femto_capacity;
    }
    s.final_window_femto = sum / static_cast<double>(s.window);
  }
  std::size_t inside = 0;
  for (const auto& r : result.trace) inside += in_band(r, result.target, c.band, scope) ? 1 : 0;
  s.in_band_fraction = result.trace.empty() ? 0.0 : static_cast<double>(inside) / result.trace.size();
  s.total_messages = result.total_messages;
  for (const auto& e : sc.schedule.events) {
    s.reconvergence.emplace_back(
        e.iteration, reconvergence_time(result.trace, e.iteration, result.target, c.band, sc.convergence_window, scope));
  }
  s.wall_seconds = wall_seconds;
  return s;
}

inline std::string format_summary(const RunSummary& s) {
  using detail::sig9;
  std::ostringstream o;
  o << s.name << ": " << s.algorithm << "/" << s.paradigm << ", seed " << s.seed << ", " << s.iterations
    << " iterations, " << s.final_femtos << " femtocells at the end\n";
  o << "macro target " << sig9(s.target) << " +- " << sig9(s.band) << ", "
    << (s.converged ? "converged" : "not converged") << " over the last " << s.window << " logged records\n";
  for (const auto& [it, t] : s.reconvergence) {
    o << "  deployment at " << it << ": " << (t ? "re-converged after " + std::to_string(*t) : "never re-converged")
      << "\n";
  }
  if (s.oracle) {
    if (s.oracle->feasible) {
      o << "oracle optimum " << sig9(s.oracle->best_total_femto) << " (" << s.oracle->feasible_count << " of "
        << s.oracle->evaluated_count << " allocations feasible)\n";
    } else {
      o << "oracle: no allocation meets the target band\n";
    }
  }
  if (s.greedy_femto) {
    o << "greedy policy " << sig9(*s.greedy_femto) << (*s.greedy_in_band ? " (in band)" : " (out of band)") << "\n";
  }

  o << "\n[summary]\n";
  o << "name = " << s.name << "\n";
  o << "algorithm = " << s.algorithm << "\n";
  o << "paradigm = " << s.paradigm << "\n";
  o << "seed = " << s.seed << "\n";
  o << "target = " << sig9(s.target) << "\n";
  o << "band = " << sig9(s.band) << "\n";
  o << "iterations = " << s.iterations << "\n";
  o << "final_femtos = " << s.final_femtos << "\n";
  o << "converged = " << (s.converged ? 1 : 0) << "\n";
  o << "window = " << s.window << "\n";
  o << "final_window_femto = " << sig9(s.final_window_femto) << "\n";
  o << "in_band_fraction = " << sig9(s.in_band_fraction) << "\n";
  o << "total_messages = " << s.total_messages << "\n";
  for (const auto& [it, t] : s.reconvergence) {
    o << "reconvergence_" << it << " = " << (t ? std::to_string(*t) : "none") << "\n";
  }
  if (s.oracle) {
    o << "oracle_feasible = " << (s.oracle->feasible ? 1 : 0) << "\n";
    if (s.oracle->feasible) o << "oracle_femto = " << sig9(s.oracle->best_total_femto) << "\n";
  }
  if (s.greedy_femto) {
    o << "greedy_femto = " << sig9(*s.greedy_femto) << "\n";
    o << "greedy_in_band = " << (*s.greedy_in_band ? 1 : 0) << "\n";
  }
  o << "wall_seconds = " << sig9(s.wall_seconds) << "\n";
  return o.str();
}

// ---------------------------------------------------------------------------
// SVG

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct ChartOptions {
  std::string title;
  std::string x_label = "iteration";
  std::string y_label;
  std::optional<std::pair<double, double>> band;  // shaded horizontal strip [lo, hi]
  int width = 800;
  int height = 400;
};

inline std::string svg_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string render_svg(const std::vector<Series>& series, const ChartOptions& opt) {
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  bool first = true;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!std::isfinite(s.y[i])) continue;
      if (first) {
        x0 = x1 = s.x[i];
        y0 = y1 = s.y[i];
        first = false;
      }
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  }
  if (opt.band) {
    y0 = std::min(y0, opt.band->first);
    y1 = std::max(y1, opt.band->second);
  }
  if (x1 <= x0) x1 = x0 + 1;
  if (y1 <= y0) y1 = y0 + 1;
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;

  const double left = 60, right = 20, top = 30, bottom = 45;
  const double pw = opt.width - left - right, ph = opt.height - top - bottom;
  auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return top + (y1 - y) / (y1 - y0) * ph; };
  using detail::sig9;

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << opt.width << "\" height=\"" << opt.height
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << opt.width / 2 << "\" y=\"18\" text-anchor=\"middle\">" << svg_escape(opt.title) << "</text>\n";
  if (opt.band) {
    o << "<rect x=\"" << left << "\" y=\"" << sig9(py(opt.band->second)) << "\" width=\"" << pw << "\" height=\""
      << sig9(py(opt.band->first) - py(opt.band->second)) << "\" fill=\"#cccccc\" fill-opacity=\"0.5\"/>\n";
  }
  o << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double yv = y0 + (y1 - y0) * i / 4.0;
    const double xv = x0 + (x1 - x0) * i / 4.0;
    o << "<text x=\"" << left - 5 << "\" y=\"" << sig9(py(yv) + 4) << "\" text-anchor=\"end\">" << sig9(std::round(yv * 100) / 100)
      << "</text>\n";
    o << "<text x=\"" << sig9(px(xv)) << "\" y=\"" << top + ph + 15 << "\" text-anchor=\"middle\">"
      << sig9(std::round(xv)) << "</text>\n";
  }
  o << "<text x=\"" << left + pw / 2 << "\" y=\"" << opt.height - 8 << "\" text-anchor=\"middle\">"
    << svg_escape(opt.x_label) << "</text>\n";
  o << "<text x=\"14\" y=\"" << top + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
    << top + ph / 2 << ")\">" << svg_escape(opt.y_label) << "</text>\n";

  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* color = kColors[si % std::size(kColors)];
    o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1\" points=\"";
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!std::isfinite(s.y[i])) continue;
      o << sig9(px(s.x[i])) << "," << sig9(py(s.y[i])) << " ";
    }
    o << "\"/>\n";
    if (!s.label.empty()) {
      o << "<text x=\"" << left + 10 << "\" y=\"" << top + 15 + 15 * si << "\" fill=\"" << color << "\">"
        << svg_escape(s.label) << "</text>\n";
    }
  }
  o << "</svg>\n";
  return o.str();
}

/// Macro capacity (subcarrier 1, or aggregate) and aggregate femto capacity
/// series extracted from a trace.
inline Series macro_series(std::span<const IterationRecord> trace, TargetScope scope, std::string label = {}) {
  Series s{std::move(label), {}, {}};
  for (const auto& r : trace) {
    s.x.push_back(static_cast<double>(r.iteration));
    double v = r.macro_capacity.empty() ? 0.0 : r.macro_capacity[0];
    if (scope == TargetScope::Aggregate) {
      v = 0.0;
      for (double c : r.macro_capacity) v += c;
    }
    s.y.push_back(v);
  }
  return s;
}

inline Series femto_series(std::span<const IterationRecord> trace, std::string label = {}) {
  Series s{std::move(label), {}, {}};
  for (const auto& r : trace) {
    s.x.push_back(static_cast<double>(r.iteration));
    s.y.push_back(r.aggregate_femto_capacity);
  }
  return s;
}

}  // namespace femtoq
