#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <complex>
#include <cstddef>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "manifold.hpp"
#include "measure.hpp"
#include "radar.hpp"
#include "robustness.hpp"
#include "toeplitz.hpp"

namespace geomedian {
namespace io {

using json = nlohmann::json;

namespace detail {

/// Shortest decimal form that parses back to the identical double.
/// Negative zero is written as plain 0; it has no meaning in these formats.
inline std::string format_double(double v) {
  if (v == 0.0) return "0";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view text) {
  // from_chars rejects leading whitespace and '+'; trim what CSV allows
  std::size_t b = 0, e = text.size();
  while (b < e && (text[b] == ' ' || text[b] == '\t')) ++b;
  while (e > b && (text[e - 1] == ' ' || text[e - 1] == '\t' || text[e - 1] == '\r')) --e;
  if (b < e && text[b] == '+') ++b;
  double value = 0.0;
  const auto res = std::from_chars(text.data() + b, text.data() + e, value);
  if (res.ec != std::errc{} || res.ptr != text.data() + e)
    throw parse_error("malformed number: '" + std::string(text) + "'");
  return value;
}

inline std::vector<double> parse_csv_row(std::string_view line) {
  std::vector<double> row;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    const std::size_t end = comma == std::string_view::npos ? line.size() : comma;
    row.push_back(parse_double(line.substr(start, end - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return row;
}

inline bool is_blank_or_comment(const std::string& line) {
  for (char c : line) {
    if (c == '#') return true;
    if (c != ' ' && c != '\t' && c != '\r') return false;
  }
  return true;
}

inline void write_row(std::ostream& os, const std::vector<double>& row) {
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) os << ',';
    os << format_double(row[i]);
  }
  os << '\n';
}

}  // namespace detail

/// Reads every non-blank, non-comment line as a CSV row of numbers.
/// Lines whose first non-space character is '#' are skipped, as is an
/// optional non-numeric header line at the top.
inline std::vector<std::vector<double>> read_csv(std::istream& is) {
  std::vector<std::vector<double>> rows;
  std::string line;
  bool first_content_line = true;
  while (std::getline(is, line)) {
    if (detail::is_blank_or_comment(line)) continue;
    try {
      rows.push_back(detail::parse_csv_row(line));
    } catch (const parse_error&) {
      if (first_content_line) {
        first_content_line = false;  // tolerate one textual header row
        continue;
      }
      throw;
    }
    first_content_line = false;
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Manifold spec strings (the CLI's --manifold grammar)

/// Parses "euclidean:d", "preals[:w]", "disc[:w]", or "tn:n".
inline ManifoldDescriptor parse_manifold(std::string_view spec) {
  const std::size_t colon = spec.find(':');
  const std::string_view head = spec.substr(0, colon);
  const std::string_view arg =
      colon == std::string_view::npos ? std::string_view{} : spec.substr(colon + 1);
  const auto required_int = [&](const char* what) {
    if (arg.empty()) throw parse_error(std::string("manifold spec needs ") + what);
    const double v = detail::parse_double(arg);
    if (v < 1.0 || v != std::floor(v) || v > 1e6)
      throw parse_error(std::string("manifold spec: bad ") + what);
    return static_cast<int>(v);
  };
  const auto optional_weight = [&]() {
    if (arg.empty()) return 1.0;
    const double w = detail::parse_double(arg);
    if (!(w > 0.0) || !std::isfinite(w)) throw parse_error("manifold spec: bad weight");
    return w;
  };
  if (head == "euclidean") return euclidean(required_int("dimension"));
  if (head == "preals" || head == "positive_reals") return positive_reals(optional_weight());
  if (head == "disc" || head == "poincare_disc") return poincare_disc(optional_weight());
  if (head == "tn") return toeplitz::tn_manifold(required_int("order"));
  throw parse_error("unknown manifold spec '" + std::string(spec) + "'");
}

// ---------------------------------------------------------------------------
// Measures and points

/// CSV layout: one atom per row, coordinates first, weight in the last
/// column.  Weights are renormalized to sum to one on read.
inline void write_measure_csv(std::ostream& os, const DiscreteMeasure& mu) {
  for (std::size_t i = 0; i < mu.size(); ++i) {
    std::vector<double> row = mu.points[i].coords;
    row.push_back(mu.weights[i]);
    detail::write_row(os, row);
  }
}

inline DiscreteMeasure read_measure_csv(std::istream& is, const ManifoldDescriptor& m) {
  const auto rows = read_csv(is);
  if (rows.empty()) throw parse_error("measure file holds no atoms");
  const std::size_t width = static_cast<std::size_t>(m.dimension()) + 1;
  std::vector<ManifoldPoint> points;
  std::vector<double> weights;
  double total = 0.0;
  for (const auto& row : rows) {
    if (row.size() != width)
      throw parse_error("measure row needs " + std::to_string(width) + " columns, got " +
                        std::to_string(row.size()));
    points.push_back(ManifoldPoint{{row.begin(), row.end() - 1}});
    weights.push_back(row.back());
    if (!(row.back() > 0.0)) throw parse_error("measure weights must be positive");
    total += row.back();
  }
  for (double& w : weights) w /= total;
  return make_measure(m, std::move(points), std::move(weights));
}

inline json measure_to_json(const DiscreteMeasure& mu) {
  json j;
  j["points"] = json::array();
  for (const auto& p : mu.points) j["points"].push_back(p.coords);
  j["weights"] = mu.weights;
  return j;
}

inline DiscreteMeasure measure_from_json(const json& j, const ManifoldDescriptor& m) {
  if (!j.contains("points") || !j.contains("weights"))
    throw parse_error("measure JSON needs 'points' and 'weights'");
  std::vector<ManifoldPoint> points;
  for (const auto& c : j.at("points"))
    points.push_back(ManifoldPoint{c.get<std::vector<double>>()});
  auto weights = j.at("weights").get<std::vector<double>>();
  double total = 0.0;
  for (double w : weights) {
    if (!(w > 0.0)) throw parse_error("measure weights must be positive");
    total += w;
  }
  for (double& w : weights) w /= total;
  return make_measure(m, std::move(points), std::move(weights));
}

inline void write_point_csv(std::ostream& os, const ManifoldPoint& x) {
  detail::write_row(os, x.coords);
}

inline ManifoldPoint read_point_csv(std::istream& is, const ManifoldDescriptor& m) {
  const auto rows = read_csv(is);
  if (rows.size() != 1) throw parse_error("expected exactly one point row");
  if (rows[0].size() != static_cast<std::size_t>(m.dimension()))
    throw parse_error("point row has the wrong dimension");
  ManifoldPoint x{rows[0]};
  validate_point(m, x);
  return x;
}

/// Columns: iteration k, cost, subgradient (or gradient) norm, then the
/// iterate coordinates when they were recorded.
inline void write_trace_csv(std::ostream& os, const SolverTrace& trace) {
  os << "# termination=" << to_string(trace.termination) << " iterations=" << trace.iterations
     << '\n';
  const bool with_costs = trace.costs.size() == trace.steps.size();
  const bool with_norms = trace.subgradient_norms.size() == trace.steps.size();
  const bool with_points = trace.iterates.size() == trace.steps.size() && !trace.iterates.empty();
  os << 'k';
  if (with_costs) os << ",cost";
  if (with_norms) os << ",grad_norm";
  if (with_points)
    for (std::size_t d = 0; d < trace.iterates.front().coords.size(); ++d) os << ",x" << d;
  os << '\n';
  for (std::size_t i = 0; i < trace.steps.size(); ++i) {
    std::vector<double> row{static_cast<double>(trace.steps[i])};
    if (with_costs) row.push_back(trace.costs[i]);
    if (with_norms) row.push_back(trace.subgradient_norms[i]);
    if (with_points)
      row.insert(row.end(), trace.iterates[i].coords.begin(), trace.iterates[i].coords.end());
    detail::write_row(os, row);
  }
}

// ---------------------------------------------------------------------------
// Toeplitz formats

/// Row format: P0, re(mu_1), im(mu_1), ..., re(mu_{n-1}), im(mu_{n-1}).
inline void write_coords_csv(std::ostream& os, const toeplitz::ReflectionCoords& c) {
  std::vector<double> row{c.P0};
  for (const auto& z : c.mu) {
    row.push_back(z.real());
    row.push_back(z.imag());
  }
  detail::write_row(os, row);
}

inline toeplitz::ReflectionCoords coords_from_row(const std::vector<double>& row) {
  if (row.empty() || row.size() % 2 == 0)
    throw parse_error("reflection row needs 1 + 2(n-1) columns");
  toeplitz::ReflectionCoords c;
  c.P0 = row[0];
  for (std::size_t k = 1; k + 1 < row.size(); k += 2) c.mu.emplace_back(row[k], row[k + 1]);
  return c;
}

/// Row format: re(r_0), 0, re(r_1), im(r_1), ... (first column of the
/// Hermitian Toeplitz matrix, interleaved real/imaginary).
inline void write_toeplitz_csv(std::ostream& os, const toeplitz::ToeplitzHPD& t) {
  std::vector<double> row;
  for (const auto& r : t.first_column) {
    row.push_back(r.real());
    row.push_back(r.imag());
  }
  detail::write_row(os, row);
}

inline toeplitz::ToeplitzHPD read_toeplitz_csv(std::istream& is) {
  const auto rows = read_csv(is);
  if (rows.size() != 1) throw parse_error("expected exactly one Toeplitz row");
  const auto& row = rows[0];
  if (row.empty() || row.size() % 2 != 0)
    throw parse_error("Toeplitz row needs an even number of columns");
  if (row[1] != 0.0) throw parse_error("Toeplitz r_0 must be real (second column 0)");
  toeplitz::ToeplitzHPD t;
  for (std::size_t k = 0; k < row.size(); k += 2) t.first_column.emplace_back(row[k], row[k + 1]);
  return t;
}

/// One reflection-coordinate row per cell; all rows must share the order.
/// Flags are working state, not part of the format, and read back as zero.
inline void write_cellfield_csv(std::ostream& os, const radar::CellField& field) {
  for (const auto& c : field.cells) write_coords_csv(os, c);
}

inline radar::CellField read_cellfield_csv(std::istream& is) {
  const auto rows = read_csv(is);
  if (rows.empty()) throw parse_error("cell field file holds no rows");
  radar::CellField field;
  for (const auto& row : rows) {
    field.cells.push_back(coords_from_row(row));
    if (field.cells.back().order() != field.cells.front().order())
      throw parse_error("cell field rows have mixed orders");
  }
  field.flags.assign(field.cells.size(), 0);
  return field;
}

// ---------------------------------------------------------------------------
// Radar pulse cubes, matrices, reports

inline void write_pulse_cube_csv(std::ostream& os, const radar::PulseMatrix& pulses) {
  os << "cell_id,pulse_index,re,im\n";
  for (std::size_t c = 0; c < pulses.size(); ++c)
    for (std::size_t t = 0; t < pulses[c].size(); ++t)
      detail::write_row(os, {static_cast<double>(c), static_cast<double>(t),
                             pulses[c][t].real(), pulses[c][t].imag()});
}

inline radar::PulseMatrix read_pulse_cube_csv(std::istream& is) {
  const auto rows = read_csv(is);
  if (rows.empty()) throw parse_error("pulse cube holds no samples");
  std::size_t n_cells = 0, n_pulses = 0;
  for (const auto& row : rows) {
    if (row.size() != 4) throw parse_error("pulse cube rows need 4 columns");
    if (row[0] != std::floor(row[0]) || row[0] < 0 || row[1] != std::floor(row[1]) || row[1] < 0)
      throw parse_error("pulse cube ids must be nonnegative integers");
    n_cells = std::max(n_cells, static_cast<std::size_t>(row[0]) + 1);
    n_pulses = std::max(n_pulses, static_cast<std::size_t>(row[1]) + 1);
  }
  if (rows.size() != n_cells * n_pulses)
    throw parse_error("pulse cube is not a dense cell x pulse grid");
  radar::PulseMatrix cube(n_cells, std::vector<std::complex<double>>(n_pulses, 0.0));
  std::vector<std::vector<bool>> seen(n_cells, std::vector<bool>(n_pulses, false));
  for (const auto& row : rows) {
    const auto c = static_cast<std::size_t>(row[0]);
    const auto t = static_cast<std::size_t>(row[1]);
    if (seen[c][t]) throw parse_error("pulse cube repeats a (cell, pulse) entry");
    seen[c][t] = true;
    cube[c][t] = {row[2], row[3]};
  }
  return cube;
}

inline void write_matrix_csv(std::ostream& os, const std::vector<std::vector<double>>& rows) {
  for (const auto& row : rows) detail::write_row(os, row);
}

inline void write_statistic_csv(std::ostream& os, const std::vector<double>& stat) {
  os << "cell,statistic\n";
  for (std::size_t i = 0; i < stat.size(); ++i)
    detail::write_row(os, {static_cast<double>(i), stat[i]});
}

inline json scene_to_json(const radar::SceneConfig& cfg) {
  json j;
  j["n_cells"] = cfg.n_cells;
  j["pulses"] = cfg.pulses;
  j["model_order"] = cfg.model_order;
  j["clutter"]["power"] = cfg.clutter.power;
  j["clutter"]["ar"] = json::array();
  for (const auto& a : cfg.clutter.ar)
    j["clutter"]["ar"].push_back({a.real(), a.imag()});
  j["targets"] = json::array();
  for (const auto& t : cfg.targets)
    j["targets"].push_back({{"cell", t.cell}, {"frequency", t.frequency}, {"power", t.power}});
  j["noise_power"] = cfg.noise_power;
  j["seed"] = cfg.seed;
  return j;
}

inline radar::SceneConfig scene_from_json(const json& j) {
  radar::SceneConfig cfg;
  try {
    cfg.n_cells = j.at("n_cells").get<std::size_t>();
    cfg.pulses = j.at("pulses").get<std::size_t>();
    cfg.model_order = j.at("model_order").get<std::size_t>();
    if (j.contains("clutter")) {
      const auto& c = j.at("clutter");
      if (c.contains("power")) cfg.clutter.power = c.at("power").get<double>();
      cfg.clutter.ar.clear();
      for (const auto& a : c.value("ar", json::array())) {
        const auto pair = a.get<std::vector<double>>();
        if (pair.size() != 2) throw parse_error("clutter ar entries need [re, im]");
        cfg.clutter.ar.emplace_back(pair[0], pair[1]);
      }
    }
    for (const auto& t : j.value("targets", json::array()))
      cfg.targets.push_back({t.at("cell").get<std::size_t>(),
                             t.at("frequency").get<double>(), t.at("power").get<double>()});
    cfg.noise_power = j.value("noise_power", 0.0);
    cfg.seed = j.value("seed", std::uint64_t{0});
  } catch (const json::exception& e) {
    throw parse_error(std::string("scene config: ") + e.what());
  }
  radar::validate_scene(cfg);
  return cfg;
}

inline json report_to_json(const radar::DetectionReport& r) {
  json j;
  j["statistic"] = r.statistic;
  j["threshold"] = r.threshold;
  j["declared"] = r.declared;
  j["window_size"] = r.window_size;
  j["filter_kind"] = r.filter_kind;
  return j;
}

inline radar::DetectionReport report_from_json(const json& j) {
  radar::DetectionReport r;
  r.statistic = j.at("statistic").get<std::vector<double>>();
  r.threshold = j.at("threshold").get<double>();
  r.declared = j.at("declared").get<std::vector<std::size_t>>();
  r.window_size = j.at("window_size").get<std::size_t>();
  r.filter_kind = j.at("filter_kind").get<std::string>();
  return r;
}

inline json robustness_to_json(const RobustnessReport& r) {
  return json{{"bound", r.bound},
              {"max_observed", r.max_observed},
              {"trials", r.trials},
              {"violations", r.violations}};
}

inline RobustnessReport robustness_from_json(const json& j) {
  RobustnessReport r;
  r.bound = j.at("bound").get<double>();
  r.max_observed = j.at("max_observed").get<double>();
  r.trials = j.at("trials").get<std::size_t>();
  r.violations = j.at("violations").get<std::size_t>();
  return r;
}

// ---------------------------------------------------------------------------
// File helpers

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw parse_error("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw parse_error("failed writing '" + path + "'");
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw parse_error("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace io
}  // namespace geomedian
