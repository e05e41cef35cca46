#pragma once

// Serialization: CSV samples, diffeomorphism and step-function files, curve
// CSV/SVG, and small hand-rolled JSON output with a fixed float format so two
// identical runs produce byte-identical artifacts.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "reparam/chebyshev.hpp"
#include "reparam/circle_function.hpp"
#include "reparam/diffeo.hpp"
#include "reparam/errors.hpp"
#include "reparam/hill.hpp"
#include "reparam/stepspace.hpp"

#include <json.hpp>

namespace reparam {

// 17 significant digits round-trip any double
inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw PreconditionError("cannot open for writing: " + path);
  out << text;
}

inline std::string join17(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += fmt17(v[i]);
  }
  return s;
}

}  // namespace detail

inline void write_function_csv(const std::string& path, const CircleFunction& f,
                               int grid = 1024) {
  std::string s = "x,value\n";
  for (int i = 0; i < grid; ++i) {
    double x = f.period() * i / grid;
    s += fmt17(x) + "," + fmt17(f(x)) + "\n";
  }
  detail::write_text(path, s);
}

// two columns "x,value", header required, x strictly increasing in [0, period)
inline CircleFunction load_samples_csv(const std::string& path, double period) {
  std::ifstream in(path);
  if (!in) throw PreconditionError("cannot open samples file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty samples file: " + path, 0);
  if (line.size() && line.back() == '\r') line.pop_back();
  if (line != "x,value") throw ParseError("samples CSV must start with header 'x,value'", 0);
  std::vector<double> xs, ys;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.size() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::size_t comma = line.find(',');
    if (comma == std::string::npos)
      throw ParseError("samples CSV line " + std::to_string(lineno) + " has no comma", lineno);
    xs.push_back(std::stod(line.substr(0, comma)));
    ys.push_back(std::stod(line.substr(comma + 1)));
  }
  for (std::size_t i = 0; i + 1 < xs.size(); ++i)
    if (!(xs[i] < xs[i + 1]))
      throw PreconditionError("sample abscissae must be strictly increasing");
  return CircleFunction::from_samples(xs, ys, period);
}

inline void write_diffeo_csv(const std::string& path, const CircleDiffeo& phi,
                             int grid = 1024) {
  std::string s = "x,phi(x)\n";
  for (int i = 0; i < grid; ++i) {
    double x = phi.period() * i / grid;
    s += fmt17(x) + "," + fmt17(phi.lift(x)) + "\n";
  }
  detail::write_text(path, s);
}

inline void write_diffeo_json(const std::string& path, const CircleDiffeo& phi) {
  auto [bp, im] = phi.breakpoint_data();
  std::string s = "{\n  \"period\": " + fmt17(phi.period()) + ",\n  \"breakpoints\": [" +
                  detail::join17(bp) + "],\n  \"images\": [" + detail::join17(im) + "]\n}\n";
  detail::write_text(path, s);
}

inline void write_step_json(const std::string& path, const StepFunction& h) {
  std::string signs;
  for (std::size_t i = 0; i < h.signs.size(); ++i) {
    if (i) signs += ",";
    signs += std::to_string(h.signs[i]);
  }
  std::string s = "{\n  \"domain\": " + fmt17(h.domain) + ",\n  \"breakpoints\": [" +
                  detail::join17(h.breakpoints) + "],\n  \"signs\": [" + signs + "]\n}\n";
  detail::write_text(path, s);
}

inline void write_step_csv(const std::string& path, const StepFunction& h, int grid = 1024) {
  std::string s = "x,value\n";
  for (int i = 0; i < grid; ++i) {
    double x = h.domain * i / grid;
    s += fmt17(x) + "," + fmt17(h(x)) + "\n";
  }
  detail::write_text(path, s);
}

inline void write_curve_csv(const std::string& path, const PlaneCurve& curve) {
  std::string s = "x,gx,gy,dgx,dgy\n";
  for (std::size_t i = 0; i < curve.x.size(); ++i)
    s += fmt17(curve.x[i]) + "," + fmt17(curve.pos[i][0]) + "," + fmt17(curve.pos[i][1]) +
         "," + fmt17(curve.vel[i][0]) + "," + fmt17(curve.vel[i][1]) + "\n";
  detail::write_text(path, s);
}

// both gamma and -gamma, to make the central symmetry visible
inline void write_curve_svg(const std::string& path, const PlaneCurve& curve) {
  double m = 0.0;
  for (const auto& p : curve.pos) m = std::max({m, std::abs(p[0]), std::abs(p[1])});
  if (m <= 0) m = 1.0;
  double half = 1.1 * m;
  auto polyline = [&](double sign, const char* color) {
    std::string pts;
    for (const auto& p : curve.pos)
      pts += fmt17(sign * p[0]) + "," + fmt17(-sign * p[1]) + " ";
    return "  <polyline fill=\"none\" stroke=\"" + std::string(color) +
           "\" stroke-width=\"" + fmt17(half / 200) + "\" points=\"" + pts + "\"/>\n";
  };
  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"" + fmt17(-half) +
                  " " + fmt17(-half) + " " + fmt17(2 * half) + " " + fmt17(2 * half) +
                  "\">\n" + polyline(1.0, "#1f6fb2") + polyline(-1.0, "#b23a1f") + "</svg>\n";
  detail::write_text(path, s);
}

// function overlay plot: each series is (label, function); samples on a
// shared uniform grid, y-range fitted
inline void write_overlay_svg(const std::string& path,
                              const std::vector<std::pair<std::string, CircleFunction>>& fs,
                              int grid = 512) {
  if (fs.empty()) throw PreconditionError("overlay plot needs at least one function");
  double period = fs.front().second.period();
  double ymin = 0, ymax = 0;
  std::vector<std::vector<double>> ys(fs.size());
  for (std::size_t j = 0; j < fs.size(); ++j)
    for (int i = 0; i <= grid; ++i) {
      double v = fs[j].second(period * i / grid);
      ys[j].push_back(v);
      ymin = std::min(ymin, v);
      ymax = std::max(ymax, v);
    }
  if (ymax - ymin < 1e-12) ymax = ymin + 1;
  double pad = 0.05 * (ymax - ymin);
  ymin -= pad;
  ymax += pad;
  const char* colors[] = {"#1f6fb2", "#b23a1f", "#2e8b57", "#8b2e8b"};
  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 " + fmt17(-ymax) +
                  " " + fmt17(period) + " " + fmt17(ymax - ymin) + "\">\n";
  for (std::size_t j = 0; j < fs.size(); ++j) {
    std::string pts;
    for (int i = 0; i <= grid; ++i)
      pts += fmt17(period * i / grid) + "," + fmt17(-ys[j][i]) + " ";
    s += "  <polyline fill=\"none\" stroke=\"" + std::string(colors[j % 4]) +
         "\" stroke-width=\"" + fmt17((ymax - ymin) / 300) + "\" points=\"" + pts + "\"/>\n";
  }
  s += "</svg>\n";
  detail::write_text(path, s);
}

// "trig:k" or "custom:@basis.json"; basis files follow
// {"type":"trig","order":k} or {"type":"custom","basis":[expr,...],"period":p}
inline ChebyshevSystem parse_system(const std::string& text) {
  if (text.rfind("trig:", 0) == 0) {
    int order = 0;
    try {
      order = std::stoi(text.substr(5));
    } catch (const std::exception&) {
      throw ParseError("bad trig system order in '" + text + "'", 5);
    }
    return trig_system(order);
  }
  if (text.rfind("custom:@", 0) == 0) {
    std::string path = text.substr(8);
    std::ifstream in(path);
    if (!in) throw PreconditionError("cannot open basis file: " + path);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const std::exception& e) {
      throw ParseError(std::string("bad basis JSON: ") + e.what(), 0);
    }
    std::string type = j.value("type", "");
    if (type == "trig") return trig_system(j.at("order").get<int>());
    if (type == "custom") {
      double period = j.at("period").get<double>();
      std::vector<CircleFunction> basis;
      for (const auto& e : j.at("basis"))
        basis.push_back(CircleFunction::from_expression(e.get<std::string>(), period));
      return ChebyshevSystem(std::move(basis));
    }
    throw ParseError("basis JSON type must be 'trig' or 'custom'", 0);
  }
  throw ParseError("system must be trig:k or custom:@basis.json", 0);
}

// --f/--k accept an inline expression or @file.csv
inline CircleFunction parse_function_arg(const std::string& arg, double period) {
  if (arg.rfind('@', 0) == 0) return load_samples_csv(arg.substr(1), period);
  return CircleFunction::from_expression(arg, period);
}

}  // namespace reparam
