#include "anisotest/pattern_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace anisotest {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool try_number(const std::string& s, double& out) {
  const std::string t = trim(s);
  if (t.empty()) return false;
  const char* first = t.data();
  if (*first == '+') ++first;
  const auto res = std::from_chars(first, t.data() + t.size(), out);
  return res.ec == std::errc() && res.ptr == t.data() + t.size();
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

}  // namespace

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_number(const std::string& s) {
  double v;
  if (!try_number(s, v)) throw std::invalid_argument("not a number: '" + s + "'");
  return v;
}

Window parse_window(const std::string& s) {
  const auto parts = split(s, ',');
  if (parts.size() != 4) throw std::invalid_argument("window must be 'xmin,xmax,ymin,ymax', got '" + s + "'");
  const double x0 = parse_number(parts[0]), x1 = parse_number(parts[1]);
  const double y0 = parse_number(parts[2]), y1 = parse_number(parts[3]);
  return Window(x0, x1, y0, y1);
}

PointPattern parse_pattern_csv(std::istream& in, const Window& window, const std::string& source) {
  std::vector<Point> pts;
  std::vector<int> lines;
  std::string line;
  int lineno = 0;
  bool first_content = true;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto cells = split(t, ',');
    if (first_content) {
      first_content = false;
      double dummy;
      if (cells.size() == 2 && !try_number(cells[0], dummy) && !try_number(cells[1], dummy)) continue;  // header
    }
    double x, y;
    if (cells.size() != 2)
      throw std::runtime_error(source + ":" + std::to_string(lineno) + ": expected 2 columns, found " +
                               std::to_string(cells.size()));
    if (!try_number(cells[0], x) || !try_number(cells[1], y))
      throw std::runtime_error(source + ":" + std::to_string(lineno) + ": cannot parse '" + t + "' as two numbers");
    pts.push_back({x, y});
    lines.push_back(lineno);
  }

  std::ostringstream bad;
  std::size_t n_bad = 0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    if (!window.contains(pts[i]) || !std::isfinite(pts[i].x) || !std::isfinite(pts[i].y)) {
      if (n_bad < 10) bad << "\n  line " << lines[i] << ": (" << format_number(pts[i].x) << ", " << format_number(pts[i].y) << ")";
      ++n_bad;
    }
  if (n_bad > 0) {
    std::ostringstream os;
    os << source << ": " << n_bad << " point(s) outside the window [" << format_number(window.xmin()) << ","
       << format_number(window.xmax()) << "]x[" << format_number(window.ymin()) << "," << format_number(window.ymax())
       << "]:" << bad.str();
    if (n_bad > 10) os << "\n  ...";
    throw std::runtime_error(os.str());
  }

  std::vector<std::size_t> order(pts.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return pts[a].x != pts[b].x ? pts[a].x < pts[b].x : (pts[a].y != pts[b].y ? pts[a].y < pts[b].y : a < b);
  });
  for (std::size_t k = 1; k < order.size(); ++k)
    if (pts[order[k]] == pts[order[k - 1]])
      throw std::runtime_error(source + ": duplicate point (" + format_number(pts[order[k]].x) + ", " +
                               format_number(pts[order[k]].y) + ") on lines " + std::to_string(lines[order[k - 1]]) +
                               " and " + std::to_string(lines[order[k]]) + "; points must be distinct");
  return PointPattern::trusted(std::move(pts), window);
}

PointPattern ingest_pattern_csv(const std::string& path, const Window& window) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open pattern file '" + path + "'");
  return parse_pattern_csv(in, window, path);
}

std::string format_pattern_csv(const PointPattern& pat) {
  std::string out = "x,y\n";
  for (const Point& p : pat.points()) out += format_number(p.x) + "," + format_number(p.y) + "\n";
  return out;
}

void write_pattern_csv(const PointPattern& pat, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write pattern file '" + path + "'");
  out << format_pattern_csv(pat);
  if (!out) throw std::runtime_error("failed writing pattern file '" + path + "'");
}

}  // namespace anisotest
