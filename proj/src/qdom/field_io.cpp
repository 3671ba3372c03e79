#include "qdom/field_io.hpp"

#include "qdom/error.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace qdom {

namespace {

std::string fmt_double(double x, int precision = -1) {
  char buf[64];
  std::to_chars_result r = precision < 0 ? std::to_chars(buf, buf + sizeof buf, x)
                                         : std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, precision);
  return std::string(buf, r.ptr);
}

std::string raster_header(const Grid& g, int precision) {
  std::string s = "QDOM " + std::to_string(g.n);
  for (int a = 0; a < g.n; ++a) s += " " + std::to_string(g.cells[a]);
  for (int a = 0; a < g.n; ++a) s += " " + fmt_double(g.origin[a], precision);
  s += " " + fmt_double(g.h, precision);
  return s;
}

Grid grid_from_header(int n, const std::array<int, 3>& cells, const Point& origin, double h) {
  Point extent{0, 0, 0};
  for (int a = 0; a < n; ++a) extent[a] = cells[a] * h;
  Grid g = make_grid(n, origin, extent, cells);
  g.h = h;
  return g;
}

} // namespace

void write_csv(const ScalarField& f, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::Io, "cannot open " + path);
  const Grid& g = f.grid;
  out << (g.n == 2 ? "x0,x1,value\n" : "x0,x1,x2,value\n");
  for (std::size_t i = 0; i < g.size(); ++i) {
    Point p = g.node(i);
    for (int a = 0; a < g.n; ++a) out << fmt_double(p[a]) << ',';
    out << fmt_double(f.v[i]) << '\n';
  }
  if (!out) fail(ErrorCode::Io, "write failed for " + path);
}

ScalarField read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open " + path);
  std::string line;
  std::getline(in, line);
  int n;
  if (line == "x0,x1,value") n = 2;
  else if (line == "x0,x1,x2,value") n = 3;
  else fail(ErrorCode::Io, "unrecognised CSV header in " + path);
  std::vector<std::array<double, 4>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::array<double, 4> r{0, 0, 0, 0};
    std::stringstream ss(line);
    std::string tok;
    for (int c = 0; c <= n; ++c) {
      if (!std::getline(ss, tok, ',')) fail(ErrorCode::Io, "short CSV row in " + path);
      r[c] = std::stod(tok);
    }
    rows.push_back(r);
  }
  if (rows.size() < 2) fail(ErrorCode::Io, "CSV has too few rows: " + path);
  // recover the lattice from the coordinate columns
  std::array<int, 3> cells{1, 1, 1};
  Point origin{0, 0, 0};
  double h = 0.0;
  for (int a = 0; a < n; ++a) {
    std::vector<double> xs;
    for (auto& r : rows) xs.push_back(r[a]);
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    if (xs.size() < 2) fail(ErrorCode::Io, "degenerate CSV axis in " + path);
    cells[a] = (int)xs.size();
    double ha = (xs.back() - xs.front()) / (xs.size() - 1);
    if (a == 0) h = ha;
    origin[a] = xs.front() - 0.5 * h;
  }
  Grid g = grid_from_header(n, cells, origin, h);
  if (rows.size() != g.size()) fail(ErrorCode::Io, "CSV row count does not match lattice in " + path);
  ScalarField f(g);
  for (auto& r : rows) {
    int c[3] = {0, 0, 0};
    for (int a = 0; a < n; ++a) c[a] = (int)std::lround((r[a] - origin[a]) / h - 0.5);
    f.v[g.index(c[0], c[1], c[2])] = r[n];
  }
  return f;
}

void write_raster(const ScalarField& f, const std::string& path) {
  std::string head = raster_header(f.grid, -1);
  for (int p = 17; head.size() > 63 && p >= 6; --p) head = raster_header(f.grid, p);
  if (head.size() > 63) fail(ErrorCode::Io, "raster header does not fit in 64 bytes");
  head.resize(63, ' ');
  head.push_back('\n');
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot open " + path);
  out.write(head.data(), 64);
  std::vector<unsigned char> buf(f.size() * 8);
  for (std::size_t i = 0; i < f.size(); ++i) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(f.v[i]);
    for (int b = 0; b < 8; ++b) buf[i * 8 + b] = (unsigned char)(bits >> (8 * b));
  }
  out.write(reinterpret_cast<const char*>(buf.data()), (std::streamsize)buf.size());
  if (!out) fail(ErrorCode::Io, "write failed for " + path);
}

ScalarField read_raster(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open " + path);
  char head[65] = {0};
  in.read(head, 64);
  if (in.gcount() != 64 || std::strncmp(head, "QDOM ", 5) != 0) fail(ErrorCode::Io, "not a raster file: " + path);
  std::stringstream ss(std::string(head + 5, 59));
  int n = 0;
  ss >> n;
  if (n != 2 && n != 3) fail(ErrorCode::Io, "bad raster dimension in " + path);
  std::array<int, 3> cells{1, 1, 1};
  Point origin{0, 0, 0};
  double h = 0.0;
  for (int a = 0; a < n; ++a) ss >> cells[a];
  for (int a = 0; a < n; ++a) ss >> origin[a];
  ss >> h;
  if (!ss) fail(ErrorCode::Io, "bad raster header in " + path);
  Grid g = grid_from_header(n, cells, origin, h);
  std::vector<unsigned char> buf(g.size() * 8);
  in.read(reinterpret_cast<char*>(buf.data()), (std::streamsize)buf.size());
  if ((std::size_t)in.gcount() != buf.size()) fail(ErrorCode::Io, "truncated raster " + path);
  ScalarField f(g);
  for (std::size_t i = 0; i < f.size(); ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= (std::uint64_t)buf[i * 8 + b] << (8 * b);
    f.v[i] = std::bit_cast<double>(bits);
  }
  return f;
}

ScalarField read_field(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open " + path);
  char magic[5] = {0};
  in.read(magic, 5);
  if (in.gcount() == 5 && std::strncmp(magic, "QDOM ", 5) == 0) return read_raster(path);
  return read_csv(path);
}

ScalarField mask_to_field(const Mask& m) {
  ScalarField f(m.grid);
  for (std::size_t i = 0; i < f.size(); ++i) f.v[i] = m.f[i] ? 1.0 : 0.0;
  return f;
}

ScalarField sign_field(const ScalarField& f, double tol) {
  ScalarField s(f.grid);
  for (std::size_t i = 0; i < f.size(); ++i) s.v[i] = f.v[i] > tol ? 1.0 : (f.v[i] < -tol ? -1.0 : 0.0);
  return s;
}

std::vector<unsigned char> pgm_pixels(const ScalarField& f) {
  const Grid& g = f.grid;
  if (g.n != 2) fail(ErrorCode::Io, "PGM output needs a 2D field");
  double lo = *std::min_element(f.v.begin(), f.v.end());
  double hi = *std::max_element(f.v.begin(), f.v.end());
  int w = g.cells[0], ht = g.cells[1];
  std::vector<unsigned char> px((std::size_t)w * ht);
  for (int r = 0; r < ht; ++r)
    for (int c = 0; c < w; ++c) {
      double v = f.v[g.index(c, ht - 1 - r)];
      double t = hi > lo ? (v - lo) / (hi - lo) : 0.5;
      px[(std::size_t)r * w + c] = (unsigned char)std::lround(255.0 * std::clamp(t, 0.0, 1.0));
    }
  return px;
}

void write_pgm(const ScalarField& f, const std::string& path) {
  auto px = pgm_pixels(f);
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot open " + path);
  out << "P5\n" << f.grid.cells[0] << ' ' << f.grid.cells[1] << "\n255\n";
  out.write(reinterpret_cast<const char*>(px.data()), (std::streamsize)px.size());
  if (!out) fail(ErrorCode::Io, "write failed for " + path);
}

ScalarField axis_slice(const ScalarField& f, int axis) {
  const Grid& g = f.grid;
  if (g.n != 3 || axis < 0 || axis > 2) fail(ErrorCode::Io, "axis_slice needs a 3D field and axis in 0..2");
  int a0 = axis == 0 ? 1 : 0;
  int a1 = axis == 2 ? 1 : 2;
  Point o{g.origin[a0], g.origin[a1], 0};
  Point e{g.extent[a0], g.extent[a1], 0};
  Grid s = make_grid(2, o, e, {g.cells[a0], g.cells[a1], 1});
  s.h = g.h;
  ScalarField out(s);
  int mid = g.cells[axis] / 2;
  for (int j = 0; j < g.cells[a1]; ++j)
    for (int i = 0; i < g.cells[a0]; ++i) {
      int c[3];
      c[axis] = mid;
      c[a0] = i;
      c[a1] = j;
      out.v[s.index(i, j)] = f.v[g.index(c[0], c[1], c[2])];
    }
  return out;
}

std::vector<std::string> render_heatmap(const std::string& field_path, const std::string& out_path) {
  ScalarField f = read_field(field_path);
  if (f.grid.n == 2) {
    write_pgm(f, out_path);
    return {out_path};
  }
  std::string stem = out_path;
  std::string ext;
  auto dot = stem.rfind('.');
  if (dot != std::string::npos && stem.find('/', dot) == std::string::npos) {
    ext = stem.substr(dot);
    stem = stem.substr(0, dot);
  }
  std::vector<std::string> written;
  for (int a = 0; a < 3; ++a) {
    std::string p = stem + "_x" + std::to_string(a) + (ext.empty() ? ".pgm" : ext);
    write_pgm(axis_slice(f, a), p);
    written.push_back(p);
  }
  return written;
}

} // namespace qdom
