#include "marangoni/io.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "marangoni/errors.hpp"

namespace marangoni {

std::string format_g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void Table::add(std::initializer_list<double> r) {
  require(r.size() == cols.size(), ErrorCode::PreconditionError, "table row width");
  rows.emplace_back(r);
}

std::string Table::tsv() const {
  std::ostringstream os;
  for (size_t i = 0; i < cols.size(); ++i) os << (i ? "\t" : "") << cols[i];
  os << "\n";
  for (const auto& r : rows) {
    for (size_t i = 0; i < r.size(); ++i) os << (i ? "\t" : "") << format_g17(r[i]);
    os << "\n";
  }
  return os.str();
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::PreconditionError, "cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorCode::PreconditionError, "cannot write " + path);
  out << content;
  out.flush();
  require(out.good(), ErrorCode::PreconditionError, "short write to " + path);
}

std::string config_digest(const Json& j) {
  const std::string s = j.dump();
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

Json vec_json(const Vec& v) {
  Json a = Json::array();
  for (int i = 0; i < (int)v.size(); ++i) a.push_back(v(i));
  return a;
}

Json mat_json(const Mat& m) {
  Json a = Json::array();
  for (int i = 0; i < (int)m.rows(); ++i) {
    Json r = Json::array();
    for (int j = 0; j < (int)m.cols(); ++j) r.push_back(m(i, j));
    a.push_back(std::move(r));
  }
  return a;
}

Json tensor_json(const Tensor3R& t) {
  return Json{{"dims", {t.d0, t.d1, t.d2}}, {"a", t.a}};
}

Vec vec_from_json(const Json& j) {
  require(j.is_array(), ErrorCode::PreconditionError, "expected a numeric array");
  Vec v((int)j.size());
  for (int i = 0; i < (int)j.size(); ++i) v(i) = j[i].get<double>();
  return v;
}

Mat mat_from_json(const Json& j) {
  require(j.is_array() && !j.empty(), ErrorCode::PreconditionError, "expected a matrix");
  const int rows = (int)j.size(), cols = (int)j[0].size();
  Mat m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    require((int)j[i].size() == cols, ErrorCode::PreconditionError, "ragged matrix rows");
    for (int c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
  }
  return m;
}

Tensor3R tensor_from_json(const Json& j) {
  const auto& dims = j.at("dims");
  require(dims.is_array() && dims.size() == 3, ErrorCode::PreconditionError, "tensor dims");
  Tensor3R t(dims[0].get<int>(), dims[1].get<int>(), dims[2].get<int>());
  const auto& a = j.at("a");
  require(a.size() == t.a.size(), ErrorCode::PreconditionError, "tensor payload size");
  for (size_t i = 0; i < t.a.size(); ++i) t.a[i] = a[i].get<double>();
  return t;
}

ProfileParams profile_from_json(const Json& j) {
  ProfileParams p;
  p.N = j.at("N").get<int>();
  p.kappa = j.at("kappa").get<double>();
  p.z0 = j.value("z0", 5.0 * p.kappa);
  p.nu = j.value("nu", 1e3);
  p.h = j.value("h", 10.0 * std::log(p.nu));
  p.mu = j.value("mu", 0.0);
  if (j.contains("d")) {
    p.d.clear();
    for (const auto& x : j.at("d")) p.d.push_back(x.get<double>());
  }
  return p;
}

Json profile_json(const ProfileParams& p) {
  return Json{{"N", p.N},   {"kappa", p.kappa}, {"z0", p.z0}, {"mu", p.mu},
              {"h", p.h},   {"nu", p.nu},       {"d", p.d}};
}

Grid grid_from_json(const Json& j, double default_h) {
  Grid g;
  g.Nx = j.value("Nx", 64);
  g.Ny = j.value("Ny", 128);
  g.h = j.value("h", default_h);
  g.validate();
  return g;
}

TargetField target_from_json(const Json& j) {
  TargetField t;
  t.p = j.at("p").get<int>();
  t.R = j.contains("R") ? mat_from_json(j.at("R")) : Mat::Zero(t.p, t.p);
  t.f = j.contains("f") ? vec_from_json(j.at("f")) : Vec::Zero(t.p);
  t.D = j.contains("D") ? tensor_from_json(j.at("D")) : Tensor3R(t.p, t.p, t.p);
  t.R0 = j.value("R0", 1.0);
  require((int)t.R.rows() == t.p && (int)t.R.cols() == t.p && (int)t.f.size() == t.p &&
              t.D.d0 == t.p && t.D.d1 == t.p && t.D.d2 == t.p,
          ErrorCode::PreconditionError, "target field blocks must all have dimension p");
  return t;
}

Json source_json(const HeatSource2D& s) {
  Json cos = Json::object(), sin = Json::object();
  for (const auto& kv : s.cosc) cos[std::to_string(kv.first)] = vec_json(kv.second);
  for (const auto& kv : s.sinc) sin[std::to_string(kv.first)] = vec_json(kv.second);
  return Json{{"lo", s.basis.lo}, {"hi", s.basis.hi}, {"size", s.basis.size},
              {"cos", std::move(cos)}, {"sin", std::move(sin)}};
}

HeatSource2D source_from_json(const Json& j) {
  HeatSource2D s;
  s.basis.lo = j.at("lo").get<double>();
  s.basis.hi = j.at("hi").get<double>();
  s.basis.size = j.at("size").get<int>();
  if (j.contains("cos"))
    for (auto it = j.at("cos").begin(); it != j.at("cos").end(); ++it)
      s.cosc[std::stoi(it.key())] = vec_from_json(it.value());
  if (j.contains("sin"))
    for (auto it = j.at("sin").begin(); it != j.at("sin").end(); ++it)
      s.sinc[std::stoi(it.key())] = vec_from_json(it.value());
  return s;
}

}  // namespace marangoni
