#include "io/demo_io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "common/error.hpp"

namespace phaseseg {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& text, const std::string& where) {
  try {
    size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    fail(ErrorCode::io, where + ": cannot parse '" + text + "' as a number");
  }
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double infer_dt(const Demonstration& demo) {
  std::vector<double> steps;
  for (size_t i = 1; i < demo.points.size(); ++i)
    steps.push_back(demo.points[i].t - demo.points[i - 1].t);
  if (steps.empty()) return 0.0;
  std::sort(steps.begin(), steps.end());
  return steps[steps.size() / 2];
}

std::string stem_of(const std::string& path) {
  size_t slash = path.find_last_of("/\\");
  std::string name = slash == std::string::npos ? path : path.substr(slash + 1);
  size_t dot = name.find_last_of('.');
  return dot == std::string::npos ? name : name.substr(0, dot);
}

void finish_demo(Demonstration& demo, const std::string& path) {
  demo.dt = infer_dt(demo);
  demo.label = stem_of(path);
  auto violations = validate_demo(demo);
  if (!violations.empty())
    fail(ErrorCode::validation, path + ": " + violations.front());
}

const std::vector<std::string> kStateCols3 = {"x", "y", "z"};
const std::vector<std::string> kStateCols6 = {"x", "y", "z", "rx", "ry", "rz"};
const std::vector<std::string> kWrenchCols3 = {"fx", "fy", "fz"};
const std::vector<std::string> kWrenchCols6 = {"fx", "fy", "fz", "tx", "ty", "tz"};

}  // namespace

Demonstration read_demo_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::io, path + ": empty file");
  const auto header = split_csv(line);

  auto col_of = [&](const std::string& name) {
    for (size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    return -1;
  };
  const bool has_rot = col_of("rx") >= 0 || col_of("ry") >= 0 || col_of("rz") >= 0;
  const bool has_torque = col_of("tx") >= 0 || col_of("ty") >= 0 || col_of("tz") >= 0;
  const auto& scols = has_rot ? kStateCols6 : kStateCols3;
  const auto& wcols = has_torque ? kWrenchCols6 : kWrenchCols3;

  std::vector<std::string> expected = {"t"};
  expected.insert(expected.end(), scols.begin(), scols.end());
  expected.insert(expected.end(), wcols.begin(), wcols.end());
  for (const auto& name : expected)
    if (col_of(name) < 0) fail(ErrorCode::io, path + ": missing column '" + name + "'");
  for (const auto& name : header) {
    if (std::find(expected.begin(), expected.end(), name) == expected.end())
      fail(ErrorCode::io, path + ": unexpected column '" + name + "'");
  }

  Demonstration demo;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    const std::string where = path + ": row " + std::to_string(row);
    if (fields.size() != header.size())
      fail(ErrorCode::io, where + ": expected " + std::to_string(header.size()) +
                              " fields, found " + std::to_string(fields.size()));
    TrajectoryPoint p;
    p.t = parse_double(fields[col_of("t")], where);
    p.s.resize(static_cast<int>(scols.size()));
    for (size_t i = 0; i < scols.size(); ++i)
      p.s[static_cast<int>(i)] = parse_double(fields[col_of(scols[i])], where);
    p.a_raw.resize(static_cast<int>(wcols.size()));
    for (size_t i = 0; i < wcols.size(); ++i)
      p.a_raw[static_cast<int>(i)] = parse_double(fields[col_of(wcols[i])], where);
    demo.points.push_back(std::move(p));
  }
  finish_demo(demo, path);
  return demo;
}

void write_demo_csv(const Demonstration& demo, const std::string& path) {
  const int m = demo.state_dim();
  const int dw = demo.wrench_dim();
  if ((m != 3 && m != 6) || (dw != 3 && dw != 6))
    fail(ErrorCode::io, "CSV schema covers 3-D or 6-D states and wrenches only");
  std::ofstream out(path);
  if (!out) fail(ErrorCode::io, "cannot open " + path + " for writing");
  const auto& scols = m == 6 ? kStateCols6 : kStateCols3;
  const auto& wcols = dw == 6 ? kWrenchCols6 : kWrenchCols3;
  out << "t";
  for (const auto& c : scols) out << ',' << c;
  for (const auto& c : wcols) out << ',' << c;
  out << '\n';
  for (const auto& p : demo.points) {
    out << fmt(p.t);
    for (int i = 0; i < m; ++i) out << ',' << fmt(p.s[i]);
    for (int i = 0; i < dw; ++i) out << ',' << fmt(p.a_raw[i]);
    out << '\n';
  }
  if (!out) fail(ErrorCode::io, "write failed for " + path);
}

Demonstration read_demo_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot open " + path);
  Demonstration demo;
  std::string line;
  int row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const std::string where = path + ": line " + std::to_string(row);
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::io, where + ": " + e.what());
    }
    if (!obj.is_object()) fail(ErrorCode::io, where + ": expected an object");
    auto get = [&](const char* key) {
      if (!obj.contains(key) || !obj[key].is_number())
        fail(ErrorCode::io, where + ": missing numeric field '" + key + "'");
      return obj[key].get<double>();
    };
    const bool has_rot = obj.contains("rx") || obj.contains("ry") || obj.contains("rz");
    const bool has_torque = obj.contains("tx") || obj.contains("ty") || obj.contains("tz");
    TrajectoryPoint p;
    p.t = get("t");
    const auto& scols = has_rot ? kStateCols6 : kStateCols3;
    const auto& wcols = has_torque ? kWrenchCols6 : kWrenchCols3;
    p.s.resize(static_cast<int>(scols.size()));
    for (size_t i = 0; i < scols.size(); ++i) p.s[static_cast<int>(i)] = get(scols[i].c_str());
    p.a_raw.resize(static_cast<int>(wcols.size()));
    for (size_t i = 0; i < wcols.size(); ++i) p.a_raw[static_cast<int>(i)] = get(wcols[i].c_str());
    demo.points.push_back(std::move(p));
  }
  finish_demo(demo, path);
  return demo;
}

Demonstration read_demo(const std::string& path) {
  if (path.size() >= 6 && path.substr(path.size() - 6) == ".jsonl") return read_demo_jsonl(path);
  return read_demo_csv(path);
}

void write_labels_csv(const Demonstration& demo, const std::vector<int>& labels0,
                      const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::io, "cannot open " + path + " for writing");
  out << "t,label\n";
  for (size_t i = 0; i < labels0.size(); ++i) {
    if (i >= demo.points.size()) fail(ErrorCode::io, "more labels than samples");
    out << fmt(demo.points[i].t) << ',' << labels0[i] + 1 << '\n';
  }
  if (!out) fail(ErrorCode::io, "write failed for " + path);
}

std::vector<int> read_labels_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::io, path + ": empty file");
  const auto header = split_csv(line);
  if (header.size() != 2 || header[0] != "t" || header[1] != "label")
    fail(ErrorCode::io, path + ": expected header 't,label'");
  std::vector<int> out;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    const std::string where = path + ": row " + std::to_string(row);
    if (fields.size() != 2) fail(ErrorCode::io, where + ": expected 2 fields");
    const double lab = parse_double(fields[1], where);
    const int ilab = static_cast<int>(lab);
    if (lab != ilab || ilab < 1) fail(ErrorCode::io, where + ": labels are 1-based integers");
    out.push_back(ilab - 1);
  }
  return out;
}

}  // namespace phaseseg
