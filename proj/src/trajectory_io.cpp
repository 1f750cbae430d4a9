#include "proxlmc/trajectory_io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace proxlmc {
namespace {

void put_u32(std::ostream &out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char *>(b), 4);
}

std::uint32_t get_u32(std::istream &in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char *>(b), 4)) throw std::runtime_error("snapshot: truncated header");
  return static_cast<std::uint32_t>(b[0]) | static_cast<std::uint32_t>(b[1]) << 8 |
         static_cast<std::uint32_t>(b[2]) << 16 | static_cast<std::uint32_t>(b[3]) << 24;
}

void put_f64(std::ostream &out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
  out.write(reinterpret_cast<const char *>(b), 8);
}

double get_f64(std::istream &in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char *>(b), 8)) throw std::runtime_error("snapshot: truncated data");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

std::vector<std::string> split_csv(const std::string &line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_trajectory_csv(std::ostream &out, const Trajectory &t) {
  const std::size_t d = t.full(0).dim();
  out << "step,half,particle";
  for (std::size_t j = 0; j < d; ++j) out << ",x" << j;
  out << '\n';
  for (const auto &e : t.records()) {
    for (std::size_t i = 0; i < e.size(); ++i) {
      out << e.step_index << ',' << (e.half_step ? 1 : 0) << ',' << i;
      for (std::size_t j = 0; j < d; ++j)
        out << ',' << format_double(e.particles(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
      out << '\n';
    }
  }
}

Trajectory read_trajectory_csv(std::istream &in, double h) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("trajectory CSV: empty input");
  const auto header = split_csv(line);
  if (header.size() < 4 || header[0] != "step" || header[1] != "half" || header[2] != "particle")
    throw std::runtime_error("trajectory CSV: header must start with step,half,particle,x0");
  const std::size_t d = header.size() - 3;

  struct Pending {
    std::uint64_t step;
    bool half;
    std::vector<double> values;
  };
  std::vector<Pending> groups;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != d + 3)
      throw std::runtime_error("trajectory CSV: wrong field count on line " + std::to_string(line_no));
    try {
      const std::uint64_t step = std::stoull(f[0]);
      const bool half = f[1] == "1";
      const std::size_t particle = std::stoull(f[2]);
      if (groups.empty() || groups.back().step != step || groups.back().half != half) {
        groups.push_back(Pending{step, half, {}});
      }
      auto &g = groups.back();
      if (particle * d != g.values.size())
        throw std::runtime_error("trajectory CSV: particles out of order on line " + std::to_string(line_no));
      for (std::size_t j = 0; j < d; ++j) g.values.push_back(std::stod(f[3 + j]));
    } catch (const std::logic_error &) {
      throw std::runtime_error("trajectory CSV: malformed number on line " + std::to_string(line_no));
    }
  }
  if (groups.empty()) throw std::runtime_error("trajectory CSV: no records");

  std::vector<Ensemble> records;
  bool any_half = false;
  for (auto &g : groups) {
    const auto n = static_cast<Eigen::Index>(g.values.size() / d);
    RowMatrix m = Eigen::Map<RowMatrix>(g.values.data(), n, static_cast<Eigen::Index>(d));
    records.push_back(Ensemble::from_particles(std::move(m), g.step, g.half));
    any_half = any_half || g.half;
  }
  return Trajectory(h, any_half, std::move(records));
}

void write_snapshot(std::ostream &out, const RowMatrix &points) {
  if (points.rows() > std::numeric_limits<std::uint32_t>::max() ||
      points.cols() > std::numeric_limits<std::uint32_t>::max())
    throw std::invalid_argument("snapshot: matrix too large for u32 header");
  put_u32(out, static_cast<std::uint32_t>(points.rows()));
  put_u32(out, static_cast<std::uint32_t>(points.cols()));
  for (Eigen::Index i = 0; i < points.size(); ++i) put_f64(out, points.data()[i]);
}

RowMatrix read_snapshot(std::istream &in) {
  const auto n = get_u32(in);
  const auto d = get_u32(in);
  RowMatrix points(n, d);
  for (Eigen::Index i = 0; i < points.size(); ++i) points.data()[i] = get_f64(in);
  if (in.peek() != std::char_traits<char>::eof()) throw std::runtime_error("snapshot: trailing bytes");
  return points;
}

void write_snapshot_file(const std::filesystem::path &path, const RowMatrix &points) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_snapshot(out, points);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

RowMatrix read_snapshot_file(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_snapshot(in);
}

}  // namespace proxlmc
