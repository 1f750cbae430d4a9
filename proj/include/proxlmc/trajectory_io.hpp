#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "proxlmc/samplers.hpp"

namespace proxlmc {

// Formats a double with 17 significant digits (exact binary64 round trip).
std::string format_double(double v);

// CSV with header `step,half,particle,x0,...,x{d-1}`; half is 0 or 1.
void write_trajectory_csv(std::ostream &out, const Trajectory &t);
// Rebuilds records in file order. Stream ids are reset to particle indices.
Trajectory read_trajectory_csv(std::istream &in, double h);

// Binary snapshot: u32 N, u32 d (little-endian), then N*d little-endian f64
// in row-major order.
void write_snapshot(std::ostream &out, const RowMatrix &points);
RowMatrix read_snapshot(std::istream &in);

void write_snapshot_file(const std::filesystem::path &path, const RowMatrix &points);
RowMatrix read_snapshot_file(const std::filesystem::path &path);

}  // namespace proxlmc
