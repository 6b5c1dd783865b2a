#pragma once

#include <filesystem>
#include <iosfwd>

#include "tenrec/tensor.hpp"

namespace tenrec {

// TNR1 container, all integers and values little-endian:
//   "TNR1" | uint32 N | N x uint64 dims | prod(dims) x float64 (first index fastest)

void write_tensor(std::ostream& out, const DenseTensor& x);
DenseTensor read_tensor(std::istream& in);

void save_tensor(const std::filesystem::path& path, const DenseTensor& x);
DenseTensor load_tensor(const std::filesystem::path& path);

/// Masks travel as 0/1 tensors in the same container.
void save_mask(const std::filesystem::path& path, const ObservationMask& mask);
ObservationMask load_mask(const std::filesystem::path& path);

/// One matrix row per line, comma separated, shortest round-trip formatting.
void write_matrix_csv(std::ostream& out, const DenseMatrix& m);

/// Shortest round-trip decimal representation ("nan" / "inf" / "-inf" for non-finite).
std::string format_double(double value);

} // namespace tenrec
