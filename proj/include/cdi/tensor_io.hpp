#pragma once

#include <string>

#include "cdi/tensor.hpp"

namespace cdi {

// Raw tensor file, used for every array the pipeline writes.
//
//   magic   "CDIT"          4 bytes
//   version u8              currently 1
//   ndim    u8
//   dims    ndim x u32      little-endian
//   dtype   u8              0 = f64, 1 = f32
//   payload                 row-major, little-endian
//
// In-memory tensors are always f64; f32 is a storage mode (checkpoints,
// space-constrained dumps) and round-trips through a float cast.
void write_tensor(const std::string& path, const Tensor& t, bool as_f32 = false);
Tensor read_tensor(const std::string& path);

// 8-bit grayscale PGM dump of a 2D tensor, min/max scaled; for quick looks
// at reconstructions without plotting tools.
void write_pgm(const std::string& path, const Tensor& t);

} // namespace cdi
