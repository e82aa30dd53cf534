#pragma once

#include "pam/tensor.hpp"

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace pam {

/// Single-tensor binary format: magic "MGT1", u32 rank, rank x u64 extents,
/// row-major little-endian f64 payload.
void save_tensor(std::ostream& os, const Tensor& t);
Tensor load_tensor(std::istream& is);
void save_tensor_file(const std::string& path, const Tensor& t);
Tensor load_tensor_file(const std::string& path);

/// Checkpoint container: magic "MGC1", u32 entry count, then per entry a
/// u32 name length, the name bytes, and an embedded MGT1 blob. Entry order
/// is preserved, so identical inputs serialize to identical bytes.
using NamedTensors = std::vector<std::pair<std::string, Tensor>>;
void save_checkpoint(const std::string& path, const NamedTensors& entries);
NamedTensors load_checkpoint(const std::string& path);

}  // namespace pam
