#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "declip/tensor.hpp"

namespace declip::ad {

// Self-describing binary tensor block, little-endian:
//   "DTN1" | u32 rank | u32 dims[rank] | f64 data[numel]
void write_tensor(std::ostream& out, const Tensor& t);
Tensor read_tensor(std::istream& in, bool requires_grad = false);

std::size_t tensor_block_size(const Tensor& t);

void save_tensor(const std::string& path, const Tensor& t);
Tensor load_tensor(const std::string& path, bool requires_grad = false);

}  // namespace declip::ad
