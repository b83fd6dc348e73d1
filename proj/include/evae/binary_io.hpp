#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "evae/tensor.hpp"

// Little-endian primitives shared by the checkpoint and dataset cache formats.
namespace evae::io {

void write_u64(std::ostream& os, std::uint64_t v);
std::uint64_t read_u64(std::istream& is);
void write_f64(std::ostream& os, double v);
double read_f64(std::istream& is);
void write_string(std::ostream& os, const std::string& s);
std::string read_string(std::istream& is);
void write_tensor(std::ostream& os, const Tensor& t);
Tensor read_tensor(std::istream& is);

}  // namespace evae::io
