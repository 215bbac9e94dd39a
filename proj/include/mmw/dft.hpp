#pragma once

#include <span>
#include <vector>

#include "mmw/common.hpp"

namespace mmw {

// Unitary (1/sqrt(N)) radix-2 transforms; N must be a power of two.
std::vector<Complex> fft(std::span<const Complex> x);
std::vector<Complex> ifft(std::span<const Complex> x);

}  // namespace mmw
