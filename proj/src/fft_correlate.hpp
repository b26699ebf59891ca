#pragma once

#include <vector>

#include "partvos/image.hpp"

namespace partvos::detail {

// Valid-mode cross-correlation out(dx,dy) = sum kernel(x,y) * search(x+dx, y+dy),
// row-major, (search.w - kernel.w + 1) x (search.h - kernel.h + 1).
std::vector<double> correlate_valid_fft(const Plane& search, const Plane& kernel);

// Smallest n' >= n whose only prime factors are 2, 3, 5 and 7.
int fft_friendly_size(int n);

}  // namespace partvos::detail
