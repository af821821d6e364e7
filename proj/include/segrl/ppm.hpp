#pragma once

#include <string>

#include "segrl/env.hpp"

namespace segrl {

// Binary PPM: "P6\n<width> <height>\n255\n" followed by raw RGB. Replaces an
// existing file.
void dump_frame(const Image& frame, const std::string& path);
Image read_ppm(const std::string& path);

}  // namespace segrl
