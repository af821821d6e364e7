#include "segrl/ppm.hpp"

#include <fstream>
#include <stdexcept>

namespace segrl {

void dump_frame(const Image& frame, const std::string& path) {
  if (frame.rgb.size() != frame.pixel_count() * 3) throw std::invalid_argument("dump_frame: malformed image");
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f << "P6\n" << frame.width << ' ' << frame.height << "\n255\n";
  f.write(reinterpret_cast<const char*>(frame.rgb.data()), static_cast<std::streamsize>(frame.rgb.size()));
  if (!f) throw std::runtime_error("failed writing " + path);
}

Image read_ppm(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  f >> magic >> w >> h >> maxval;
  if (magic != "P6" || w < 0 || h < 0 || maxval != 255) throw std::runtime_error(path + " is not an 8-bit binary PPM");
  f.get();
  Image img(w, h);
  f.read(reinterpret_cast<char*>(img.rgb.data()), static_cast<std::streamsize>(img.rgb.size()));
  if (f.gcount() != static_cast<std::streamsize>(img.rgb.size())) throw std::runtime_error(path + ": truncated pixel data");
  return img;
}

}  // namespace segrl
