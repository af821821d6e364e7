#include "segrl/env.hpp"

#include <algorithm>
#include <stdexcept>

namespace segrl {

Image::Image(int w, int h, std::uint8_t fill)
    : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3, fill) {
  if (w < 0 || h < 0) throw std::invalid_argument("image dimensions must be non-negative");
}

void Image::set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  std::uint8_t* p = at(x, y);
  p[0] = r;
  p[1] = g;
  p[2] = b;
}

void Image::fill_rect(int x, int y, int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  const int x0 = std::max(x, 0), y0 = std::max(y, 0);
  const int x1 = std::min(x + w, width), y1 = std::min(y + h, height);
  for (int yy = y0; yy < y1; ++yy) {
    for (int xx = x0; xx < x1; ++xx) set(xx, yy, r, g, b);
  }
}

std::unique_ptr<Env> make_env(std::string_view id) {
  if (id == "MiniCatch-v0") return std::make_unique<MiniCatch>(1);
  if (id == "MiniCatch8-v0") return std::make_unique<MiniCatch>(8);
  if (id == "MiniBricks-v0") return std::make_unique<MiniBricks>();
  throw std::invalid_argument("unknown environment id '" + std::string(id) + "'");
}

int action_count(std::string_view id) { return make_env(id)->action_count(); }

std::vector<std::string> registered_env_ids() { return {"MiniCatch-v0", "MiniCatch8-v0", "MiniBricks-v0"}; }

}  // namespace segrl
