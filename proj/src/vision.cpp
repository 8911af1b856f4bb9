#include "beamsense/vision.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "beamsense/random.hpp"

namespace beamsense {

std::string_view to_string(PixelClass c) {
  switch (c) {
    case PixelClass::Grass: return "grass";
    case PixelClass::Building: return "building";
    case PixelClass::Road: return "road";
    case PixelClass::Other: return "other";
  }
  return "other";
}

RgbImage::RgbImage(std::size_t width, std::size_t height, Rgb fill)
    : width_(width), height_(height), data_(width * height * 3) {
  for (std::size_t i = 0; i < width * height; ++i) {
    data_[3 * i] = fill.r;
    data_[3 * i + 1] = fill.g;
    data_[3 * i + 2] = fill.b;
  }
}

Rgb RgbImage::at(std::size_t x, std::size_t y) const {
  const std::size_t i = 3 * (y * width_ + x);
  return {data_[i], data_[i + 1], data_[i + 2]};
}

void RgbImage::set(std::size_t x, std::size_t y, Rgb c) {
  const std::size_t i = 3 * (y * width_ + x);
  data_[i] = c.r;
  data_[i + 1] = c.g;
  data_[i + 2] = c.b;
}

namespace {

inline void tally(PixelCounts& c, PixelClass k) {
  switch (k) {
    case PixelClass::Grass: ++c.grass; break;
    case PixelClass::Building: ++c.building; break;
    case PixelClass::Road: ++c.road; break;
    case PixelClass::Other: ++c.other; break;
  }
}

}  // namespace

PixelCounts count_features_serial(const RgbImage& img) {
  PixelCounts c;
  const auto& px = img.bytes();
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    tally(c, classify_pixel(px[3 * i], px[3 * i + 1], px[3 * i + 2]));
  }
  return c;
}

PixelCounts count_features(const RgbImage& img) {
  const auto& px = img.bytes();
  const auto rows = static_cast<std::int64_t>(img.height());
  const std::size_t w = img.width();
  std::uint64_t grass = 0, building = 0, road = 0, other = 0;
#pragma omp parallel for reduction(+ : grass, building, road, other) schedule(static)
  for (std::int64_t y = 0; y < rows; ++y) {
    const std::size_t row = static_cast<std::size_t>(y) * w * 3;
    for (std::size_t x = 0; x < w; ++x) {
      const std::size_t i = row + 3 * x;
      switch (classify_pixel(px[i], px[i + 1], px[i + 2])) {
        case PixelClass::Grass: ++grass; break;
        case PixelClass::Building: ++building; break;
        case PixelClass::Road: ++road; break;
        case PixelClass::Other: ++other; break;
      }
    }
  }
  return {grass, building, road, other};
}

FeatureVector make_features(double sinr_db, double rsrp_dbm, double rsrq_db, double rssi_dbm,
                            const PixelCounts& counts) {
  return {sinr_db,
          rsrp_dbm,
          rsrq_db,
          rssi_dbm,
          static_cast<double>(counts.grass),
          static_cast<double>(counts.building),
          static_cast<double>(counts.road)};
}

Rgb canonical_color(PixelClass c) {
  switch (c) {
    case PixelClass::Grass: return {110, 130, 90};     // |G-B| 40, |2G-R-B| 60
    case PixelClass::Building: return {120, 124, 124};  // 0, 4
    case PixelClass::Road: return {136, 123, 110};      // 13, 0
    case PixelClass::Other: return {200, 40, 40};       // 0, 160
  }
  return {200, 40, 40};
}

bool jitter_is_safe(Rgb base, PixelClass target, int channel_jitter, int brightness_jitter) {
  if (channel_jitter < 0 || brightness_jitter < 0) return false;
  const int reach = channel_jitter + brightness_jitter;
  const int lo = std::min({base.r, base.g, base.b});
  const int hi = std::max({base.r, base.g, base.b});
  // Clamping at the channel limits would change the differences.
  if (lo - reach < 0 || hi + reach > 255) return false;
  // Brightness shifts all channels equally, so only channel offsets matter.
  const int j = channel_jitter;
  for (int dr = -j; dr <= j; ++dr)
    for (int dg = -j; dg <= j; ++dg)
      for (int db = -j; db <= j; ++db) {
        const int r = base.r + dr, g = base.g + dg, b = base.b + db;
        const int v = 2 * g - r - b;
        if (classify_differences(std::abs(g - b), std::abs(v)) != target) return false;
      }
  return true;
}

Scene generate_scene(const SceneSpec& spec, std::uint64_t seed) {
  if (spec.width == 0 || spec.height == 0) throw std::invalid_argument("generate_scene: empty extent");
  if (classify_pixel(spec.background.r, spec.background.g, spec.background.b) != spec.background_class) {
    throw std::invalid_argument("generate_scene: background color is not of the background class");
  }
  for (std::size_t k = 0; k < spec.regions.size(); ++k) {
    const auto& reg = spec.regions[k];
    if (!jitter_is_safe(reg.base, reg.target, reg.channel_jitter, reg.brightness_jitter)) {
      throw std::invalid_argument("generate_scene: region " + std::to_string(k) + " jitter (channel " +
                                  std::to_string(reg.channel_jitter) + ", brightness " +
                                  std::to_string(reg.brightness_jitter) + ") can leave class " +
                                  std::string(to_string(reg.target)));
    }
  }

  Scene scene{RgbImage(spec.width, spec.height, spec.background),
              std::vector<PixelClass>(spec.width * spec.height, spec.background_class)};
  Rng rng = make_rng(seed);
  auto offset = [&](int amp) {
    return amp == 0 ? 0 : static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(2 * amp + 1))) - amp;
  };
  for (const auto& reg : spec.regions) {
    for (std::size_t y = 0; y < spec.height; ++y) {
      for (std::size_t x = 0; x < spec.width; ++x) {
        bool inside = false;
        if (reg.shape == SceneRegion::Shape::Rect) {
          inside = x >= reg.x0 && x < reg.x1 && y >= reg.y0 && y < reg.y1;
        } else {
          const double dx = static_cast<double>(x) + 0.5 - reg.cx;
          const double dy = static_cast<double>(y) + 0.5 - reg.cy;
          inside = dx * dx + dy * dy <= reg.radius * reg.radius;
        }
        if (!inside) continue;
        const int shift = offset(reg.brightness_jitter);
        const int r = reg.base.r + shift + offset(reg.channel_jitter);
        const int g = reg.base.g + shift + offset(reg.channel_jitter);
        const int b = reg.base.b + shift + offset(reg.channel_jitter);
        scene.image.set(x, y, {static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g),
                               static_cast<std::uint8_t>(b)});
        scene.truth[y * spec.width + x] = reg.target;
      }
    }
  }
  return scene;
}

namespace {

void skip_space_and_comments(std::istream& in) {
  for (;;) {
    const int c = in.peek();
    if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      in.get();
    } else {
      return;
    }
  }
}

std::size_t read_header_int(std::istream& in, const char* what) {
  skip_space_and_comments(in);
  long long v = -1;
  if (!(in >> v) || v <= 0) throw std::runtime_error(std::string("read_ppm: bad ") + what);
  return static_cast<std::size_t>(v);
}

}  // namespace

RgbImage read_ppm(std::istream& in) {
  char magic[2] = {0, 0};
  in.read(magic, 2);
  if (!in || magic[0] != 'P' || magic[1] != '6') throw std::runtime_error("read_ppm: not a binary P6 pixmap");
  const std::size_t w = read_header_int(in, "width");
  const std::size_t h = read_header_int(in, "height");
  const std::size_t maxval = read_header_int(in, "maxval");
  if (maxval != 255) throw std::runtime_error("read_ppm: only maxval 255 is supported");
  in.get();  // single whitespace before the raster
  RgbImage img(w, h);
  in.read(reinterpret_cast<char*>(img.bytes().data()), static_cast<std::streamsize>(img.bytes().size()));
  if (in.gcount() != static_cast<std::streamsize>(img.bytes().size())) {
    throw std::runtime_error("read_ppm: truncated raster");
  }
  return img;
}

RgbImage read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_ppm: cannot open " + path.string());
  return read_ppm(in);
}

void write_ppm(std::ostream& out, const RgbImage& img) {
  out << "P6\n" << img.width() << ' ' << img.height() << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.bytes().data()), static_cast<std::streamsize>(img.bytes().size()));
}

void write_ppm(const std::filesystem::path& path, const RgbImage& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_ppm: cannot open " + path.string());
  write_ppm(out, img);
}

RgbImage read_raw_rgb(const std::filesystem::path& path, std::size_t width, std::size_t height) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_raw_rgb: cannot open " + path.string());
  RgbImage img(width, height);
  in.read(reinterpret_cast<char*>(img.bytes().data()), static_cast<std::streamsize>(img.bytes().size()));
  if (in.gcount() != static_cast<std::streamsize>(img.bytes().size()) || in.peek() != EOF) {
    throw std::runtime_error("read_raw_rgb: expected exactly " + std::to_string(img.bytes().size()) +
                             " bytes in " + path.string());
  }
  return img;
}

}  // namespace beamsense
