#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string_view>
#include <vector>

namespace beamsense {

enum class PixelClass : std::uint8_t { Grass = 0, Building = 1, Road = 2, Other = 3 };

std::string_view to_string(PixelClass c);

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  friend constexpr bool operator==(Rgb, Rgb) = default;
};

/// Row-major 8-bit RGB image.
class RgbImage {
 public:
  RgbImage() = default;
  RgbImage(std::size_t width, std::size_t height, Rgb fill = {});

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  std::size_t pixel_count() const { return width_ * height_; }

  Rgb at(std::size_t x, std::size_t y) const;
  void set(std::size_t x, std::size_t y, Rgb c);

  const std::vector<std::uint8_t>& bytes() const { return data_; }
  std::vector<std::uint8_t>& bytes() { return data_; }

  friend bool operator==(const RgbImage&, const RgbImage&) = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<std::uint8_t> data_;
};

inline constexpr std::size_t kSceneSize = 256;

/// Label from the color characteristics |G-B| and |2G-R-B|. Checked in the
/// order Building, Road, Grass; anything else is Other.
constexpr PixelClass classify_differences(int gb, int two_g_rb) {
  if (gb <= 6 && two_g_rb >= 1 && two_g_rb <= 8) return PixelClass::Building;
  if (gb > 6 && gb <= 20 && two_g_rb <= 12) return PixelClass::Road;
  if (gb <= 80 && two_g_rb >= 12 && two_g_rb <= 85) return PixelClass::Grass;
  return PixelClass::Other;
}

constexpr PixelClass classify_pixel(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  const int gb = g > b ? g - b : b - g;
  const int v = 2 * g - r - b;
  return classify_differences(gb, v < 0 ? -v : v);
}

struct PixelCounts {
  std::uint64_t grass = 0;
  std::uint64_t building = 0;
  std::uint64_t road = 0;
  std::uint64_t other = 0;

  std::uint64_t total() const { return grass + building + road + other; }
  friend constexpr bool operator==(const PixelCounts&, const PixelCounts&) = default;
};

/// Per-class pixel totals. Rows are counted in parallel.
PixelCounts count_features(const RgbImage& img);
/// Single-threaded reference for count_features.
PixelCounts count_features_serial(const RgbImage& img);

/// Radio measurements plus pixel counts: the seven localization inputs.
struct FeatureVector {
  double sinr_db = 0.0;
  double rsrp_dbm = 0.0;
  double rsrq_db = 0.0;
  double rssi_dbm = 0.0;
  double n_grass = 0.0;
  double n_building = 0.0;
  double n_road = 0.0;

  std::array<double, 7> as_array() const {
    return {sinr_db, rsrp_dbm, rsrq_db, rssi_dbm, n_grass, n_building, n_road};
  }
};

FeatureVector make_features(double sinr_db, double rsrp_dbm, double rsrq_db, double rssi_dbm,
                            const PixelCounts& counts);

// ---------------------------------------------------------------------------
// Synthetic scenes

/// Axis-aligned rectangle [x0, x1) x [y0, y1) or a disk, painted with a
/// base color plus seeded jitter.
struct SceneRegion {
  enum class Shape { Rect, Disk };
  Shape shape = Shape::Rect;
  std::size_t x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // Rect
  double cx = 0, cy = 0, radius = 0;           // Disk
  PixelClass target = PixelClass::Grass;
  Rgb base;
  // Independent per-channel jitter amplitude (integer, +/-).
  int channel_jitter = 0;
  // Common offset added to all three channels; leaves the differences unchanged.
  int brightness_jitter = 0;
};

struct SceneSpec {
  std::size_t width = kSceneSize;
  std::size_t height = kSceneSize;
  PixelClass background_class = PixelClass::Other;
  Rgb background{200, 40, 40};
  std::vector<SceneRegion> regions;  // painted in order; later regions win
};

struct Scene {
  RgbImage image;
  std::vector<PixelClass> truth;  // row-major, same extent as image
};

/// Canonical base color for each class, chosen well inside its ranges.
Rgb canonical_color(PixelClass c);

/// True when every color reachable from `base` under the given jitter
/// amplitudes classifies as `target`.
bool jitter_is_safe(Rgb base, PixelClass target, int channel_jitter, int brightness_jitter);

/// Paints the scene. Throws std::invalid_argument when a region's jitter
/// could move a pixel out of its target class, or the background color is
/// not of the background class.
Scene generate_scene(const SceneSpec& spec, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Image I/O

/// Binary P6 pixmap with maxval 255.
RgbImage read_ppm(std::istream& in);
RgbImage read_ppm(const std::filesystem::path& path);
void write_ppm(std::ostream& out, const RgbImage& img);
void write_ppm(const std::filesystem::path& path, const RgbImage& img);

/// Headerless interleaved RGB bytes of the given extent.
RgbImage read_raw_rgb(const std::filesystem::path& path, std::size_t width, std::size_t height);

}  // namespace beamsense
