#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace bladerunner {

enum class SampleSource { local_file, fetched, fixture };
enum class ImageFormat { jpeg, png };

std::string_view to_string(SampleSource source);

// 8-bit single-channel luminance raster, row-major.
struct ImageSample {
    std::string sample_id;
    SampleSource source = SampleSource::local_file;
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;
    ImageFormat original_format = ImageFormat::png;

    std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }

    bool operator==(const ImageSample&) const = default;
};

// Throws std::invalid_argument when the sample breaks its size invariants.
void validate(const ImageSample& sample);

// Builds a sample filled with a single gray value.
ImageSample make_constant_sample(std::string sample_id, int width, int height, std::uint8_t value,
                                 SampleSource source = SampleSource::fixture);

// ITU-R BT.601 luma, rounded half-up: (299 R + 587 G + 114 B + 500) / 1000.
std::uint8_t luminance(std::uint8_t r, std::uint8_t g, std::uint8_t b);

// Decodes a JPEG or PNG file and converts it to luminance. The sample id is
// the file stem. Throws ImageDecodeError.
ImageSample load_image(const std::filesystem::path& path);

// Same as load_image but for an in-memory encoded buffer.
ImageSample decode_image(std::string sample_id, std::span<const std::uint8_t> bytes,
                         SampleSource source = SampleSource::local_file);

// Loads a fixture sample file: a JSON document carrying "width" and "height"
// (plus planted faces consumed by the fixture landmark backend). Produces a
// mid-gray raster of that size. Throws ImageDecodeError.
ImageSample load_fixture_sample(const std::filesystem::path& path);

// Dispatches on extension: .json goes to load_fixture_sample, everything else
// to load_image.
ImageSample load_sample(const std::filesystem::path& path);

// True for the extensions load_sample understands (.jpg, .jpeg, .png, .json).
bool is_sample_file(const std::filesystem::path& path);

// Baseline JPEG, quality 95, no metadata. Throws StorageError.
void save_jpeg(const ImageSample& sample, const std::filesystem::path& path);

// Bilinear resampling with half-pixel centers. The returned id carries an
// "@WxH" suffix. Throws DegenerateResolution for targets below 1 px.
ImageSample resize(const ImageSample& sample, std::pair<int, int> target);

// Removes a trailing "@WxH" suffix added by resize, if present.
std::string base_sample_id(std::string_view sample_id);

enum class LadderScheme { base2, base10, both };

LadderScheme parse_ladder_scheme(std::string_view text);
std::string_view to_string(LadderScheme scheme);

inline constexpr int kMinimumRungDimension = 50;

struct ResolutionLadder {
    int base_width = 0;
    int base_height = 0;
    std::vector<std::pair<int, int>> rungs;

    bool operator==(const ResolutionLadder&) const = default;
};

// The base resolution is always the first rung; later rungs strictly decrease
// in width and never go below kMinimumRungDimension on either axis.
ResolutionLadder build_ladder(int base_width, int base_height, LadderScheme scheme);

}  // namespace bladerunner
