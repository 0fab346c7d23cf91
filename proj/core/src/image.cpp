#include "bladerunner/image.hpp"

#include "bladerunner/error.hpp"

#include <json.hpp>
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <stdexcept>

namespace bladerunner {

namespace {

constexpr std::array<std::uint8_t, 3> kJpegMagic{0xFF, 0xD8, 0xFF};
constexpr std::array<std::uint8_t, 8> kPngMagic{0x89, 0x50, 0x4E, 0x47, 0x0D, 0x0A, 0x1A, 0x0A};

template <std::size_t N>
bool starts_with(std::span<const std::uint8_t> bytes, const std::array<std::uint8_t, N>& magic) {
    return bytes.size() >= N && std::equal(magic.begin(), magic.end(), bytes.begin());
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ImageDecodeError("cannot open " + path.string());
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

cv::Mat as_mat(const ImageSample& sample) {
    return cv::Mat(sample.height, sample.width, CV_8UC1,
                   const_cast<std::uint8_t*>(sample.pixels.data()));
}

}  // namespace

std::string_view to_string(SampleSource source) {
    switch (source) {
        case SampleSource::local_file: return "local_file";
        case SampleSource::fetched: return "fetched";
        case SampleSource::fixture: return "fixture";
    }
    return "unknown";
}

void validate(const ImageSample& sample) {
    if (sample.width < 1 || sample.height < 1) {
        throw std::invalid_argument("image sample '" + sample.sample_id + "' has empty dimensions");
    }
    if (sample.pixels.size() != static_cast<std::size_t>(sample.width) * sample.height) {
        throw std::invalid_argument("image sample '" + sample.sample_id +
                                    "' pixel buffer does not match width x height");
    }
}

ImageSample make_constant_sample(std::string sample_id, int width, int height, std::uint8_t value,
                                 SampleSource source) {
    if (width < 1 || height < 1) {
        throw DegenerateResolution("constant sample needs positive dimensions");
    }
    ImageSample sample;
    sample.sample_id = std::move(sample_id);
    sample.source = source;
    sample.width = width;
    sample.height = height;
    sample.pixels.assign(static_cast<std::size_t>(width) * height, value);
    return sample;
}

std::uint8_t luminance(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    return static_cast<std::uint8_t>((299u * r + 587u * g + 114u * b + 500u) / 1000u);
}

ImageSample decode_image(std::string sample_id, std::span<const std::uint8_t> bytes,
                         SampleSource source) {
    ImageFormat format;
    if (starts_with(bytes, kJpegMagic)) {
        format = ImageFormat::jpeg;
    } else if (starts_with(bytes, kPngMagic)) {
        format = ImageFormat::png;
    } else {
        throw ImageDecodeError("'" + sample_id + "' is neither JPEG nor PNG");
    }

    const cv::Mat encoded(1, static_cast<int>(bytes.size()), CV_8UC1,
                          const_cast<std::uint8_t*>(bytes.data()));
    cv::Mat decoded;
    try {
        decoded = cv::imdecode(encoded, cv::IMREAD_UNCHANGED | cv::IMREAD_IGNORE_ORIENTATION);
    } catch (const cv::Exception& e) {
        throw ImageDecodeError("'" + sample_id + "' failed to decode: " + e.what());
    }
    if (decoded.empty()) {
        throw ImageDecodeError("'" + sample_id + "' is corrupt or truncated");
    }
    if (decoded.depth() == CV_16U) {
        decoded.convertTo(decoded, CV_8U, 1.0 / 257.0);
    } else if (decoded.depth() != CV_8U) {
        throw ImageDecodeError("'" + sample_id + "' has an unsupported sample depth");
    }

    ImageSample sample;
    sample.sample_id = std::move(sample_id);
    sample.source = source;
    sample.original_format = format;
    sample.width = decoded.cols;
    sample.height = decoded.rows;
    sample.pixels.resize(static_cast<std::size_t>(decoded.cols) * decoded.rows);

    const int channels = decoded.channels();
    for (int y = 0; y < decoded.rows; ++y) {
        const std::uint8_t* row = decoded.ptr<std::uint8_t>(y);
        std::uint8_t* out = sample.pixels.data() + static_cast<std::size_t>(y) * decoded.cols;
        for (int x = 0; x < decoded.cols; ++x) {
            const std::uint8_t* px = row + static_cast<std::size_t>(x) * channels;
            if (channels == 1 || channels == 2) {
                out[x] = px[0];
            } else {
                // OpenCV decodes to BGR(A).
                out[x] = luminance(px[2], px[1], px[0]);
            }
        }
    }
    return sample;
}

ImageSample load_image(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    return decode_image(path.stem().string(), bytes, SampleSource::local_file);
}

ImageSample load_fixture_sample(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ImageDecodeError("cannot open fixture " + path.string());
    }
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ImageDecodeError("fixture " + path.string() + " is not valid JSON: " + e.what());
    }
    const auto width = doc.find("width");
    const auto height = doc.find("height");
    if (width == doc.end() || height == doc.end() || !width->is_number_integer() ||
        !height->is_number_integer() || width->get<int>() < 1 || height->get<int>() < 1) {
        throw ImageDecodeError("fixture " + path.string() + " lacks positive width/height");
    }
    ImageSample sample = make_constant_sample(path.stem().string(), width->get<int>(),
                                              height->get<int>(), 128, SampleSource::fixture);
    sample.original_format = ImageFormat::png;
    return sample;
}

bool is_sample_file(const std::filesystem::path& path) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext == ".jpg" || ext == ".jpeg" || ext == ".png" || ext == ".json";
}

ImageSample load_sample(const std::filesystem::path& path) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (ext == ".json") {
        return load_fixture_sample(path);
    }
    return load_image(path);
}

void save_jpeg(const ImageSample& sample, const std::filesystem::path& path) {
    validate(sample);
    std::vector<std::uint8_t> encoded;
    const std::vector<int> params{cv::IMWRITE_JPEG_QUALITY, 95, cv::IMWRITE_JPEG_PROGRESSIVE, 0,
                                  cv::IMWRITE_JPEG_OPTIMIZE, 0};
    if (!cv::imencode(".jpg", as_mat(sample), encoded, params)) {
        throw StorageError("failed to encode JPEG for " + sample.sample_id);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(encoded.data()),
              static_cast<std::streamsize>(encoded.size()));
    if (!out) {
        throw StorageError("failed to write " + path.string());
    }
}

ImageSample resize(const ImageSample& sample, std::pair<int, int> target) {
    validate(sample);
    const auto [width, height] = target;
    if (width < 1 || height < 1) {
        throw DegenerateResolution("resize target " + std::to_string(width) + "x" +
                                   std::to_string(height) + " is degenerate");
    }

    ImageSample out;
    out.sample_id = base_sample_id(sample.sample_id) + "@" + std::to_string(width) + "x" +
                    std::to_string(height);
    out.source = sample.source;
    out.original_format = sample.original_format;
    out.width = width;
    out.height = height;
    if (width == sample.width && height == sample.height) {
        out.pixels = sample.pixels;
        return out;
    }
    out.pixels.resize(static_cast<std::size_t>(width) * height);
    cv::Mat dst(height, width, CV_8UC1, out.pixels.data());
    cv::resize(as_mat(sample), dst, dst.size(), 0, 0, cv::INTER_LINEAR_EXACT);
    return out;
}

std::string base_sample_id(std::string_view sample_id) {
    const auto at = sample_id.rfind('@');
    if (at == std::string_view::npos) {
        return std::string(sample_id);
    }
    const std::string_view suffix = sample_id.substr(at + 1);
    const auto x = suffix.find('x');
    if (x == std::string_view::npos || x == 0 || x + 1 == suffix.size()) {
        return std::string(sample_id);
    }
    int w = 0;
    int h = 0;
    const auto wr = std::from_chars(suffix.data(), suffix.data() + x, w);
    const auto hr = std::from_chars(suffix.data() + x + 1, suffix.data() + suffix.size(), h);
    if (wr.ec != std::errc{} || wr.ptr != suffix.data() + x || hr.ec != std::errc{} ||
        hr.ptr != suffix.data() + suffix.size()) {
        return std::string(sample_id);
    }
    return std::string(sample_id.substr(0, at));
}

LadderScheme parse_ladder_scheme(std::string_view text) {
    if (text == "base2") return LadderScheme::base2;
    if (text == "base10") return LadderScheme::base10;
    if (text == "both") return LadderScheme::both;
    throw std::invalid_argument("unknown ladder scheme '" + std::string(text) + "'");
}

std::string_view to_string(LadderScheme scheme) {
    switch (scheme) {
        case LadderScheme::base2: return "base2";
        case LadderScheme::base10: return "base10";
        case LadderScheme::both: return "both";
    }
    return "unknown";
}

ResolutionLadder build_ladder(int base_width, int base_height, LadderScheme scheme) {
    if (base_width < kMinimumRungDimension || base_height < kMinimumRungDimension) {
        throw DegenerateResolution("ladder base " + std::to_string(base_width) + "x" +
                                   std::to_string(base_height) + " is below " +
                                   std::to_string(kMinimumRungDimension) + " px");
    }

    // Height follows the base aspect ratio, rounded to the nearest pixel.
    const auto height_for = [&](int width) {
        return static_cast<int>(std::lround(static_cast<double>(base_height) * width / base_width));
    };
    const auto usable = [&](int width, int height) {
        return width >= kMinimumRungDimension && height >= kMinimumRungDimension;
    };

    std::vector<std::pair<int, int>> lower;
    if (scheme == LadderScheme::base2 || scheme == LadderScheme::both) {
        for (int width = base_width / 2; width > 0; width /= 2) {
            const int height = height_for(width);
            if (!usable(width, height)) break;
            lower.emplace_back(width, height);
        }
    }
    if (scheme == LadderScheme::base10 || scheme == LadderScheme::both) {
        for (int width = (base_width / 100) * 100; width >= 100; width -= 100) {
            if (width >= base_width) continue;
            const int height = height_for(width);
            if (!usable(width, height)) continue;
            lower.emplace_back(width, height);
        }
    }
    std::sort(lower.begin(), lower.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    lower.erase(std::unique(lower.begin(), lower.end()), lower.end());

    ResolutionLadder ladder{base_width, base_height, {{base_width, base_height}}};
    ladder.rungs.insert(ladder.rungs.end(), lower.begin(), lower.end());
    return ladder;
}

}  // namespace bladerunner
