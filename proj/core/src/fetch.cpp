#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "bladerunner/fetch.hpp"

#include "bladerunner/error.hpp"

#include <openssl/evp.h>

#include <ctime>
#include <fstream>
#include <iomanip>
#include <map>
#include <regex>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace bladerunner {

namespace {

struct ParsedUrl {
    std::string origin;  // scheme://host[:port]
    std::string target;  // path plus query
};

ParsedUrl parse_url(std::string_view url) {
    static const std::regex pattern(R"(^(https?)://([^/?#]+)([^#]*)?)", std::regex::icase);
    std::cmatch match;
    if (!std::regex_search(url.data(), url.data() + url.size(), match, pattern)) {
        throw std::invalid_argument("unsupported URL '" + std::string(url) + "'");
    }
    ParsedUrl parsed;
    parsed.origin = match[1].str() + "://" + match[2].str();
    parsed.target = match[3].length() > 0 ? match[3].str() : "/";
    if (parsed.target.front() != '/') {
        parsed.target.insert(parsed.target.begin(), '/');
    }
    return parsed;
}

std::string utc_timestamp(std::chrono::system_clock::time_point now) {
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch());
    const std::time_t seconds = static_cast<std::time_t>(ms.count() / 1000);
    std::tm tm{};
    gmtime_r(&seconds, &tm);
    std::ostringstream out;
    out << std::put_time(&tm, "%Y%m%dT%H%M%S") << std::setw(3) << std::setfill('0')
        << (ms.count() % 1000) << 'Z';
    return out.str();
}

std::string file_name(std::chrono::system_clock::time_point now, std::size_t ordinal) {
    std::ostringstream out;
    out << utc_timestamp(now) << '_' << std::setw(4) << std::setfill('0') << ordinal << ".jpg";
    return out.str();
}

}  // namespace

std::vector<std::filesystem::path> FetchManifest::paths() const {
    std::vector<std::filesystem::path> out;
    out.reserve(saved.size());
    for (const auto& file : saved) out.push_back(file.path);
    return out;
}

std::string sha256_hex(std::string_view bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int length = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("SHA-256 digest failed");
    }
    std::ostringstream out;
    out << std::hex << std::setfill('0');
    for (unsigned int i = 0; i < length; ++i) out << std::setw(2) << static_cast<int>(digest[i]);
    return out.str();
}

FetchManifest fetch_samples(std::string_view source_url, int count,
                            std::chrono::milliseconds min_interval,
                            const std::filesystem::path& out_dir) {
    if (count < 1) {
        throw std::invalid_argument("fetch count must be at least 1");
    }
    if (min_interval.count() < 0) {
        throw std::invalid_argument("fetch interval must be non-negative");
    }
    const ParsedUrl url = parse_url(source_url);

    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec || !std::filesystem::is_directory(out_dir)) {
        throw StorageError("cannot create output directory " + out_dir.string());
    }

    httplib::Client client(url.origin);
    client.set_follow_location(true);
    client.set_connection_timeout(std::chrono::seconds(10));
    client.set_read_timeout(std::chrono::seconds(30));
    client.set_default_headers({{"User-Agent", "bladerunner-fetch/1.0"}});

    FetchManifest manifest;
    std::map<std::string, std::size_t> seen;
    // Spacing runs from the end of the previous exchange, so the server never
    // sees two requests closer together than min_interval.
    std::optional<std::chrono::steady_clock::time_point> last_done;

    for (std::size_t ordinal = 1; ordinal <= static_cast<std::size_t>(count); ++ordinal) {
        if (last_done) {
            std::this_thread::sleep_until(*last_done + min_interval);
        }
        ++manifest.requests_issued;
        const auto response = client.Get(url.target);
        last_done = std::chrono::steady_clock::now();
        if (!response) {
            manifest.errors.push_back({ordinal, "request failed: " + httplib::to_string(response.error())});
            continue;
        }
        if (response->status < 200 || response->status >= 300) {
            manifest.errors.push_back({ordinal, "HTTP status " + std::to_string(response->status)});
            continue;
        }

        FetchedFile file;
        file.ordinal = ordinal;
        file.size_bytes = response->body.size();
        file.sha256 = sha256_hex(response->body);
        file.path = out_dir / file_name(std::chrono::system_clock::now(), ordinal);
        if (const auto it = seen.find(file.sha256); it != seen.end()) {
            file.duplicate_of = it->second;
        } else {
            seen.emplace(file.sha256, ordinal);
        }

        std::ofstream out(file.path, std::ios::binary | std::ios::trunc);
        out.write(response->body.data(), static_cast<std::streamsize>(response->body.size()));
        out.close();
        if (!out) {
            throw StorageError("failed to write " + file.path.string());
        }
        manifest.saved.push_back(std::move(file));
    }
    return manifest;
}

}  // namespace bladerunner
