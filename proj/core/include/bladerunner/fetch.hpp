#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace bladerunner {

inline constexpr std::chrono::milliseconds kDefaultFetchInterval{1500};

struct FetchedFile {
    std::size_t ordinal = 0;  // 1-based request number
    std::filesystem::path path;
    std::size_t size_bytes = 0;
    std::string sha256;
    // Set when the body hashes identically to an earlier response of this run.
    std::optional<std::size_t> duplicate_of;

    bool duplicate() const { return duplicate_of.has_value(); }
};

struct FetchFailure {
    std::size_t ordinal = 0;
    std::string message;
};

struct FetchManifest {
    std::vector<FetchedFile> saved;
    std::vector<FetchFailure> errors;
    std::size_t requests_issued = 0;

    std::vector<std::filesystem::path> paths() const;
};

// Issues `count` sequential GET requests against source_url, waiting
// min_interval after each exchange before the next, and stores each body as
// <timestamp>_<ordinal>.jpg under out_dir. Per-request failures are collected
// in the manifest; storage failures throw StorageError.
FetchManifest fetch_samples(std::string_view source_url, int count,
                            std::chrono::milliseconds min_interval,
                            const std::filesystem::path& out_dir);

std::string sha256_hex(std::string_view bytes);

}  // namespace bladerunner
