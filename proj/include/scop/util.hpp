#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace scop {

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

std::string trim(std::string_view s);

/// Collapse runs of whitespace to single spaces and trim the ends.
std::string normalize_whitespace(std::string_view s);

/// Remove every whitespace character. Used for expression-style answers.
std::string strip_whitespace(std::string_view s);

std::string to_lower(std::string_view s);

/// Shortest round-trip decimal representation (std::to_chars).
std::string format_double(double v);

std::string read_file(const std::filesystem::path& path);

/// Write via a temp file in the same directory, then rename into place.
void atomic_write_file(const std::filesystem::path& path, std::string_view content);

void ensure_directory(const std::filesystem::path& dir);

/// Parse a JSONL file, invoking fn(line_number, parsed) per non-empty line.
/// Throws ValidationError with the line number on malformed JSON.
void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(std::size_t, const nlohmann::json&)>& fn);

std::string iso8601_utc_now();

/// Deterministic RNG helpers. std::mt19937_64 output is pinned by the
/// standard, and the bounded draw below avoids the implementation-defined
/// std::uniform_int_distribution, so sequences are identical on every
/// platform.
class DeterministicRng {
public:
    explicit DeterministicRng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform draw in [0, n) via rejection sampling.
    std::uint64_t bounded(std::uint64_t n);

    /// Uniform double in [0, 1).
    double unit();

    template <typename T>
    void shuffle(std::vector<T>& v) {
        if (v.size() < 2) return;
        for (std::size_t i = v.size() - 1; i > 0; --i) {
            std::size_t j = static_cast<std::size_t>(bounded(i + 1));
            std::swap(v[i], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

} // namespace scop
