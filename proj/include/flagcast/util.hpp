#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace flagcast {

// 64-bit FNV-1a. Used for run manifests; stability across builds matters more
// than collision resistance here.
std::uint64_t fnv1a64(std::string_view data);
std::uint64_t fnv1a64_file(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

// Splits on '\t' only; empty fields are preserved. Views alias `line`.
std::vector<std::string_view> split_tsv(std::string_view line);

// Strict numeric parsing: the whole field must be consumed. Leading '+' is
// rejected, matching from_chars. Returns false on any defect.
bool parse_i64(std::string_view field, std::int64_t& out);
bool parse_u64(std::string_view field, std::uint64_t& out);
bool parse_f64(std::string_view field, double& out);

// Shortest representation that round-trips exactly through parse_f64.
std::string format_double(double v);

// key=value file: one pair per line, '#' starts a comment, blank lines are
// skipped, whitespace around key and value is trimmed. Duplicate keys and
// lines without '=' raise ParseError with the offending line number.
std::map<std::string, std::string> parse_kv_file(const std::filesystem::path& path);
std::map<std::string, std::string> parse_kv_text(std::string_view text,
                                                 const std::string& origin);

// Typed access over a parsed key=value map. Every accessor consumes the key
// it reads, so a caller can reject leftovers as unknown. Conversion failures
// and missing required keys raise ConfigError naming origin and key.
namespace kv {

std::optional<std::string> take(std::map<std::string, std::string>& kv,
                                const std::string& key);
std::string require(std::map<std::string, std::string>& kv, const std::string& key,
                    const std::string& origin);
std::int64_t as_int(const std::string& value, const std::string& key,
                    const std::string& origin);
std::uint64_t as_uint(const std::string& value, const std::string& key,
                      const std::string& origin);
double as_double(const std::string& value, const std::string& key,
                 const std::string& origin);
bool as_bool(const std::string& value, const std::string& key,
             const std::string& origin);

}  // namespace kv

class StopWatch {
public:
    StopWatch() : start_(std::chrono::steady_clock::now()) {}
    double elapsed_ms() const {
        return std::chrono::duration<double, std::milli>(
                   std::chrono::steady_clock::now() - start_)
            .count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

// Runs fn(begin, end) over contiguous chunks of [0, n), on up to `threads`
// workers. threads <= 1 runs inline. Chunking is a pure function of (n,
// threads), so results must not depend on chunk boundaries.
void parallel_for(std::size_t n, unsigned threads,
                  const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace flagcast
