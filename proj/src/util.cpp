#include "flagcast/util.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <thread>

#include "flagcast/errors.hpp"

namespace flagcast {

std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t fnv1a64_file(const std::filesystem::path& path) {
    return fnv1a64(read_file(path));
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open for reading: " + path.string());
    std::string content((std::istreambuf_iterator<char>(in)),
                        std::istreambuf_iterator<char>());
    if (in.bad()) throw Error("read failed: " + path.string());
    return content;
}

void write_file(const std::filesystem::path& path, std::string_view content) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open for writing: " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error("write failed: " + path.string());
}

std::vector<std::string_view> split_tsv(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        std::size_t tab = line.find('\t', start);
        if (tab == std::string_view::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
    return fields;
}

namespace {

template <typename T>
bool parse_full(std::string_view field, T& out) {
    const char* first = field.data();
    const char* last = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc{} && ptr == last && !field.empty();
}

}  // namespace

bool parse_i64(std::string_view field, std::int64_t& out) {
    return parse_full(field, out);
}

bool parse_u64(std::string_view field, std::uint64_t& out) {
    return parse_full(field, out);
}

bool parse_f64(std::string_view field, double& out) {
    return parse_full(field, out);
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) throw Error("double formatting failed");
    return std::string(buf, ptr);
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

}  // namespace

std::map<std::string, std::string> parse_kv_text(std::string_view text,
                                                 const std::string& origin) {
    std::map<std::string, std::string> out;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t nl = text.find('\n', pos);
        std::string_view line = (nl == std::string_view::npos)
                                    ? text.substr(pos)
                                    : text.substr(pos, nl - pos);
        pos = (nl == std::string_view::npos) ? text.size() + 1 : nl + 1;
        ++line_no;

        std::size_t hash = line.find('#');
        if (hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;

        std::size_t eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ParseError(origin, line_no, 1, "expected key=value");
        }
        std::string key(trim(line.substr(0, eq)));
        std::string value(trim(line.substr(eq + 1)));
        if (key.empty()) {
            throw ParseError(origin, line_no, 1, "empty key");
        }
        if (!out.emplace(key, value).second) {
            throw ParseError(origin, line_no, 1, "duplicate key '" + key + "'");
        }
    }
    return out;
}

std::map<std::string, std::string> parse_kv_file(const std::filesystem::path& path) {
    return parse_kv_text(read_file(path), path.string());
}

namespace kv {

std::optional<std::string> take(std::map<std::string, std::string>& kv,
                                const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) return std::nullopt;
    std::string value = it->second;
    kv.erase(it);
    return value;
}

std::string require(std::map<std::string, std::string>& kv, const std::string& key,
                    const std::string& origin) {
    auto v = take(kv, key);
    if (!v) throw ConfigError(origin + ": missing required key '" + key + "'");
    return *v;
}

std::int64_t as_int(const std::string& value, const std::string& key,
                    const std::string& origin) {
    std::int64_t out = 0;
    if (!parse_i64(value, out)) {
        throw ConfigError(origin + ": key '" + key + "' has non-integer value '" +
                          value + "'");
    }
    return out;
}

std::uint64_t as_uint(const std::string& value, const std::string& key,
                      const std::string& origin) {
    std::uint64_t out = 0;
    if (!parse_u64(value, out)) {
        throw ConfigError(origin + ": key '" + key + "' has non-integer value '" +
                          value + "'");
    }
    return out;
}

double as_double(const std::string& value, const std::string& key,
                 const std::string& origin) {
    double out = 0;
    if (!parse_f64(value, out)) {
        throw ConfigError(origin + ": key '" + key + "' has non-numeric value '" +
                          value + "'");
    }
    return out;
}

bool as_bool(const std::string& value, const std::string& key,
             const std::string& origin) {
    if (value == "0" || value == "false") return false;
    if (value == "1" || value == "true") return true;
    throw ConfigError(origin + ": key '" + key + "' must be 0/1, got '" + value +
                      "'");
}

}  // namespace kv

void parallel_for(std::size_t n, unsigned threads,
                  const std::function<void(std::size_t, std::size_t)>& fn) {
    if (n == 0) return;
    const unsigned workers =
        std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
    if (workers == 1) {
        fn(0, n);
        return;
    }
    const std::size_t chunk = (n + workers - 1) / workers;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::vector<std::exception_ptr> errors(workers);
    for (unsigned w = 0; w < workers; ++w) {
        const std::size_t begin = std::min(n, static_cast<std::size_t>(w) * chunk);
        const std::size_t end = std::min(n, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([&, begin, end, w] {
            try {
                fn(begin, end);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace flagcast
