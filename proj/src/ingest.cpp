#include "flagcast/ingest.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <limits>
#include <string>

#include "flagcast/errors.hpp"
#include "flagcast/util.hpp"

namespace flagcast {

namespace {

struct LineCursor {
    std::string_view text;
    std::size_t pos = 0;
    std::size_t line_no = 0;

    // Returns false at end of input. Strips one trailing '\r'.
    bool next(std::string_view& line) {
        if (pos >= text.size()) return false;
        std::size_t nl = text.find('\n', pos);
        if (nl == std::string_view::npos) {
            line = text.substr(pos);
            pos = text.size();
        } else {
            line = text.substr(pos, nl - pos);
            pos = nl + 1;
        }
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        ++line_no;
        return true;
    }
};

// Fixed-arity splitter for the hot parse loop; avoids per-line allocation.
template <std::size_t N>
std::size_t split_fields(std::string_view line, std::array<std::string_view, N>& out,
                         std::array<std::size_t, N>& offsets) {
    std::size_t count = 0;
    std::size_t start = 0;
    while (count < N) {
        offsets[count] = start;
        std::size_t tab = line.find('\t', start);
        if (tab == std::string_view::npos) {
            out[count++] = line.substr(start);
            return count;
        }
        out[count++] = line.substr(start, tab - start);
        start = tab + 1;
    }
    return N + 1;  // too many fields
}

[[noreturn]] void fail(const std::string& origin, std::size_t line, std::size_t col,
                       const std::string& msg) {
    throw ParseError(origin, line, col + 1, msg);
}

Day parse_day(std::string_view field, const std::string& origin, std::size_t line,
              std::size_t col) {
    std::int64_t i = 0;
    double frac = 0;
    if (parse_i64(field, i)) {
        // fall through to the range check
    } else if (parse_f64(field, frac)) {
        if (!std::isfinite(frac)) fail(origin, line, col, "non-finite day");
        i = static_cast<std::int64_t>(std::floor(frac));
    } else {
        fail(origin, line, col, "non-numeric day '" + std::string(field) + "'");
    }
    if (i < 0) fail(origin, line, col, "negative day");
    if (i > std::numeric_limits<std::int32_t>::max()) {
        fail(origin, line, col, "day out of range");
    }
    return Day{static_cast<std::int32_t>(i)};
}

AccountId parse_account(std::string_view field, const std::string& origin,
                        std::size_t line, std::size_t col) {
    std::uint64_t id = 0;
    if (!parse_u64(field, id)) {
        fail(origin, line, col, "bad account id '" + std::string(field) + "'");
    }
    return AccountId{id};
}

std::int32_t parse_code(std::string_view field, const std::string& origin,
                        std::size_t line, std::size_t col) {
    std::int64_t v = 0;
    if (!parse_i64(field, v)) {
        fail(origin, line, col, "bad category code '" + std::string(field) + "'");
    }
    if (v < kSentinel || v > std::numeric_limits<std::int32_t>::max()) {
        fail(origin, line, col, "category code out of range");
    }
    return static_cast<std::int32_t>(v);
}

std::int8_t parse_tristate(std::string_view field, const std::string& origin,
                           std::size_t line, std::size_t col) {
    std::int64_t v = 0;
    if (!parse_i64(field, v) || v < -1 || v > 1) {
        fail(origin, line, col, "expected -1, 0, or 1");
    }
    return static_cast<std::int8_t>(v);
}

void require_header(LineCursor& cur, std::string_view expected,
                    const std::string& origin) {
    std::string_view line;
    if (!cur.next(line)) {
        throw ParseError(origin, 1, 1, "missing header line");
    }
    if (line != expected) {
        throw ParseError(origin, 1, 1,
                         "bad header; expected '" + std::string(expected) + "'");
    }
}

void append_int(std::string& out, std::int64_t v) {
    char buf[24];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    out.append(buf, ptr);
}

}  // namespace

std::vector<LoginEvent> parse_login_text(std::string_view text,
                                         const std::string& origin) {
    LineCursor cur{text};
    require_header(cur, kLoginHeader, origin);

    std::vector<LoginEvent> events;
    std::string_view line;
    std::array<std::string_view, 13> f;
    std::array<std::size_t, 13> at;
    while (cur.next(line)) {
        if (line.empty()) continue;
        std::size_t n = split_fields(line, f, at);
        if (n != 13) {
            throw ParseError(origin, cur.line_no, 1,
                             "expected 13 fields, got " +
                                 std::to_string(n > 13 ? 14 : n));
        }
        LoginEvent e;
        e.account = parse_account(f[0], origin, cur.line_no, at[0]);
        e.day = parse_day(f[1], origin, cur.line_no, at[1]);
        e.source = parse_code(f[2], origin, cur.line_no, at[2]);
        e.login_type = parse_code(f[3], origin, cur.line_no, at[3]);
        e.status = parse_code(f[4], origin, cur.line_no, at[4]);
        e.password_status = parse_code(f[5], origin, cur.line_no, at[5]);
        e.action = parse_code(f[6], origin, cur.line_no, at[6]);
        e.geo = parse_code(f[7], origin, cur.line_no, at[7]);
        e.geo_status = parse_code(f[8], origin, cur.line_no, at[8]);
        e.asn = parse_code(f[9], origin, cur.line_no, at[9]);
        e.user_agent = parse_code(f[10], origin, cur.line_no, at[10]);
        e.success = parse_tristate(f[11], origin, cur.line_no, at[11]);
        e.verified_mobile = parse_tristate(f[12], origin, cur.line_no, at[12]);
        events.push_back(e);
    }
    return events;
}

std::vector<FlagEvent> parse_flag_text(std::string_view text,
                                       const std::string& origin) {
    LineCursor cur{text};
    require_header(cur, kFlagHeader, origin);

    std::vector<FlagEvent> events;
    std::string_view line;
    std::array<std::string_view, 2> f;
    std::array<std::size_t, 2> at;
    while (cur.next(line)) {
        if (line.empty()) continue;
        if (split_fields(line, f, at) != 2) {
            throw ParseError(origin, cur.line_no, 1, "expected 2 fields");
        }
        FlagEvent e;
        e.account = parse_account(f[0], origin, cur.line_no, at[0]);
        e.day = parse_day(f[1], origin, cur.line_no, at[1]);
        events.push_back(e);
    }
    return events;
}

std::vector<LoginEvent> parse_login_file(const std::filesystem::path& path) {
    return parse_login_text(read_file(path), path.string());
}

std::vector<FlagEvent> parse_flag_file(const std::filesystem::path& path) {
    return parse_flag_text(read_file(path), path.string());
}

void write_login_file(const std::filesystem::path& path,
                      std::span<const LoginEvent> events) {
    std::string out;
    out.reserve(events.size() * 48 + 128);
    out.append(kLoginHeader);
    out.push_back('\n');
    for (const auto& e : events) {
        append_int(out, static_cast<std::int64_t>(e.account.id));
        out.push_back('\t');
        append_int(out, e.day.index);
        for (std::int32_t code : {e.source, e.login_type, e.status, e.password_status,
                                  e.action, e.geo, e.geo_status, e.asn, e.user_agent}) {
            out.push_back('\t');
            append_int(out, code);
        }
        out.push_back('\t');
        append_int(out, e.success);
        out.push_back('\t');
        append_int(out, e.verified_mobile);
        out.push_back('\n');
    }
    write_file(path, out);
}

void write_flag_file(const std::filesystem::path& path,
                     std::span<const FlagEvent> events) {
    std::string out;
    out.reserve(events.size() * 12 + 16);
    out.append(kFlagHeader);
    out.push_back('\n');
    for (const auto& e : events) {
        append_int(out, static_cast<std::int64_t>(e.account.id));
        out.push_back('\t');
        append_int(out, e.day.index);
        out.push_back('\n');
    }
    write_file(path, out);
}

AccountSetLedger build_ledger(std::span<const LoginEvent> logins,
                              std::span<const FlagEvent> flags) {
    AccountSetLedger::DayMap login_days;
    AccountSetLedger::DayMap flag_days;
    for (const auto& e : logins) login_days[e.account].push_back(e.day);
    for (const auto& e : flags) flag_days[e.account].push_back(e.day);
    return AccountSetLedger(std::move(login_days), std::move(flag_days));
}

}  // namespace flagcast
