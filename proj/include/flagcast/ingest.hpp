#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "flagcast/core.hpp"

namespace flagcast {

// Reserved code for a missing categorical field; uniqueness counters skip it.
inline constexpr std::int32_t kSentinel = -1;

// One raw login record. Category vocabularies are open integer spaces; only
// the sentinel is special. success / verified_mobile are tri-state so a record
// can omit them (-1) without breaking the f11+f12=f1 invariant downstream.
struct LoginEvent {
    AccountId account;
    Day day;
    std::int32_t source = kSentinel;
    std::int32_t login_type = kSentinel;
    std::int32_t status = kSentinel;
    std::int32_t password_status = kSentinel;
    std::int32_t action = kSentinel;
    std::int32_t geo = kSentinel;
    std::int32_t geo_status = kSentinel;
    std::int32_t asn = kSentinel;
    std::int32_t user_agent = kSentinel;
    std::int8_t success = -1;
    std::int8_t verified_mobile = -1;

    bool operator==(const LoginEvent&) const = default;
};

struct FlagEvent {
    AccountId account;
    Day day;

    bool operator==(const FlagEvent&) const = default;
};

inline constexpr std::string_view kLoginHeader =
    "account\tday\tsource\tlogin_type\tstatus\tpassword_status\taction\tgeo"
    "\tgeo_status\tasn\tuser_agent\tsuccess\tverified_mobile";
inline constexpr std::string_view kFlagHeader = "account\tday";

// Both parsers require the exact header line and keep input line order.
// Malformed content raises ParseError carrying line and column. Fractional
// day stamps are truncated to the containing day; negative days are rejected.
std::vector<LoginEvent> parse_login_file(const std::filesystem::path& path);
std::vector<FlagEvent> parse_flag_file(const std::filesystem::path& path);

std::vector<LoginEvent> parse_login_text(std::string_view text,
                                         const std::string& origin);
std::vector<FlagEvent> parse_flag_text(std::string_view text,
                                       const std::string& origin);

void write_login_file(const std::filesystem::path& path,
                      std::span<const LoginEvent> events);
void write_flag_file(const std::filesystem::path& path,
                     std::span<const FlagEvent> events);

// Day-partitions the raw events. Duplicate (account, day) flags collapse.
// Throws ConfigError when both inputs are empty.
AccountSetLedger build_ledger(std::span<const LoginEvent> logins,
                              std::span<const FlagEvent> flags);

}  // namespace flagcast
