#pragma once

#include <cstdint>
#include <initializer_list>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace qdetect {

/// Shortest round-trip-safe decimal with 17 significant digits; "inf"/"-inf"/"nan" for
/// non-finite values.
std::string format_real(double value);

/// Quotes a field when it contains a comma, quote or line break (RFC 4180).
std::string csv_field(std::string_view text);

/// Writes one RFC 4180 record terminated by CRLF.
void write_csv_row(std::ostream& out, const std::vector<std::string>& fields);

/// Splits one CSV record; handles quoted fields. Does not handle embedded line breaks.
std::vector<std::string> parse_csv_line(std::string_view line);

/// 64-bit FNV-1a over bytes, printed as 16 hex digits for provenance stamps.
std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t value);

}  // namespace qdetect
