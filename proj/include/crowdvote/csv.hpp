#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace crowdvote::csv {

/// Splits one record on commas. Double-quoted fields may contain commas and
/// "" escapes; surrounding whitespace outside quotes is kept.
std::vector<std::string> split_line(std::string_view line);

/// Quotes a field only when it contains a comma, quote or newline.
std::string escape(std::string_view field);

std::string trim(std::string_view s);

}  // namespace crowdvote::csv
