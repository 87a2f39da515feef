#pragma once

#include <string>
#include <string_view>

namespace wbe {

/// Whole file as a string; throws InvalidInput if it cannot be opened.
std::string read_text_file(const std::string& path);

/// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::string& path, std::string_view contents);

/// %.17g, which round-trips every double.
std::string format_double(double v);

}  // namespace wbe
