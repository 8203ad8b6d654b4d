#pragma once

#include <initializer_list>
#include <ostream>
#include <string>
#include <string_view>

namespace decohere::csv {

/// Shortest-round-trip is not used on purpose: every value is printed with
/// exactly 17 significant digits, '.' separator, independent of the locale.
std::string format(double x);

std::string format(long long x);

void write_header(std::ostream& os, std::initializer_list<std::string_view> columns);

/// Writes fields joined by ',' followed by '\n'.
void write_row(std::ostream& os, std::initializer_list<std::string> fields);

}  // namespace decohere::csv
