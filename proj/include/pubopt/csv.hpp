#pragma once

#include <initializer_list>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace pubopt::csv {

/// Shortest-stable text for a double: 17 significant digits, "%.17g".
std::string format_double(double x);

/// Writes comma-separated rows. Fields are emitted verbatim; none of the
/// files produced here contain commas or quotes inside a field.
class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void header(std::initializer_list<std::string_view> names);

  Writer& field(std::string_view s);
  Writer& field(double x);
  Writer& field(int x);
  Writer& field(long long x);
  Writer& field(bool b);
  void end_row();

 private:
  std::ostream& out_;
  bool first_ = true;
};

/// Splits one line on commas; trims a trailing '\r'.
std::vector<std::string> split_line(std::string_view line);

/// Strict numeric parse; throws ValidationError naming `what` on failure.
double parse_double(const std::string& text, std::string_view what);
int parse_int(const std::string& text, std::string_view what);

}  // namespace pubopt::csv
