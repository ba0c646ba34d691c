#include "pubopt/csv.hpp"

#include <charconv>
#include <cstdio>
#include <ostream>

#include "pubopt/errors.hpp"

namespace pubopt::csv {

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void Writer::header(std::initializer_list<std::string_view> names) {
  for (auto n : names) field(n);
  end_row();
}

Writer& Writer::field(std::string_view s) {
  if (!first_) out_ << ',';
  out_ << s;
  first_ = false;
  return *this;
}

Writer& Writer::field(double x) { return field(std::string_view(format_double(x))); }
Writer& Writer::field(int x) { return field(std::string_view(std::to_string(x))); }
Writer& Writer::field(long long x) { return field(std::string_view(std::to_string(x))); }
Writer& Writer::field(bool b) { return field(std::string_view(b ? "1" : "0")); }

void Writer::end_row() {
  out_ << '\n';
  first_ = true;
}

std::vector<std::string> split_line(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.emplace_back(line.substr(start));
      break;
    }
    out.emplace_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

double parse_double(const std::string& text, std::string_view what) {
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) {
    throw ValidationError("cannot parse " + std::string(what) + " from '" + text + "'");
  }
  return value;
}

int parse_int(const std::string& text, std::string_view what) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ValidationError("cannot parse " + std::string(what) + " from '" + text + "'");
  }
  return value;
}

}  // namespace pubopt::csv
