#pragma once

// Minimal reader/writer for the unquoted, comma-separated files used by the
// dataset contracts.

#include <charconv>
#include <cmath>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include "lmfuse/error.hpp"

namespace lmfuse::csv {

class Reader {
 public:
  Reader(std::istream& in, std::string source, std::string_view expected_header)
      : in_(in), source_(std::move(source)) {
    if (!read_line()) throw ParseError(source_, 1, "missing header");
    std::string_view header = line_;
    if (header.starts_with("\xEF\xBB\xBF")) header.remove_prefix(3);
    if (header != expected_header) {
      throw ParseError(source_, line_no_,
                       "unexpected header; expected '" + std::string(expected_header) + "'");
    }
  }

  // Next non-blank row split on commas. Views stay valid until the next call.
  bool next(std::vector<std::string_view>& fields) {
    while (read_line()) {
      if (line_.empty()) continue;
      fields.clear();
      std::string_view rest = line_;
      for (;;) {
        auto pos = rest.find(',');
        fields.push_back(rest.substr(0, pos));
        if (pos == std::string_view::npos) break;
        rest.remove_prefix(pos + 1);
      }
      return true;
    }
    return false;
  }

  std::size_t line() const noexcept { return line_no_; }

  double real(std::string_view field, std::string_view column) const {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc{} || ptr != field.data() + field.size() || field.empty() || !std::isfinite(v)) {
      throw ParseError(source_, line_no_,
                       "non-numeric value '" + std::string(field) + "' in column " + std::string(column));
    }
    return v;
  }

  long integer(std::string_view field, std::string_view column) const {
    long v = 0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc{} || ptr != field.data() + field.size() || field.empty()) {
      throw ParseError(source_, line_no_,
                       "non-integer value '" + std::string(field) + "' in column " + std::string(column));
    }
    return v;
  }

 private:
  bool read_line() {
    if (!std::getline(in_, line_)) return false;
    ++line_no_;
    if (!line_.empty() && line_.back() == '\r') line_.pop_back();
    return true;
  }

  std::istream& in_;
  std::string source_;
  std::string line_;
  std::size_t line_no_ = 0;
};

// Shortest representation that round-trips exactly.
inline std::string format(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace lmfuse::csv
