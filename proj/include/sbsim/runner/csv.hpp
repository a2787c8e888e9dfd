#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "sbsim/errors.hpp"

namespace sbsim::runner {

/// Long-format CSV output. Doubles are written in shortest round-trip form so that
/// identical inputs give byte-identical files.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, std::initializer_list<std::string_view> header)
      : out_(path, std::ios::binary | std::ios::trunc), columns_(header.size()) {
    if (!out_) throw InvalidArgument("cannot open " + path.string() + " for writing");
    bool first = true;
    for (auto h : header) {
      if (!first) out_ << ',';
      out_ << h;
      first = false;
    }
    out_ << '\n';
  }

  template <typename... Fields>
  void row(const Fields&... fields) {
    static_assert(sizeof...(Fields) > 0);
    if (sizeof...(Fields) != columns_) throw InvalidArgument("csv row width does not match header");
    std::string line;
    bool first = true;
    ((append(line, fields, first)), ...);
    line.push_back('\n');
    out_ << line;
  }

  static std::string format(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
  }

 private:
  template <typename T>
  static void append(std::string& line, const T& v, bool& first) {
    if (!first) line.push_back(',');
    first = false;
    if constexpr (std::is_floating_point_v<T>) {
      line += format(static_cast<double>(v));
    } else if constexpr (std::is_integral_v<T>) {
      line += std::to_string(v);
    } else {
      line += std::string_view(v);
    }
  }

  std::ofstream out_;
  std::size_t columns_;
};

}  // namespace sbsim::runner
