#include "salab/csv.hpp"

#include "salab/types.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

namespace salab {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) return "nan";
  return std::string(buf, ptr);
}

std::string alpha_tag(double alpha) {
  char buf[64];
  auto [ptr, ec] =
      std::to_chars(buf, buf + sizeof(buf), alpha, std::chars_format::fixed);
  if (ec != std::errc()) return format_double(alpha);
  return std::string(buf, ptr);
}

CsvWriter::CsvWriter(const std::string& path,
                     const std::vector<std::string>& header)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) throw ConfigError("cannot write '" + path + "'");
  for (const auto& h : header) cell(h);
  end_row();
}

void CsvWriter::sep() {
  if (row_open_) out_.put(',');
  row_open_ = true;
}

CsvWriter& CsvWriter::cell(const std::string& s) {
  sep();
  out_ << s;
  return *this;
}

CsvWriter& CsvWriter::cell(double v) {
  sep();
  out_ << format_double(v);
  return *this;
}

CsvWriter& CsvWriter::cell(long v) {
  sep();
  out_ << v;
  return *this;
}

void CsvWriter::end_row() {
  out_.put('\n');
  row_open_ = false;
}

}  // namespace salab
