#pragma once

#include <fstream>
#include <initializer_list>
#include <string>
#include <vector>

namespace salab {

/// Shortest decimal text that round-trips to the same double.
std::string format_double(double v);

/// Filename fragment for a stepsize: 0.01 -> "0.01", 1e-4 -> "0.0001".
std::string alpha_tag(double alpha);

/// Comma-separated writer: UTF-8, '.' decimal point, header in row 1.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);

  CsvWriter& cell(const std::string& s);
  CsvWriter& cell(double v);
  CsvWriter& cell(long v);
  CsvWriter& cell(int v) { return cell(static_cast<long>(v)); }
  void end_row();

  const std::string& path() const { return path_; }

 private:
  void sep();

  std::string path_;
  std::ofstream out_;
  bool row_open_ = false;
};

}  // namespace salab
