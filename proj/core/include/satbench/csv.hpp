#pragma once

#include <cstddef>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace satbench::csv {

struct Record {
  std::size_t line = 0;  // 1-based physical line where the record starts
  std::vector<std::string> fields;
};

/// RFC 4180 reader: quoted fields, doubled quotes, embedded newlines, CRLF.
class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  /// Returns false at end of input. Throws CorpusError on an unterminated quote.
  bool next(Record& record);

 private:
  std::istream& in_;
  std::size_t line_ = 1;
};

std::vector<Record> read_all(std::istream& in);

std::string escape_field(std::string_view field);

}  // namespace satbench::csv
