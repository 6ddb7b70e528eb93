#include "satbench/csv.hpp"

#include "satbench/error.hpp"

namespace satbench::csv {

bool Reader::next(Record& record) {
  record.fields.clear();
  record.line = line_;

  int ch = in_.get();
  if (ch == std::char_traits<char>::eof()) return false;

  std::string field;
  bool quoted = false;
  bool field_was_quoted = false;
  while (true) {
    if (ch == std::char_traits<char>::eof()) {
      if (quoted) {
        throw CorpusError("unterminated quoted field starting in record at line " +
                          std::to_string(record.line));
      }
      record.fields.push_back(std::move(field));
      return true;
    }
    const char c = static_cast<char>(ch);
    if (quoted) {
      if (c == '"') {
        if (in_.peek() == '"') {
          in_.get();
          field.push_back('"');
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line_;
        field.push_back(c);
      }
    } else if (c == '"' && field.empty() && !field_was_quoted) {
      quoted = true;
      field_was_quoted = true;
    } else if (c == ',') {
      record.fields.push_back(std::move(field));
      field.clear();
      field_was_quoted = false;
    } else if (c == '\r' && in_.peek() == '\n') {
      // swallowed; the '\n' ends the record
    } else if (c == '\n') {
      ++line_;
      record.fields.push_back(std::move(field));
      return true;
    } else {
      field.push_back(c);
    }
    ch = in_.get();
  }
}

std::vector<Record> read_all(std::istream& in) {
  Reader reader(in);
  std::vector<Record> records;
  Record record;
  while (reader.next(record)) records.push_back(record);
  return records;
}

std::string escape_field(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace satbench::csv
