#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "refcast/error.hpp"

namespace refcast::csv {

using Row = std::vector<std::string>;

struct Document {
  std::vector<std::string> comments;  // '#' lines, without the leading '#'
  std::vector<Row> rows;
};

/// RFC 4180 reader. Lines whose first character is '#' (outside a quoted
/// field) are collected as comments; blank lines are skipped.
inline Document parse(std::string_view text) {
  if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);
  Document doc;
  Row row;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t line = 1;

  auto end_row = [&] {
    if (field_started || !row.empty()) {
      row.push_back(std::move(field));
      doc.rows.push_back(std::move(row));
    }
    row.clear();
    field.clear();
    field_started = false;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    if (c == '#' && row.empty() && !field_started) {
      auto eol = text.find('\n', i);
      auto comment = text.substr(i + 1, eol == std::string_view::npos
                                            ? std::string_view::npos
                                            : eol - i - 1);
      if (comment.ends_with('\r')) comment.remove_suffix(1);
      doc.comments.emplace_back(comment);
      if (eol == std::string_view::npos) break;
      i = eol;
      ++line;
      continue;
    }
    switch (c) {
      case '"':
        if (!field.empty()) {
          throw Error(ErrorCode::ParseError,
                      "line " + std::to_string(line) +
                          ": quote inside unquoted field");
        }
        in_quotes = true;
        field_started = true;
        break;
      case ',':
        row.push_back(std::move(field));
        field.clear();
        field_started = true;
        break;
      case '\r':
        break;
      case '\n':
        end_row();
        ++line;
        break;
      default:
        field += c;
        field_started = true;
    }
  }
  if (in_quotes) {
    throw Error(ErrorCode::ParseError, "unterminated quoted field at end of input");
  }
  end_row();
  return doc;
}

inline std::string quote(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos &&
      !field.starts_with('#')) {
    return std::string(field);
  }
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

inline std::string format_row(const Row& row) {
  std::string line;
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) line += ',';
    line += quote(row[i]);
  }
  return line + '\n';
}

}  // namespace refcast::csv
