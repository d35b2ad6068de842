#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "hbmeta/types.hpp"

namespace hbmeta {

inline const char* kCsvHeader =
    "study_id,label,intervention_events,intervention_nonevents,control_events,control_nonevents";

namespace csv_detail {

inline std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  fields.push_back(cur);
  return fields;
}

inline std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

inline std::int64_t parse_count(const std::string& field, int line_no) {
  std::string t = field;
  size_t b = t.find_first_not_of(" \t");
  size_t e = t.find_last_not_of(" \t");
  if (b == std::string::npos) {
    throw NonIntegerCount("line " + std::to_string(line_no) + ": empty count");
  }
  t = t.substr(b, e - b + 1);
  size_t pos = 0;
  long long v = 0;
  try {
    v = std::stoll(t, &pos);
  } catch (const std::exception&) {
    throw NonIntegerCount("line " + std::to_string(line_no) + ": '" + field +
                          "' is not an integer");
  }
  if (pos != t.size()) {
    throw NonIntegerCount("line " + std::to_string(line_no) + ": '" + field +
                          "' is not an integer");
  }
  return v;
}

}  // namespace csv_detail

/// Parses the study CSV format. The six-column header is required; extra
/// trailing columns are ignored and reported in `warnings`. CRLF files
/// parse identically to LF files. The result passes validate_dataset.
inline MetaDataset parse_csv_stream(std::istream& in, std::vector<std::string>* warnings = nullptr) {
  std::string line;
  if (!std::getline(in, line)) throw MalformedHeader("empty input");
  line = csv_detail::strip_cr(line);
  if (!line.empty() && line.size() >= 3 && (unsigned char)line[0] == 0xEF &&
      (unsigned char)line[1] == 0xBB && (unsigned char)line[2] == 0xBF) {
    line = line.substr(3);  // UTF-8 BOM
  }
  auto header = csv_detail::split_fields(line);
  auto expected = csv_detail::split_fields(kCsvHeader);
  if (header.size() < expected.size()) {
    throw MalformedHeader("expected header '" + std::string(kCsvHeader) + "'");
  }
  for (size_t i = 0; i < expected.size(); ++i) {
    if (header[i] != expected[i]) {
      throw MalformedHeader("column " + std::to_string(i + 1) + " must be '" + expected[i] +
                            "', got '" + header[i] + "'");
    }
  }
  if (header.size() > expected.size() && warnings != nullptr) {
    warnings->push_back("ignoring " + std::to_string(header.size() - expected.size()) +
                        " extra column(s) after '" + expected.back() + "'");
  }

  MetaDataset data;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = csv_detail::strip_cr(line);
    if (line.empty()) continue;
    auto fields = csv_detail::split_fields(line);
    if (fields.size() < expected.size()) {
      throw DataError("line " + std::to_string(line_no) + ": expected at least 6 fields");
    }
    StudyRecord rec;
    rec.id = fields[0];
    rec.label = fields[1];
    rec.intervention_events = csv_detail::parse_count(fields[2], line_no);
    rec.intervention_nonevents = csv_detail::parse_count(fields[3], line_no);
    rec.control_events = csv_detail::parse_count(fields[4], line_no);
    rec.control_nonevents = csv_detail::parse_count(fields[5], line_no);
    data.studies.push_back(std::move(rec));
  }
  return validate_dataset(data);
}

inline MetaDataset parse_csv(const std::string& path, std::vector<std::string>* warnings = nullptr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  return parse_csv_stream(in, warnings);
}

inline std::string to_csv(const MetaDataset& data) {
  std::string out = kCsvHeader;
  out += '\n';
  for (const auto& s : data.studies) {
    out += s.id + "," + s.label + "," + std::to_string(s.intervention_events) + "," +
           std::to_string(s.intervention_nonevents) + "," + std::to_string(s.control_events) +
           "," + std::to_string(s.control_nonevents) + "\n";
  }
  return out;
}

inline void write_csv(const std::string& path, const MetaDataset& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << to_csv(data);
}

}  // namespace hbmeta
