#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace dessim::cli {

/// Report table with a versioned schema tag. CSV and JSON renderings are
/// byte-deterministic: doubles use shortest round-trip formatting, rows
/// are emitted in insertion order, LF line endings, dot decimals.
class Table {
 public:
  Table(std::string schema, std::vector<std::string> columns);

  void add_row(std::vector<nlohmann::json> cells);

  std::string csv() const;
  std::string json() const;

 private:
  std::string schema_;
  std::vector<std::string> columns_;
  std::vector<std::vector<nlohmann::json>> rows_;
};

std::string format_double(double v);

/// Writes to the given path, or to stdout when path is empty.
void write_output(const std::string& path, const std::string& payload);

}  // namespace dessim::cli
