#include "emit.hpp"

#include <charconv>
#include <fstream>
#include <iostream>
#include <stdexcept>

namespace dessim::cli {

Table::Table(std::string schema, std::vector<std::string> columns)
    : schema_(std::move(schema)), columns_(std::move(columns)) {}

void Table::add_row(std::vector<nlohmann::json> cells) {
  if (cells.size() != columns_.size()) {
    throw std::logic_error("row width does not match column count");
  }
  rows_.push_back(std::move(cells));
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

std::string cell_text(const nlohmann::json& cell) {
  if (cell.is_null()) return "";
  if (cell.is_string()) return cell.get<std::string>();
  if (cell.is_boolean()) return cell.get<bool>() ? "true" : "false";
  if (cell.is_number_float()) return format_double(cell.get<double>());
  return cell.dump();
}

}  // namespace

std::string Table::csv() const {
  std::string out = "# " + schema_ + "\n";
  for (std::size_t c = 0; c < columns_.size(); ++c) {
    if (c) out.push_back(',');
    out += columns_[c];
  }
  out.push_back('\n');
  for (const auto& row : rows_) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out.push_back(',');
      out += cell_text(row[c]);
    }
    out.push_back('\n');
  }
  return out;
}

std::string Table::json() const {
  nlohmann::ordered_json doc;
  doc["schema"] = schema_;
  doc["columns"] = columns_;
  auto& rows = doc["rows"] = nlohmann::ordered_json::array();
  for (const auto& row : rows_) {
    nlohmann::ordered_json obj;
    for (std::size_t c = 0; c < row.size(); ++c) {
      obj[columns_[c]] = row[c];
    }
    rows.push_back(std::move(obj));
  }
  return doc.dump(2) + "\n";
}

void write_output(const std::string& path, const std::string& payload) {
  if (path.empty()) {
    std::cout << payload;
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::invalid_argument("cannot open output file: " + path);
  }
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!out) {
    throw std::runtime_error("write failed: " + path);
  }
}

}  // namespace dessim::cli
