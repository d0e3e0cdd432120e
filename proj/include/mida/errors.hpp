#pragma once

#include <stdexcept>
#include <string>

namespace mida {

// Shape disagreements between matrices that are supposed to line up.
class DimensionError : public std::invalid_argument {
 public:
  explicit DimensionError(const std::string& what) : std::invalid_argument(what) {}
};

// Malformed input files; carries enough position info to find the bad cell.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::string path, long row, long column, const std::string& what)
      : std::runtime_error(path + ":" + std::to_string(row) + ":" + std::to_string(column) +
                           ": " + what),
        path_(std::move(path)),
        row_(row),
        column_(column) {}

  const std::string& path() const { return path_; }
  long row() const { return row_; }
  long column() const { return column_; }

 private:
  std::string path_;
  long row_;
  long column_;
};

// Bad experiment configuration (unknown keys, missing files, invalid values).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace mida
