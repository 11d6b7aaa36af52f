#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace tailcert {

/// Base of every error raised by the library. The CLI maps these to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dimension mismatch. `layer` is set when the mismatch is inside a network.
class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& what, std::optional<std::size_t> layer = std::nullopt)
      : Error(what), layer_(layer) {}
  std::optional<std::size_t> layer() const noexcept { return layer_; }

 private:
  std::optional<std::size_t> layer_;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

/// A certificate or parameter was requested from an object that cannot provide it.
class CapabilityError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double estimate, std::vector<double> iterate,
                   std::size_t iterations)
      : Error(what), estimate_(estimate), iterate_(std::move(iterate)), iterations_(iterations) {}

  double last_estimate() const noexcept { return estimate_; }
  const std::vector<double>& last_iterate() const noexcept { return iterate_; }
  std::size_t iterations() const noexcept { return iterations_; }

 private:
  double estimate_;
  std::vector<double> iterate_;
  std::size_t iterations_;
};

class DefinitenessError : public Error {
 public:
  DefinitenessError(const std::string& what, std::size_t pivot) : Error(what), pivot_(pivot) {}
  std::size_t pivot() const noexcept { return pivot_; }

 private:
  std::size_t pivot_;
};

/// Malformed file content; names the offending field and, for arrays, the index.
class FormatError : public Error {
 public:
  FormatError(std::string field, std::optional<std::size_t> index, const std::string& detail)
      : Error(compose(field, index, detail)), field_(std::move(field)), index_(index) {}

  const std::string& field() const noexcept { return field_; }
  std::optional<std::size_t> index() const noexcept { return index_; }

 private:
  static std::string compose(const std::string& field, std::optional<std::size_t> index,
                             const std::string& detail) {
    std::string out = "format error in field '" + field + "'";
    if (index) out += " at index " + std::to_string(*index);
    return out + ": " + detail;
  }

  std::string field_;
  std::optional<std::size_t> index_;
};

class IngestError : public Error {
 public:
  IngestError(std::string file, std::size_t row, const std::string& detail)
      : Error(file + ":" + std::to_string(row) + ": " + detail), file_(std::move(file)), row_(row) {}

  const std::string& file() const noexcept { return file_; }
  /// 1-based line number in the file; the header is line 1.
  std::size_t row() const noexcept { return row_; }

 private:
  std::string file_;
  std::size_t row_;
};

}  // namespace tailcert
