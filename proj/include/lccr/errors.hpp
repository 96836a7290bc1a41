#pragma once

#include <stdexcept>
#include <string>

namespace lccr {

/// Base error for this library. `kind()` separates recoverable data problems
/// (bad files, malformed manifests) from numeric failures (degenerate inputs),
/// which the CLI maps to distinct exit codes.
class Error : public std::runtime_error {
public:
  enum class Kind { data, numeric };

  Error(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

private:
  Kind kind_;
};

struct ZeroColumnError : Error {
  explicit ZeroColumnError(const std::string& what) : Error(Kind::numeric, what) {}
};

struct ZeroVectorError : Error {
  explicit ZeroVectorError(const std::string& what) : Error(Kind::numeric, what) {}
};

struct ConstantVectorError : Error {
  explicit ConstantVectorError(const std::string& what) : Error(Kind::numeric, what) {}
};

struct AllResidualsInfiniteError : Error {
  explicit AllResidualsInfiniteError(const std::string& what) : Error(Kind::numeric, what) {}
};

struct UnsupportedFormatError : Error {
  explicit UnsupportedFormatError(const std::string& what) : Error(Kind::data, what) {}
};

struct CorruptFileError : Error {
  explicit CorruptFileError(const std::string& what) : Error(Kind::data, what) {}
};

struct SizeMismatchError : Error {
  explicit SizeMismatchError(const std::string& what) : Error(Kind::data, what) {}
};

}  // namespace lccr
