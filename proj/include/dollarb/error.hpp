#pragma once

#include <stdexcept>
#include <string>

namespace dollarb {

/// Malformed or inconsistent input data: dataset files that do not match
/// their layout, non-finite samples, template stores built for another
/// configuration. Precondition violations on plain numeric arguments throw
/// std::invalid_argument instead.
class DataError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A file or directory could not be read or written.
class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace dollarb
