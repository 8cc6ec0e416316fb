#pragma once

#include <stdexcept>

namespace unitor {

/// A configuration file or value is invalid; the message says which field.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace unitor
