#ifndef SEVPR_ERRORS_HPP
#define SEVPR_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace sevpr {

// Bad user input: malformed config keys, out-of-range options, violated
// operation preconditions. CLI maps this to exit code 2.
class config_error : public std::runtime_error {
public:
  explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

// Filesystem / parse failures. Messages carry file name and, for record
// formats, the line or byte offset of the first bad record. Exit code 3.
class io_error : public std::runtime_error {
public:
  explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite values where finite ones are required (inputs, losses,
// gradients). Exit code 4.
class numeric_error : public std::runtime_error {
public:
  explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace sevpr

#endif
