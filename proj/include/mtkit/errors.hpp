#pragma once

#include <stdexcept>
#include <string>

namespace mtkit {

// Bad arguments or configuration. The CLI maps this to exit code 1.
class parameter_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed or inconsistent input data. The CLI maps this to exit code 2.
class data_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class io_error : public data_error {
 public:
  using data_error::data_error;
};

class parse_error : public data_error {
 public:
  using data_error::data_error;
};

// Matrix shape mismatch, message names both shapes.
class shape_error : public parameter_error {
 public:
  using parameter_error::parameter_error;
};

// Corpus/model language orientation mismatch.
class orientation_error : public parameter_error {
 public:
  using parameter_error::parameter_error;
};

}  // namespace mtkit
