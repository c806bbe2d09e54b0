#pragma once

#include <stdexcept>
#include <string>

namespace mzforge {

class MzError : public std::runtime_error {
 public:
  explicit MzError(const std::string& what) : std::runtime_error(what) {}
};

class InvalidInput : public MzError {
 public:
  explicit InvalidInput(const std::string& what) : MzError(what) {}
};

class NotPSD : public MzError {
 public:
  explicit NotPSD(const std::string& what) : MzError(what) {}
};

class IllConditioned : public MzError {
 public:
  IllConditioned(const std::string& what, double smallest)
      : MzError(what), smallest_eigenvalue(smallest) {}
  double smallest_eigenvalue;
};

class DegenerateChristoffel : public MzError {
 public:
  explicit DegenerateChristoffel(const std::string& what) : MzError(what) {}
};

class ZeroTail : public MzError {
 public:
  explicit ZeroTail(const std::string& what) : MzError(what) {}
};

class SizeLimit : public MzError {
 public:
  explicit SizeLimit(const std::string& what) : MzError(what) {}
};

class BigIntRequired : public MzError {
 public:
  explicit BigIntRequired(const std::string& what) : MzError(what) {}
};

class NonExactDesign : public MzError {
 public:
  explicit NonExactDesign(const std::string& what) : MzError(what) {}
};

}  // namespace mzforge
