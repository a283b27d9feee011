#pragma once

#include <stdexcept>
#include <string>

namespace brw {

// Base class for all library errors. Subclasses carry the failure category
// so callers (and the CLI exit-code mapping) can dispatch without string
// matching.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidLaw : public Error {
 public:
  using Error::Error;
};

class TiltOutsideDomain : public Error {
 public:
  using Error::Error;
};

class ClassificationInconclusive : public Error {
 public:
  using Error::Error;
};

class DegenerateSpec : public Error {
 public:
  using Error::Error;
};

class RegimeMismatch : public Error {
 public:
  using Error::Error;
};

class NoBracket : public Error {
 public:
  using Error::Error;
};

class UnsupportedRegime : public Error {
 public:
  using Error::Error;
};

class PopulationCapExceeded : public Error {
 public:
  using Error::Error;
};

class NonLatticeStep : public Error {
 public:
  using Error::Error;
};

class EmptyLevelSet : public Error {
 public:
  using Error::Error;
};

class ScheduleTooShort : public Error {
 public:
  using Error::Error;
};

class ConfigParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace brw
