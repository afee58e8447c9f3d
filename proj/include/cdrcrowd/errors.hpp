#pragma once

#include <stdexcept>
#include <string>

namespace cdrcrowd {

// Base class for every failure raised by the library.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

class InputError : public Error
{
public:
  using Error::Error;
};

// Raised when too many rows of an input file are rejected.
class IngestError : public Error
{
public:
  using Error::Error;
};

class NoEventSignal : public Error
{
public:
  NoEventSignal() : Error("no event signal") {}
  using Error::Error;
};

class NoEventDetected : public Error
{
public:
  NoEventDetected() : Error("no event detected at any radius") {}
  using Error::Error;
};

class DegenerateDesign : public Error
{
public:
  DegenerateDesign() : Error("degenerate design") {}
  using Error::Error;
};

} // namespace cdrcrowd
