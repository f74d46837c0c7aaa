#pragma once

#include <stdexcept>
#include <string>

namespace scenforge
{

class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

// Malformed input text (dataset lines, checkpoint bytes, CSV).
class ParseError : public Error
{
public:
  using Error::Error;
};

// Well-formed input that breaks a domain invariant.
class ValidationError : public Error
{
public:
  using Error::Error;
};

class ShapeError : public Error
{
public:
  using Error::Error;
};

// A NaN/Inf showed up in a forward value, a gradient or a training loss.
class NumericError : public Error
{
public:
  using Error::Error;
};

class ConfigError : public Error
{
public:
  using Error::Error;
};

// An upstream pipeline artifact (checkpoint, dataset) is absent or incompatible.
class MissingArtifactError : public Error
{
public:
  using Error::Error;
};

}  // namespace scenforge
