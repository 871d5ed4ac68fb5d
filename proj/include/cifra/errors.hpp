#pragma once

#include <stdexcept>
#include <string>

namespace cifra {

// Base for all pipeline errors. Messages are prefixed with the module
// that raised them so CLI failures name their provenance.
class CifraError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MalformedChord : public CifraError {
 public:
  explicit MalformedChord(const std::string& msg)
      : CifraError("chord_parser: MalformedChord: " + msg) {}
};

class EmptySong : public CifraError {
 public:
  explicit EmptySong(const std::string& msg)
      : CifraError("features: EmptySong: " + msg) {}
};

class SchemaError : public CifraError {
 public:
  explicit SchemaError(const std::string& msg)
      : CifraError("dataset: SchemaError: " + msg) {}
};

class OrderError : public CifraError {
 public:
  explicit OrderError(const std::string& msg)
      : CifraError("dataset: OrderError: " + msg) {}
};

class DegenerateGenre : public CifraError {
 public:
  explicit DegenerateGenre(const std::string& msg)
      : CifraError("dataset: DegenerateGenre: " + msg) {}
};

class AllMissing : public CifraError {
 public:
  explicit AllMissing(const std::string& msg)
      : CifraError("dataset: AllMissing: " + msg) {}
};

class EmptyNode : public CifraError {
 public:
  explicit EmptyNode(const std::string& msg)
      : CifraError("forest: EmptyNode: " + msg) {}
};

class DimensionMismatch : public CifraError {
 public:
  explicit DimensionMismatch(const std::string& msg)
      : CifraError("forest: DimensionMismatch: " + msg) {}
};

class LengthMismatch : public CifraError {
 public:
  explicit LengthMismatch(const std::string& msg)
      : CifraError("eval: LengthMismatch: " + msg) {}
};

class DegenerateKappa : public CifraError {
 public:
  explicit DegenerateKappa(const std::string& msg)
      : CifraError("eval: DegenerateKappa: " + msg) {}
};

}  // namespace cifra
