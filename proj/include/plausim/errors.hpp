#pragma once

#include <stdexcept>
#include <string>

namespace plausim {

enum class ErrorKind { InvalidArgument, Schema, DegenerateGeometry, SimulationDiverged, Io };

/// Base for every error the library raises. `kind()` drives CLI exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& what) : Error(ErrorKind::InvalidArgument, what) {}
};

class SchemaError : public Error {
 public:
  explicit SchemaError(const std::string& what) : Error(ErrorKind::Schema, what) {}
};

class DegenerateGeometry : public Error {
 public:
  explicit DegenerateGeometry(const std::string& what) : Error(ErrorKind::DegenerateGeometry, what) {}
};

class SimulationDiverged : public Error {
 public:
  SimulationDiverged(const std::string& quantity, double time)
      : Error(ErrorKind::SimulationDiverged,
              "simulation diverged at t=" + std::to_string(time) + "s: " + quantity),
        quantity_(quantity),
        time_(time) {}
  const std::string& quantity() const noexcept { return quantity_; }
  double time() const noexcept { return time_; }

 private:
  std::string quantity_;
  double time_;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::Io, what) {}
};

}  // namespace plausim
