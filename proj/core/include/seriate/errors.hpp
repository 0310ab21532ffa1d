#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace seriate {

// Base for everything thrown by the library.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class UnknownSymbol : public Error {
public:
  explicit UnknownSymbol(const std::string& sym)
      : Error("unknown symbol: " + sym) {}
};

class BackendMismatch : public Error {
public:
  explicit BackendMismatch(const std::string& msg) : Error(msg) {}
};

class MissingWeight : public Error {
public:
  explicit MissingWeight(const std::string& msg) : Error(msg) {}
};

// Carries the offending element index and a reason.
class MalformedSerialization : public Error {
public:
  MalformedSerialization(std::size_t position, const std::string& reason)
      : Error("malformed serialization at element " + std::to_string(position) +
              ": " + reason),
        position(position), reason(reason) {}
  std::size_t position;
  std::string reason;
};

// Fiber is larger than the caller's bound; `count` is exact when
// `count_is_exact`, otherwise a lower bound established before bailing out.
class EnumerationTooLarge : public Error {
public:
  EnumerationTooLarge(double count, bool exact)
      : Error("fiber enumeration exceeds bound (" +
              std::string(exact ? "exactly " : "at least ") +
              std::to_string(count) + " serializations)"),
        count(count), count_is_exact(exact) {}
  double count;
  bool count_is_exact;
};

// A prefix that extends to no serialization of the instance.  Unreachable
// through the sampler; reaching it means a backend bug.
class DeadEnd : public Error {
public:
  explicit DeadEnd(const std::string& msg) : Error(msg) {}
};

class EmptyCandidates : public Error {
public:
  EmptyCandidates() : Error("candidate list is empty") {}
};

class InternalInconsistency : public Error {
public:
  explicit InternalInconsistency(const std::string& msg) : Error(msg) {}
};

class NotASerializationOf : public Error {
public:
  explicit NotASerializationOf(const std::string& msg) : Error(msg) {}
};

class DuplicateName : public Error {
public:
  explicit DuplicateName(const std::string& name)
      : Error("duplicate name: " + name) {}
};

class NonFiniteActivation : public Error {
public:
  explicit NonFiniteActivation(const std::string& msg) : Error(msg) {}
};

class NonFiniteTrajectory : public Error {
public:
  explicit NonFiniteTrajectory(const std::string& msg) : Error(msg) {}
};

class MissingHead : public Error {
public:
  MissingHead() : Error("model has no discriminative head") {}
};

class DivisionUndefined : public Error {
public:
  explicit DivisionUndefined(const std::string& msg) : Error(msg) {}
};

class UnrealizableProperty : public Error {
public:
  explicit UnrealizableProperty(const std::string& msg) : Error(msg) {}
};

class EntryBudgetExceeded : public Error {
public:
  EntryBudgetExceeded(std::uint64_t entries, std::uint64_t budget)
      : Error("constraint matrix would hold " + std::to_string(entries) +
              " entries, budget is " + std::to_string(budget)) {}
};

}  // namespace seriate
