#pragma once

#include <stdexcept>
#include <string>

namespace gsae {

/// Base class for all library errors so callers can catch one type.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// graph-core
struct UnbalancedBrackets : Error {
  std::size_t position;
  explicit UnbalancedBrackets(std::size_t pos)
      : Error("unbalanced brackets at position " + std::to_string(pos)), position(pos) {}
};

struct IllegalCharacter : Error {
  std::size_t position;
  char character;
  IllegalCharacter(std::size_t pos, char c)
      : Error("illegal character '" + std::string(1, c) + "' at position " + std::to_string(pos)),
        position(pos), character(c) {}
};

struct SequenceTooLong : Error {
  explicit SequenceTooLong(std::size_t len, std::size_t max)
      : Error("sequence length " + std::to_string(len) + " exceeds enumeration bound " +
              std::to_string(max)) {}
};

struct NodeCountMismatch : Error {
  NodeCountMismatch(int a, int b)
      : Error("node count mismatch: " + std::to_string(a) + " vs " + std::to_string(b)) {}
};

struct SchemaViolation : Error {
  std::size_t line;
  std::string field;
  SchemaViolation(std::size_t line_no, std::string field_name, const std::string& what)
      : Error("schema violation at line " + std::to_string(line_no) + ", field '" + field_name +
              "': " + what),
        line(line_no), field(std::move(field_name)) {}
};

struct IoFailure : Error {
  explicit IoFailure(const std::string& what) : Error("io failure: " + what) {}
};

struct NonUniformLength : Error {
  NonUniformLength(std::size_t line_no, std::size_t got, std::size_t expected)
      : Error("line " + std::to_string(line_no) + ": structure length " + std::to_string(got) +
              " differs from first line's " + std::to_string(expected)) {}
};

// scattering
struct IsolatedNode : Error {
  int node;
  explicit IsolatedNode(int i)
      : Error("node " + std::to_string(i) +
              " is isolated; degree normalization undefined (enable self_loop_isolated to patch)"),
        node(i) {}
};

// nn-core
struct ShapeMismatch : Error {
  explicit ShapeMismatch(const std::string& what) : Error("shape mismatch: " + what) {}
};

struct BackwardWithoutForward : Error {
  BackwardWithoutForward() : Error("backward called without a matching forward") {}
};

// gsae / sin
struct MissingTargets : Error {
  MissingTargets() : Error("alpha > 0 requires meta targets, none provided") {}
};

struct NonFiniteLoss : Error {
  long iteration;
  explicit NonFiniteLoss(long iter)
      : Error("non-finite loss at iteration " + std::to_string(iter)), iteration(iter) {}
};

struct RegressorUntrained : Error {
  RegressorUntrained() : Error("model was trained with alpha = 0; regressor carries no signal") {}
};

struct ManifestMismatch : Error {
  explicit ManifestMismatch(const std::string& what) : Error("manifest mismatch: " + what) {}
};

// eval
struct KTooLarge : Error {
  KTooLarge(int k, int rows)
      : Error("k = " + std::to_string(k) + " must be < row count " + std::to_string(rows)) {}
};

struct ZeroSignal : Error {
  ZeroSignal() : Error("signal has zero norm; smoothness index undefined") {}
};

struct LengthMismatch : Error {
  LengthMismatch(std::size_t a, std::size_t b)
      : Error("length mismatch: " + std::to_string(a) + " vs " + std::to_string(b)) {}
};

// cli / config
struct ConfigError : Error {
  explicit ConfigError(const std::string& what) : Error("config error: " + what) {}
};

}  // namespace gsae
