#ifndef GCD_ERRORS_HPP
#define GCD_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace gcd {

// Shape disagreement between tensors (matmul inner dims, sgd buffers, ...).
struct DimensionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid operation configuration (conv stride/padding that yields a
// non-integral output size, bad hyperparameters, malformed config files).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Out-of-range class index or element index.
struct IndexError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Caller violated an API contract (backward on a non-scalar, AUC on an
// empty score list, fewer than 2 classes, ...).
struct ContractError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed external file (IDX stream, checkpoint container).
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Training diverged or could not proceed.
struct TrainingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Non-finite value escaped a numeric routine.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Component used before it was trained/loaded.
struct StateError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Detector dataset construction found no successful adversarial example.
struct EmptyAdversarialError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace gcd

#endif
