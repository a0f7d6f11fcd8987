#ifndef CEOAE_ERRORS_HPP
#define CEOAE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace ceoae {

/// Malformed or out-of-contract input (bad dimensions, non-finite data,
/// unreadable files, invalid configuration).
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// No click could be located in a recording.
class DetectionError : public InputError {
public:
    using InputError::InputError;
};

/// A decomposition or other numerical routine failed to converge.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace ceoae

#endif
