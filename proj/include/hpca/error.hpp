#pragma once

#include <stdexcept>
#include <string>

namespace hpca {

/// Malformed or inconsistent user input (bad files, mismatched dimensions).
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A numerical precondition failed: degenerate columns, rank deficiency,
/// non-finite values, solver breakdown.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace hpca
