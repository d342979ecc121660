#pragma once

#include <stdexcept>
#include <string>

namespace cfx {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// exact computation would exceed its enumeration bound
struct InfeasibleError : Error {
    using Error::Error;
};

// malformed input data (carries file/line context in the message)
struct DataError : Error {
    using Error::Error;
};

struct TrainingDiverged : Error {
    using Error::Error;
};

}  // namespace cfx
