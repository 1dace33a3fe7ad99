#pragma once

#include <stdexcept>
#include <string>

namespace difbench {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad CLI usage, unreadable config, invalid input data. Exit code 1.
struct ConfigError : Error {
    using Error::Error;
};

// Malformed corpus/persona/record files. Exit code 1.
struct DataError : Error {
    using Error::Error;
};

// Network failure, HTTP error status, malformed endpoint response. Exit code 2.
struct TransportError : Error {
    using Error::Error;
};

// Response cache entry failed its integrity check. Exit code 1.
struct CacheError : Error {
    using Error::Error;
};

// A greedy-mode endpoint returned different text for an identical request. Exit code 3.
struct DeterminismError : Error {
    using Error::Error;
};

}  // namespace difbench
