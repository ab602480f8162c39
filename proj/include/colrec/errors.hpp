#pragma once

#include <stdexcept>
#include <string>

namespace colrec {

// Error taxonomy used across the library. The CLI maps these onto exit
// codes: IoError -> 3, everything else -> 2.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

class FormatError : public Error {
public:
    using Error::Error;
};

class LookupError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace colrec
