#pragma once

#include <stdexcept>
#include <string>

namespace vnav {

// Every library failure derives from Error so callers can catch one type.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class EmptyMask : public Error {
public:
    EmptyMask() : Error("mask contains no vessel pixel") {}
};

class GeometryOverflow : public Error {
public:
    using Error::Error;
};

// Raised while reading masks, sidecars, Q-tables and config files.
class ParseError : public Error {
public:
    using Error::Error;
};

class Unreachable : public Error {
public:
    using Error::Error;
};

class OffVessel : public Error {
public:
    using Error::Error;
};

class InvalidParams : public Error {
public:
    using Error::Error;
};

class EpisodeFinished : public Error {
public:
    EpisodeFinished() : Error("episode already finished; call reset()") {}
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace vnav
