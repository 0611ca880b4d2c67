#pragma once

#include <stdexcept>
#include <string>

namespace vertx {

/// Base class for every error raised by the pipeline.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// A contour whose rasterization covers zero pixels.
class DegenerateContour : public Error {
public:
    explicit DegenerateContour(const std::string& msg) : Error(msg) {}
};

/// Two masks or contour sets with different frame dimensions were combined.
class FrameMismatch : public Error {
public:
    explicit FrameMismatch(const std::string& msg) : Error(msg) {}
};

class EmptyMask : public Error {
public:
    explicit EmptyMask(const std::string& msg) : Error(msg) {}
};

class InvalidThreshold : public Error {
public:
    explicit InvalidThreshold(const std::string& msg) : Error(msg) {}
};

class InvalidConfig : public Error {
public:
    explicit InvalidConfig(const std::string& msg) : Error(msg) {}
};

/// No C2/S1 detection was available; labeling cannot proceed.
class NoReferenceFound : public Error {
public:
    explicit NoReferenceFound(const std::string& msg) : Error(msg) {}
};

class InvalidSpec : public Error {
public:
    explicit InvalidSpec(const std::string& msg) : Error(msg) {}
};

class InvalidCorruption : public Error {
public:
    explicit InvalidCorruption(const std::string& msg) : Error(msg) {}
};

/// Malformed or out-of-contract contour/report file.
class ParseError : public Error {
public:
    explicit ParseError(const std::string& msg) : Error(msg) {}
};

} // namespace vertx
