#pragma once

#include <stdexcept>
#include <string>

namespace corrtrack {

// Operands with incompatible or invalid dimensions.
struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Coordinate or index outside the valid grid.
struct BoundsError : std::out_of_range {
    using std::out_of_range::out_of_range;
};

// Argument outside its documented range, or data that makes an
// operation meaningless (empty memory, zero-norm feature, ...).
struct ValueError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Malformed input text.  Carries the 1-based line number when known.
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& what, long line = -1)
        : std::runtime_error(line > 0 ? what + " (line " + std::to_string(line) + ")"
                                      : what),
          line_(line) {}

    long line() const { return line_; }

private:
    long line_;
};

}  // namespace corrtrack
