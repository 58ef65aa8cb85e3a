#ifndef PERK_ERRORS_HPP
#define PERK_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace perk {

// Error categories map onto CLI exit codes:
//   parse_error -> 1, precision_error -> 2, hypothesis_error -> 3.
// incompatible_error is a hypothesis violation (mismatched rings).

struct error : std::runtime_error {
    explicit error(const std::string& msg) : std::runtime_error(msg) {}
};

struct parse_error : error {
    explicit parse_error(const std::string& msg) : error("parse: " + msg) {}
};

struct precision_error : error {
    explicit precision_error(const std::string& msg) : error("precision: " + msg) {}
};

struct hypothesis_error : error {
    explicit hypothesis_error(const std::string& msg) : error("hypothesis: " + msg) {}
};

struct incompatible_error : hypothesis_error {
    explicit incompatible_error(const std::string& msg) : hypothesis_error("incompatible rings: " + msg) {}
};

struct unimplemented_error : hypothesis_error {
    explicit unimplemented_error(const std::string& msg) : hypothesis_error("unimplemented: " + msg) {}
};

} // namespace perk

#endif
