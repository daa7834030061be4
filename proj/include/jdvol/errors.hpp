#pragma once

#include <stdexcept>
#include <string>

namespace jdvol {

// Malformed input data (CSV, plan files): maps to CLI exit code 2.
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failure during simulation (non-finite state): CLI exit code 3.
class SimulationError : public std::runtime_error {
public:
    SimulationError(const std::string& what, long step) : std::runtime_error(what), step_index(step) {}
    long step_index;
};

// Numerical failure outside simulation (no reliable estimate, etc.): CLI exit code 3.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}
