#pragma once

#include <string>

#include "ldg/space.hpp"

namespace ldg {

// Compiles an arithmetic expression over x1 and x2 into a closure.
// Grammar: floating literals, x1, x2, pi, + - * / ^ with standard
// precedence (^ binds tightest, right associative), parentheses, and the
// functions sin, cos, exp, sqrt. Syntax errors name the 1-based column;
// sqrt of a negative argument throws at evaluation time naming the point.
ScalarClosure parse_expression(const std::string& text);

}  // namespace ldg
