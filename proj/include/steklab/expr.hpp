#ifndef STEKLAB_EXPR_HPP
#define STEKLAB_EXPR_HPP

#include "steklab/geometry.hpp"

#include <memory>
#include <string>

namespace steklab {

// Safe arithmetic over x1, x2: constants, + - * / ^, parentheses and the
// elementary functions exp, log, sin, cos, sqrt. No general code execution.
struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

ExprPtr parse_expression(const std::string& text);
double eval_expression(const ExprPtr& e, double x1, double x2);
ExprPtr differentiate(const ExprPtr& e, int var);  // var: 0 -> x1, 1 -> x2
std::string expression_to_string(const ExprPtr& e);

// "one" and "x1" are recognized shortcuts; anything else goes through the
// parser. Bounds are left at zero until weight_bounds_on fills them in.
WeightField weight_from_expression(const std::string& text);

} // namespace steklab

#endif
