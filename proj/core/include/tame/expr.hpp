#pragma once

#include <string>
#include <vector>

#include "tame/jet.hpp"

namespace tame {

/// Tiny arithmetic expression grammar used by scenario files for coordinate
/// maps and conformal factors: +, -, *, /, unary -, parentheses, sin, cos,
/// sqrt, exp, numeric literals, `pi`, and named variables fixed at parse time
/// (t1..tm for parameters, x1..xn for chart coordinates).
class Expr {
  public:
    static Expr parse(const std::string& text, const std::vector<std::string>& variables);

    double eval(const double* vars) const;
    Jet eval_jet(const Jet* vars) const;

    const std::string& text() const { return text_; }
    int num_variables() const { return num_vars_; }

  private:
    enum class Op : std::uint8_t { push_const, push_var, add, sub, mul, div, neg, sin, cos, sqrt, exp };
    struct Instr {
        Op op;
        double value = 0.0;
        int var = 0;
    };

    template <typename T, typename MakeConst>
    T run(const T* vars, MakeConst make_const) const;

    std::string text_;
    int num_vars_ = 0;
    std::vector<Instr> program_;
};

} // namespace tame
