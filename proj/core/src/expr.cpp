#include "tame/expr.hpp"

#include <cctype>
#include <cmath>
#include <stdexcept>

namespace tame {

namespace {

struct Parser {
    const std::string& text;
    const std::vector<std::string>& vars;
    std::size_t pos = 0;
    std::vector<Expr>* unused = nullptr;

    explicit Parser(const std::string& t, const std::vector<std::string>& v) : text(t), vars(v) {}

    [[noreturn]] void fail(const std::string& what) const {
        throw std::invalid_argument("expression error at offset " + std::to_string(pos) + " in \"" +
                                    text + "\": " + what);
    }

    void skip_ws() {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    }

    bool consume(char c) {
        skip_ws();
        if (pos < text.size() && text[pos] == c) {
            ++pos;
            return true;
        }
        return false;
    }

    char peek() {
        skip_ws();
        return pos < text.size() ? text[pos] : '\0';
    }
};

} // namespace

Expr Expr::parse(const std::string& text, const std::vector<std::string>& variables) {
    Expr out;
    out.text_ = text;
    out.num_vars_ = static_cast<int>(variables.size());
    Parser p(text, variables);

    // recursive descent: expr := term (('+'|'-') term)*; term := factor (('*'|'/') factor)*;
    // factor := ('-')* primary; primary := number | name | name '(' expr ')' | '(' expr ')'
    struct Builder {
        Parser& p;
        std::vector<Instr>& prog;

        void expr() {
            term();
            while (true) {
                if (p.consume('+')) {
                    term();
                    prog.push_back({Op::add});
                } else if (p.consume('-')) {
                    term();
                    prog.push_back({Op::sub});
                } else {
                    break;
                }
            }
        }
        void term() {
            factor();
            while (true) {
                if (p.consume('*')) {
                    factor();
                    prog.push_back({Op::mul});
                } else if (p.consume('/')) {
                    factor();
                    prog.push_back({Op::div});
                } else {
                    break;
                }
            }
        }
        void factor() {
            bool neg = false;
            while (true) {
                if (p.consume('-')) neg = !neg;
                else if (p.consume('+')) continue;
                else break;
            }
            primary();
            if (neg) prog.push_back({Op::neg});
        }
        void primary() {
            const char c = p.peek();
            if (c == '(') {
                p.consume('(');
                expr();
                if (!p.consume(')')) p.fail("expected ')'");
                return;
            }
            if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
                std::size_t used = 0;
                double value = 0.0;
                try {
                    value = std::stod(p.text.substr(p.pos), &used);
                } catch (const std::exception&) {
                    p.fail("bad numeric literal");
                }
                p.pos += used;
                prog.push_back({Op::push_const, value});
                return;
            }
            if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
                std::string name;
                while (p.pos < p.text.size() &&
                       (std::isalnum(static_cast<unsigned char>(p.text[p.pos])) || p.text[p.pos] == '_'))
                    name += p.text[p.pos++];
                if (p.consume('(')) {
                    expr();
                    if (!p.consume(')')) p.fail("expected ')'");
                    if (name == "sin") prog.push_back({Op::sin});
                    else if (name == "cos") prog.push_back({Op::cos});
                    else if (name == "sqrt") prog.push_back({Op::sqrt});
                    else if (name == "exp") prog.push_back({Op::exp});
                    else p.fail("unknown function '" + name + "'");
                    return;
                }
                if (name == "pi") {
                    prog.push_back({Op::push_const, 3.14159265358979323846264338327950288});
                    return;
                }
                for (std::size_t i = 0; i < p.vars.size(); ++i) {
                    if (p.vars[i] == name) {
                        prog.push_back({Op::push_var, 0.0, static_cast<int>(i)});
                        return;
                    }
                }
                p.fail("unknown variable '" + name + "'");
            }
            p.fail("expected a value");
        }
    };

    Builder b{p, out.program_};
    b.expr();
    p.skip_ws();
    if (p.pos != text.size()) p.fail("trailing input");
    return out;
}

template <typename T, typename MakeConst>
T Expr::run(const T* vars, MakeConst make_const) const {
    using std::cos;
    using std::exp;
    using std::sin;
    using std::sqrt;
    // fixed small stack; expressions in scenario files are shallow
    T stack[64];
    int top = 0;
    for (const Instr& in : program_) {
        switch (in.op) {
            case Op::push_const: stack[top++] = make_const(in.value); break;
            case Op::push_var: stack[top++] = vars[in.var]; break;
            case Op::add: --top; stack[top - 1] = stack[top - 1] + stack[top]; break;
            case Op::sub: --top; stack[top - 1] = stack[top - 1] - stack[top]; break;
            case Op::mul: --top; stack[top - 1] = stack[top - 1] * stack[top]; break;
            case Op::div: --top; stack[top - 1] = stack[top - 1] / stack[top]; break;
            case Op::neg: stack[top - 1] = -stack[top - 1]; break;
            case Op::sin: stack[top - 1] = sin(stack[top - 1]); break;
            case Op::cos: stack[top - 1] = cos(stack[top - 1]); break;
            case Op::sqrt: stack[top - 1] = sqrt(stack[top - 1]); break;
            case Op::exp: stack[top - 1] = exp(stack[top - 1]); break;
        }
        if (top >= 63) throw std::runtime_error("expression too deep");
    }
    return stack[0];
}

double Expr::eval(const double* vars) const {
    return run<double>(vars, [](double c) { return c; });
}

Jet Expr::eval_jet(const Jet* vars) const {
    const int k = num_vars_ > 0 ? vars[0].vars() : 0;
    return run<Jet>(vars, [k](double c) { return Jet::constant(c, k); });
}

} // namespace tame
