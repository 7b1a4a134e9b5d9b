#pragma once

#include <Eigen/Dense>
#include <cmath>

namespace tame {

/// Second-order forward-mode value: f, grad f, Hess f over k seed variables.
/// Gives machine-precision curve/metric derivatives without symbolic algebra.
struct Jet {
    double v = 0.0;
    Eigen::VectorXd g; // k
    Eigen::MatrixXd h; // k x k

    Jet() = default;
    Jet(double value, int k)
        : v(value), g(Eigen::VectorXd::Zero(k)), h(Eigen::MatrixXd::Zero(k, k)) {}

    static Jet constant(double value, int k) { return Jet(value, k); }
    static Jet variable(double value, int i, int k) {
        Jet j(value, k);
        j.g[i] = 1.0;
        return j;
    }

    int vars() const { return static_cast<int>(g.size()); }

    friend Jet operator+(const Jet& a, const Jet& b) { return {a.v + b.v, a.g + b.g, a.h + b.h}; }
    friend Jet operator-(const Jet& a, const Jet& b) { return {a.v - b.v, a.g - b.g, a.h - b.h}; }
    friend Jet operator-(const Jet& a) { return {-a.v, -a.g, -a.h}; }
    friend Jet operator*(const Jet& a, const Jet& b) {
        return {a.v * b.v, a.v * b.g + b.v * a.g,
                a.v * b.h + b.v * a.h + a.g * b.g.transpose() + b.g * a.g.transpose()};
    }
    friend Jet operator/(const Jet& a, const Jet& b) { return a * inverse(b); }

    friend Jet operator+(const Jet& a, double c) { Jet r = a; r.v += c; return r; }
    friend Jet operator+(double c, const Jet& a) { return a + c; }
    friend Jet operator-(const Jet& a, double c) { return a + (-c); }
    friend Jet operator-(double c, const Jet& a) { return -a + c; }
    friend Jet operator*(const Jet& a, double c) { return {a.v * c, a.g * c, a.h * c}; }
    friend Jet operator*(double c, const Jet& a) { return a * c; }
    friend Jet operator/(const Jet& a, double c) { return a * (1.0 / c); }
    friend Jet operator/(double c, const Jet& a) { return inverse(a) * c; }

    /// Chain rule for scalar u(f): value u0, first u1, second u2 at f.v.
    static Jet chain(const Jet& f, double u0, double u1, double u2) {
        return {u0, u1 * f.g, u1 * f.h + u2 * (f.g * f.g.transpose())};
    }

    friend Jet inverse(const Jet& f) {
        const double iv = 1.0 / f.v;
        return chain(f, iv, -iv * iv, 2.0 * iv * iv * iv);
    }
    friend Jet sin(const Jet& f) { return chain(f, std::sin(f.v), std::cos(f.v), -std::sin(f.v)); }
    friend Jet cos(const Jet& f) { return chain(f, std::cos(f.v), -std::sin(f.v), -std::cos(f.v)); }
    friend Jet sqrt(const Jet& f) {
        const double s = std::sqrt(f.v);
        return chain(f, s, 0.5 / s, -0.25 / (s * f.v));
    }
    friend Jet exp(const Jet& f) {
        const double e = std::exp(f.v);
        return chain(f, e, e, e);
    }

  private:
    Jet(double value, Eigen::VectorXd grad, Eigen::MatrixXd hess)
        : v(value), g(std::move(grad)), h(std::move(hess)) {}
};

} // namespace tame
