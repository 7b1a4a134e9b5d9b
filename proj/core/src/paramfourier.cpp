#include "tame/paramfourier.hpp"

namespace tame {

namespace {
constexpr double kTau = 6.283185307179586476925286766559;
}

void ParamFourier::forward(const std::vector<double>& samples, int m_in,
                           const std::array<int, 4>& res_in) {
    m = m_in;
    res = res_in;
    const std::size_t n = count();
    std::vector<std::complex<double>> work(samples.begin(), samples.end());
    std::vector<std::complex<double>> next(n);
    for (int a = 0; a < m; ++a) {
        const int r = res[a];
        std::size_t stride = 1;
        for (int b = m - 1; b > a; --b) stride *= static_cast<std::size_t>(res[b]);
        const std::size_t lines = n / r;
        std::vector<std::complex<double>> tw(static_cast<std::size_t>(r) * r);
        for (int k = 0; k < r; ++k)
            for (int j = 0; j < r; ++j)
                tw[static_cast<std::size_t>(k) * r + j] =
                    std::exp(std::complex<double>(0.0, -kTau * k * j / r));
        for (std::size_t line = 0; line < lines; ++line) {
            const std::size_t outer = line / stride;
            const std::size_t inner = line % stride;
            const std::size_t base = outer * stride * r + inner;
            for (int k = 0; k < r; ++k) {
                std::complex<double> acc(0.0, 0.0);
                for (int j = 0; j < r; ++j)
                    acc += tw[static_cast<std::size_t>(k) * r + j] * work[base + j * stride];
                next[base + k * stride] = acc / static_cast<double>(r);
            }
        }
        std::swap(work, next);
    }
    hat = std::move(work);
}

void ParamFourier::poisson_invert() {
    const std::size_t n = count();
    std::array<int, 4> idx{};
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t rem = i;
        for (int a = m - 1; a >= 0; --a) {
            idx[a] = static_cast<int>(rem % res[a]);
            rem /= res[a];
        }
        double k2 = 0.0;
        for (int a = 0; a < m; ++a) {
            const double f = freq(idx[a], res[a]);
            k2 += f * f;
        }
        if (k2 == 0.0) hat[i] = 0.0;
        else hat[i] /= -kTau * kTau * k2;
    }
}

ParamFourier ParamFourier::derivative(int axis) const {
    ParamFourier out = *this;
    const std::size_t n = count();
    std::array<int, 4> idx{};
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t rem = i;
        for (int b = m - 1; b >= 0; --b) {
            idx[b] = static_cast<int>(rem % res[b]);
            rem /= res[b];
        }
        const int r = res[axis];
        if (r % 2 == 0 && idx[axis] == r / 2) out.hat[i] = 0.0; // drop the Nyquist mode
        else out.hat[i] *= std::complex<double>(0.0, kTau * freq(idx[axis], r));
    }
    return out;
}

double ParamFourier::eval(const double* t) const {
    const std::size_t n = count();
    std::array<int, 4> idx{};
    std::complex<double> acc(0.0, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t rem = i;
        for (int b = m - 1; b >= 0; --b) {
            idx[b] = static_cast<int>(rem % res[b]);
            rem /= res[b];
        }
        double phase = 0.0;
        for (int a = 0; a < m; ++a) phase += freq(idx[a], res[a]) * t[a];
        acc += hat[i] * std::exp(std::complex<double>(0.0, kTau * phase));
    }
    return acc.real();
}

} // namespace tame
