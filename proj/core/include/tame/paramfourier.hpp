#pragma once

#include <array>
#include <complex>
#include <vector>

namespace tame {

/// Dense Fourier machinery on a unit parameter torus (up to 4 axes): forward
/// transform, spectral Poisson solve, derivatives, and off-grid evaluation.
/// Sizes here are parameter-grid sizes, so dense transforms are fine.
struct ParamFourier {
    int m = 0;
    std::array<int, 4> res{};
    std::vector<std::complex<double>> hat; // row-major over param axes

    std::size_t count() const {
        std::size_t c = 1;
        for (int a = 0; a < m; ++a) c *= static_cast<std::size_t>(res[a]);
        return c;
    }

    static int freq(int k, int r) { return k <= r / 2 ? k : k - r; }

    void forward(const std::vector<double>& samples, int m_in, const std::array<int, 4>& res_in);
    void poisson_invert();
    ParamFourier derivative(int axis) const;
    double eval(const double* t) const;
};

} // namespace tame
