#include "strefine/simd/kernels.hpp"

#include <algorithm>

namespace strefine::simd {
namespace {

void matmul_scalar(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                   std::size_t n)
{
    for (std::size_t i = 0; i < m; ++i) {
        double* crow = c + i * n;
        std::fill(crow, crow + n, 0.0);
        const double* arow = a + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const double s = arow[p];
            const double* brow = b + p * n;
            for (std::size_t j = 0; j < n; ++j)
                crow[j] += s * brow[j];
        }
    }
}

double weighted_sq_error_scalar(const double* w, const double* f, const double* g, std::size_t n)
{
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = f[i] - g[i];
        acc += w[i] * d * d;
    }
    return acc;
}

void weighted_difference_scalar(const double* w, const double* f, const double* g, double* out,
                                std::size_t n)
{
    for (std::size_t i = 0; i < n; ++i)
        out[i] = w[i] * (f[i] - g[i]);
}

double weighted_dot_scalar(const double* w, const double* a, const double* b, std::size_t n)
{
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        acc += w[i] * a[i] * b[i];
    return acc;
}

void rank2_update_scalar(double* grid, std::size_t rows, std::size_t cols, double alpha,
                         const double* x1, const double* y1, const double* x2, const double* y2)
{
    for (std::size_t r = 0; r < rows; ++r) {
        const double s1 = alpha * x1[r];
        const double s2 = alpha * x2[r];
        double* row = grid + r * cols;
        for (std::size_t c = 0; c < cols; ++c)
            row[c] += s1 * y1[c] + s2 * y2[c];
    }
}

void gather_gains_scalar(const double* comp, const std::int32_t* src, const double* inv_norm,
                         double* gains, std::size_t n)
{
    for (std::size_t i = 0; i < n; ++i) {
        const double v = comp[src[i]];
        gains[i] = (v * v) * inv_norm[i];
    }
}

std::size_t argmax_first_scalar(const double* v, std::size_t n)
{
    if (n == 0)
        return 0;
    std::size_t best = 0;
    for (std::size_t i = 1; i < n; ++i)
        if (v[i] > v[best])
            best = i;
    return best;
}

std::uint64_t ssd_u8_scalar(const std::uint8_t* a, std::ptrdiff_t stride_a, const std::uint8_t* b,
                            std::ptrdiff_t stride_b, int width, int height)
{
    std::uint64_t acc = 0;
    for (int y = 0; y < height; ++y) {
        const std::uint8_t* ra = a + y * stride_a;
        const std::uint8_t* rb = b + y * stride_b;
        for (int x = 0; x < width; ++x) {
            const int d = int(ra[x]) - int(rb[x]);
            acc += std::uint64_t(d * d);
        }
    }
    return acc;
}

const KernelTable kScalarTable{
    Isa::Scalar,
    matmul_scalar,
    weighted_sq_error_scalar,
    weighted_difference_scalar,
    weighted_dot_scalar,
    rank2_update_scalar,
    gather_gains_scalar,
    argmax_first_scalar,
    ssd_u8_scalar,
};

}  // namespace

namespace detail {
const KernelTable& scalar_table() { return kScalarTable; }
}  // namespace detail

}  // namespace strefine::simd
