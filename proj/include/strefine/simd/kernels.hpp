#pragma once

// Data-parallel inner loops used by the spectral engines and the motion
// search. Every kernel has a scalar reference implementation; wider variants
// are selected once per process from the CPU feature set.
//
// Set STREFINE_ISA=scalar in the environment to force the reference path.

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace strefine::simd {

enum class Isa { Scalar, Avx2 };

struct KernelTable {
    Isa isa;

    // c[m x n] = a[m x k] * b[k x n], all row-major and densely packed.
    void (*matmul)(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                   std::size_t n);

    // sum_i w[i] * (f[i] - g[i])^2
    double (*weighted_sq_error)(const double* w, const double* f, const double* g, std::size_t n);

    // out[i] = w[i] * (f[i] - g[i])
    void (*weighted_difference)(const double* w, const double* f, const double* g, double* out,
                                std::size_t n);

    // sum_i w[i] * a[i] * b[i]
    double (*weighted_dot)(const double* w, const double* a, const double* b, std::size_t n);

    // grid[r * cols + c] += alpha * (x1[r] * y1[c] + x2[r] * y2[c])
    void (*rank2_update)(double* grid, std::size_t rows, std::size_t cols, double alpha,
                         const double* x1, const double* y1, const double* x2, const double* y2);

    // gains[i] = comp[src[i]]^2 * inv_norm[i]
    void (*gather_gains)(const double* comp, const std::int32_t* src, const double* inv_norm,
                         double* gains, std::size_t n);

    // Index of the first maximal element; n when n == 0.
    std::size_t (*argmax_first)(const double* v, std::size_t n);

    // Sum of squared differences between two 8-bit blocks.
    std::uint64_t (*ssd_u8)(const std::uint8_t* a, std::ptrdiff_t stride_a, const std::uint8_t* b,
                            std::ptrdiff_t stride_b, int width, int height);
};

/// Kernels for the widest ISA the running CPU supports (or the one forced by
/// STREFINE_ISA). The choice is made on first use and never changes.
const KernelTable& kernels();

/// Kernels for a specific ISA, or nullptr if this build or CPU lacks it.
const KernelTable* kernels_for(Isa isa);

bool cpu_supports(Isa isa);
std::string_view isa_name(Isa isa);

namespace detail {
const KernelTable& scalar_table();
#if defined(STREFINE_HAVE_AVX2)
const KernelTable& avx2_table();
#endif
}  // namespace detail

}  // namespace strefine::simd
