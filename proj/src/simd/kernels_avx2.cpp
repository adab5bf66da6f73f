// AVX2 + FMA variants. This translation unit is the only one compiled with
// -mavx2 -mfma; nothing here may be called unless cpu_supports(Isa::Avx2).

#include "strefine/simd/kernels.hpp"

#include <immintrin.h>

#include <algorithm>

namespace strefine::simd {
namespace {

inline double hsum(__m256d v)
{
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

void matmul_avx2(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                 std::size_t n)
{
    const std::size_t n4 = n & ~std::size_t(3);
    for (std::size_t i = 0; i < m; ++i) {
        double* crow = c + i * n;
        const double* arow = a + i * k;
        std::size_t j = 0;
        // Four output vectors at a time keep the FMA pipes busy.
        for (; j + 16 <= n; j += 16) {
            __m256d acc0 = _mm256_setzero_pd();
            __m256d acc1 = _mm256_setzero_pd();
            __m256d acc2 = _mm256_setzero_pd();
            __m256d acc3 = _mm256_setzero_pd();
            for (std::size_t p = 0; p < k; ++p) {
                const __m256d s = _mm256_broadcast_sd(arow + p);
                const double* brow = b + p * n + j;
                acc0 = _mm256_fmadd_pd(s, _mm256_loadu_pd(brow), acc0);
                acc1 = _mm256_fmadd_pd(s, _mm256_loadu_pd(brow + 4), acc1);
                acc2 = _mm256_fmadd_pd(s, _mm256_loadu_pd(brow + 8), acc2);
                acc3 = _mm256_fmadd_pd(s, _mm256_loadu_pd(brow + 12), acc3);
            }
            _mm256_storeu_pd(crow + j, acc0);
            _mm256_storeu_pd(crow + j + 4, acc1);
            _mm256_storeu_pd(crow + j + 8, acc2);
            _mm256_storeu_pd(crow + j + 12, acc3);
        }
        for (; j < n4; j += 4) {
            __m256d acc = _mm256_setzero_pd();
            for (std::size_t p = 0; p < k; ++p)
                acc = _mm256_fmadd_pd(_mm256_broadcast_sd(arow + p),
                                      _mm256_loadu_pd(b + p * n + j), acc);
            _mm256_storeu_pd(crow + j, acc);
        }
        for (; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t p = 0; p < k; ++p)
                acc += arow[p] * b[p * n + j];
            crow[j] = acc;
        }
    }
}

double weighted_sq_error_avx2(const double* w, const double* f, const double* g, std::size_t n)
{
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(f + i), _mm256_loadu_pd(g + i));
        const __m256d d1 = _mm256_sub_pd(_mm256_loadu_pd(f + i + 4), _mm256_loadu_pd(g + i + 4));
        acc0 = _mm256_fmadd_pd(_mm256_mul_pd(_mm256_loadu_pd(w + i), d0), d0, acc0);
        acc1 = _mm256_fmadd_pd(_mm256_mul_pd(_mm256_loadu_pd(w + i + 4), d1), d1, acc1);
    }
    double acc = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) {
        const double d = f[i] - g[i];
        acc += w[i] * d * d;
    }
    return acc;
}

void weighted_difference_avx2(const double* w, const double* f, const double* g, double* out,
                              std::size_t n)
{
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(f + i), _mm256_loadu_pd(g + i));
        _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(w + i), d));
    }
    for (; i < n; ++i)
        out[i] = w[i] * (f[i] - g[i]);
}

double weighted_dot_avx2(const double* w, const double* a, const double* b, std::size_t n)
{
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256d wa0 = _mm256_mul_pd(_mm256_loadu_pd(w + i), _mm256_loadu_pd(a + i));
        const __m256d wa1 = _mm256_mul_pd(_mm256_loadu_pd(w + i + 4), _mm256_loadu_pd(a + i + 4));
        acc0 = _mm256_fmadd_pd(wa0, _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(wa1, _mm256_loadu_pd(b + i + 4), acc1);
    }
    double acc = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i)
        acc += w[i] * a[i] * b[i];
    return acc;
}

void rank2_update_avx2(double* grid, std::size_t rows, std::size_t cols, double alpha,
                       const double* x1, const double* y1, const double* x2, const double* y2)
{
    for (std::size_t r = 0; r < rows; ++r) {
        const double s1 = alpha * x1[r];
        const double s2 = alpha * x2[r];
        const __m256d v1 = _mm256_set1_pd(s1);
        const __m256d v2 = _mm256_set1_pd(s2);
        double* row = grid + r * cols;
        std::size_t c = 0;
        for (; c + 4 <= cols; c += 4) {
            __m256d t = _mm256_mul_pd(v1, _mm256_loadu_pd(y1 + c));
            t = _mm256_fmadd_pd(v2, _mm256_loadu_pd(y2 + c), t);
            _mm256_storeu_pd(row + c, _mm256_add_pd(_mm256_loadu_pd(row + c), t));
        }
        for (; c < cols; ++c)
            row[c] += s1 * y1[c] + s2 * y2[c];
    }
}

void gather_gains_avx2(const double* comp, const std::int32_t* src, const double* inv_norm,
                       double* gains, std::size_t n)
{
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m128i idx = _mm_loadu_si128(reinterpret_cast<const __m128i*>(src + i));
        const __m256d v = _mm256_i32gather_pd(comp, idx, 8);
        // No FMA here: keeps the result bit-identical to the scalar path.
        _mm256_storeu_pd(gains + i, _mm256_mul_pd(_mm256_mul_pd(v, v), _mm256_loadu_pd(inv_norm + i)));
    }
    for (; i < n; ++i) {
        const double v = comp[src[i]];
        gains[i] = (v * v) * inv_norm[i];
    }
}

std::size_t argmax_first_avx2(const double* v, std::size_t n)
{
    if (n < 8) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < n; ++i)
            if (v[i] > v[best])
                best = i;
        return best;
    }
    __m256d vmax = _mm256_loadu_pd(v);
    std::size_t i = 4;
    for (; i + 4 <= n; i += 4)
        vmax = _mm256_max_pd(vmax, _mm256_loadu_pd(v + i));
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, vmax);
    double best = std::max(std::max(lanes[0], lanes[1]), std::max(lanes[2], lanes[3]));
    for (; i < n; ++i)
        best = std::max(best, v[i]);

    const __m256d target = _mm256_set1_pd(best);
    for (i = 0; i + 4 <= n; i += 4) {
        const int bits = _mm256_movemask_pd(_mm256_cmp_pd(_mm256_loadu_pd(v + i), target, _CMP_EQ_OQ));
        if (bits != 0)
            return i + std::size_t(__builtin_ctz(unsigned(bits)));
    }
    for (; i < n; ++i)
        if (v[i] == best)
            return i;
    return 0;
}

std::uint64_t ssd_u8_avx2(const std::uint8_t* a, std::ptrdiff_t stride_a, const std::uint8_t* b,
                          std::ptrdiff_t stride_b, int width, int height)
{
    std::uint64_t total = 0;
    for (int y = 0; y < height; ++y) {
        const std::uint8_t* ra = a + y * stride_a;
        const std::uint8_t* rb = b + y * stride_b;
        __m256i acc = _mm256_setzero_si256();
        int x = 0;
        for (; x + 16 <= width; x += 16) {
            const __m256i va = _mm256_cvtepu8_epi16(_mm_loadu_si128(reinterpret_cast<const __m128i*>(ra + x)));
            const __m256i vb = _mm256_cvtepu8_epi16(_mm_loadu_si128(reinterpret_cast<const __m128i*>(rb + x)));
            const __m256i d = _mm256_sub_epi16(va, vb);
            acc = _mm256_add_epi32(acc, _mm256_madd_epi16(d, d));
        }
        alignas(32) std::uint32_t lanes[8];
        _mm256_store_si256(reinterpret_cast<__m256i*>(lanes), acc);
        std::uint64_t row = 0;
        for (std::uint32_t l : lanes)
            row += l;
        for (; x < width; ++x) {
            const int d = int(ra[x]) - int(rb[x]);
            row += std::uint64_t(d * d);
        }
        total += row;
    }
    return total;
}

const KernelTable kAvx2Table{
    Isa::Avx2,
    matmul_avx2,
    weighted_sq_error_avx2,
    weighted_difference_avx2,
    weighted_dot_avx2,
    rank2_update_avx2,
    gather_gains_avx2,
    argmax_first_avx2,
    ssd_u8_avx2,
};

}  // namespace

namespace detail {
const KernelTable& avx2_table() { return kAvx2Table; }
}  // namespace detail

}  // namespace strefine::simd
