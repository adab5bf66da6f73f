#include <doctest.h>

#include <cstdint>
#include <random>
#include <tuple>
#include <vector>

#include "strefine/simd/kernels.hpp"

using namespace strefine::simd;

namespace {

std::vector<double> randn(std::size_t n, std::mt19937_64& rng)
{
    std::normal_distribution<double> d(0.0, 50.0);
    std::vector<double> v(n);
    for (double& x : v)
        x = d(rng);
    return v;
}

double tol(double scale)
{
    return 1e-12 * std::max(1.0, scale);
}

}  // namespace

TEST_SUITE("simd")
{
    TEST_CASE("dispatch")
    {
        CHECK(kernels_for(Isa::Scalar) != nullptr);
        CHECK(cpu_supports(Isa::Scalar));
        CHECK(isa_name(Isa::Scalar) == "scalar");
        CHECK(isa_name(Isa::Avx2) == "avx2");
        const KernelTable& k = kernels();
        CHECK(kernels_for(k.isa) != nullptr);
        MESSAGE("active kernels: " << isa_name(k.isa));
    }

    TEST_CASE("wide kernels agree with the scalar reference")
    {
        const KernelTable* wide = kernels_for(Isa::Avx2);
        if (!wide) {
            MESSAGE("AVX2 unavailable; nothing to compare");
            return;
        }
        const KernelTable& ref = *kernels_for(Isa::Scalar);
        std::mt19937_64 rng(1);

        // Odd sizes exercise every tail path.
        for (std::size_t n : {1u, 3u, 4u, 7u, 16u, 17u, 31u, 64u, 577u, 2304u}) {
            const auto w = randn(n, rng), f = randn(n, rng), g = randn(n, rng);
            std::vector<double> w_abs(w);
            for (double& x : w_abs)
                x = std::abs(x);
            double scale = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                scale += w_abs[i] * (f[i] - g[i]) * (f[i] - g[i]);
            CHECK(std::abs(wide->weighted_sq_error(w_abs.data(), f.data(), g.data(), n) -
                           ref.weighted_sq_error(w_abs.data(), f.data(), g.data(), n)) <= tol(scale));

            double dscale = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                dscale += std::abs(w[i] * f[i] * g[i]);
            CHECK(std::abs(wide->weighted_dot(w.data(), f.data(), g.data(), n) -
                           ref.weighted_dot(w.data(), f.data(), g.data(), n)) <= tol(dscale));

            std::vector<double> a(n), b(n);
            wide->weighted_difference(w.data(), f.data(), g.data(), a.data(), n);
            ref.weighted_difference(w.data(), f.data(), g.data(), b.data(), n);
            CHECK(a == b);

            const double big = 1e300;
            std::vector<double> v = randn(n, rng);
            v[n / 2] = big;
            if (n > 2)
                v[n - 1] = big;  // tie: first occurrence wins
            CHECK(wide->argmax_first(v.data(), n) == n / 2);
            CHECK(ref.argmax_first(v.data(), n) == n / 2);

            std::vector<std::int32_t> src(n);
            std::uniform_int_distribution<std::int32_t> pick(0, std::int32_t(n) - 1);
            for (auto& s : src)
                s = pick(rng);
            std::vector<double> ga(n), gb(n);
            wide->gather_gains(f.data(), src.data(), w_abs.data(), ga.data(), n);
            ref.gather_gains(f.data(), src.data(), w_abs.data(), gb.data(), n);
            CHECK(ga == gb);
        }
        CHECK(wide->argmax_first(nullptr, 0) == 0);
    }

    TEST_CASE("matmul and rank-2 update agree with the scalar reference")
    {
        const KernelTable* wide = kernels_for(Isa::Avx2);
        if (!wide)
            return;
        const KernelTable& ref = *kernels_for(Isa::Scalar);
        std::mt19937_64 rng(2);
        const std::tuple<std::size_t, std::size_t, std::size_t> shapes[] = {
            {1, 1, 1}, {5, 7, 3}, {24, 24, 26}, {48, 48, 50}, {17, 33, 19}};
        for (auto [m, k, n] : shapes) {
            const auto a = randn(m * k, rng), b = randn(k * n, rng);
            std::vector<double> c1(m * n, 7.0), c2(m * n, -3.0);
            wide->matmul(a.data(), b.data(), c1.data(), m, k, n);
            ref.matmul(a.data(), b.data(), c2.data(), m, k, n);
            for (std::size_t i = 0; i < c1.size(); ++i)
                REQUIRE(std::abs(c1[i] - c2[i]) <= 1e-10 * 2500.0 * double(k));

            const auto xa = randn(m, rng), ya = randn(n, rng), xb = randn(m, rng), yb = randn(n, rng);
            std::vector<double> g1 = randn(m * n, rng);
            std::vector<double> g2 = g1;
            wide->rank2_update(g1.data(), m, n, 0.37, xa.data(), ya.data(), xb.data(), yb.data());
            ref.rank2_update(g2.data(), m, n, 0.37, xa.data(), ya.data(), xb.data(), yb.data());
            for (std::size_t i = 0; i < g1.size(); ++i)
                REQUIRE(std::abs(g1[i] - g2[i]) <= 1e-9);
        }
    }

    TEST_CASE("ssd kernels agree")
    {
        std::mt19937_64 rng(3);
        std::uniform_int_distribution<int> d(0, 255);
        std::vector<std::uint8_t> a(80 * 40), b(80 * 40);
        for (auto& v : a)
            v = std::uint8_t(d(rng));
        for (auto& v : b)
            v = std::uint8_t(d(rng));
        const KernelTable& ref = *kernels_for(Isa::Scalar);
        for (auto [w, h] : {std::pair{16, 16}, std::pair{8, 8}, std::pair{33, 5}, std::pair{1, 1}, std::pair{64, 40}}) {
            std::uint64_t direct = 0;
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    const int e = int(a[std::size_t(y * 80 + x + 3)]) - int(b[std::size_t(y * 80 + x)]);
                    direct += std::uint64_t(e * e);
                }
            CHECK(ref.ssd_u8(a.data() + 3, 80, b.data(), 80, w, h) == direct);
            if (const KernelTable* wide = kernels_for(Isa::Avx2))
                CHECK(wide->ssd_u8(a.data() + 3, 80, b.data(), 80, w, h) == direct);
        }
    }
}
