#include "strefine/simd/kernels.hpp"

#include <cstdlib>
#include <string>

namespace strefine::simd {

bool cpu_supports(Isa isa)
{
    switch (isa) {
    case Isa::Scalar:
        return true;
    case Isa::Avx2:
#if defined(STREFINE_HAVE_AVX2)
        return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
        return false;
#endif
    }
    return false;
}

std::string_view isa_name(Isa isa)
{
    switch (isa) {
    case Isa::Scalar:
        return "scalar";
    case Isa::Avx2:
        return "avx2";
    }
    return "unknown";
}

const KernelTable* kernels_for(Isa isa)
{
    if (!cpu_supports(isa))
        return nullptr;
    switch (isa) {
    case Isa::Scalar:
        return &detail::scalar_table();
    case Isa::Avx2:
#if defined(STREFINE_HAVE_AVX2)
        return &detail::avx2_table();
#else
        return nullptr;
#endif
    }
    return nullptr;
}

namespace {

const KernelTable& select_kernels()
{
    if (const char* forced = std::getenv("STREFINE_ISA")) {
        const std::string name(forced);
        if (name == "scalar")
            return detail::scalar_table();
        if (name == "avx2")
            if (const KernelTable* t = kernels_for(Isa::Avx2))
                return *t;
    }
    if (const KernelTable* t = kernels_for(Isa::Avx2))
        return *t;
    return detail::scalar_table();
}

}  // namespace

const KernelTable& kernels()
{
    static const KernelTable& active = select_kernels();
    return active;
}

}  // namespace strefine::simd
