#include <cstdlib>
#include <stdexcept>
#include <string>

#include "atinuke/simd.hpp"

namespace atinuke::simd {

#if defined(__x86_64__)
const Backend& avx2_backend();  // simd_avx2.cpp
#endif

bool avx2_available() {
#if defined(__x86_64__)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

namespace {

const Backend* resolve(const std::string& name) {
    if (name == "scalar") return &scalar_backend();
#if defined(__x86_64__)
    if (name == "avx2") {
        if (!avx2_available()) throw std::runtime_error("avx2 kernels not supported on this CPU");
        return &avx2_backend();
    }
#endif
    if (name == "auto" || name.empty()) {
#if defined(__x86_64__)
        if (avx2_available()) return &avx2_backend();
#endif
        return &scalar_backend();
    }
    throw std::runtime_error("unknown kernel backend '" + name + "'");
}

const Backend* g_active = nullptr;

}  // namespace

const Backend& active() {
    if (!g_active) {
        const char* env = std::getenv("ATINUKE_KERNELS");
        g_active = resolve(env ? env : "auto");
    }
    return *g_active;
}

void force(const std::string& name) { g_active = resolve(name); }

}  // namespace atinuke::simd
