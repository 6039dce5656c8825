#include "tsadv/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace tsadv::kernels {

namespace {

const Ops* select() {
    const char* env = std::getenv("TSADV_KERNELS");
    if (env != nullptr) {
        if (std::strcmp(env, "scalar") == 0) return &scalar_ops();
#if TSADV_HAVE_AVX2_KERNELS
        if (std::strcmp(env, "avx2") == 0 && cpu_has_avx2()) return &avx2_ops();
#endif
    }
#if TSADV_HAVE_AVX2_KERNELS
    if (cpu_has_avx2()) return &avx2_ops();
#endif
    return &scalar_ops();
}

} // namespace

const Ops& active() {
    static const Ops* chosen = select();
    return *chosen;
}

} // namespace tsadv::kernels
