#include "nml/kernels.hpp"

#include "nml/error.hpp"

namespace nml::kernels {

const Ops& scalar_table();
#if defined(NML_HAVE_AVX2)
const Ops& avx2_table();
#endif

namespace {

bool cpu_has_avx2() {
#if defined(NML_HAVE_AVX2)
    return __builtin_cpu_supports("avx2");
#else
    return false;
#endif
}

const Ops*& active_slot() {
    static const Ops* slot = cpu_has_avx2()
#if defined(NML_HAVE_AVX2)
                                 ? &avx2_table()
#else
                                 ? &scalar_table()
#endif
                                 : &scalar_table();
    return slot;
}

Backend& active_backend_slot() {
    static Backend b = cpu_has_avx2() ? Backend::avx2 : Backend::scalar;
    return b;
}

} // namespace

bool supported(Backend b) {
    switch (b) {
    case Backend::scalar: return true;
    case Backend::avx2: return cpu_has_avx2();
    }
    return false;
}

Backend detect_best() {
    return cpu_has_avx2() ? Backend::avx2 : Backend::scalar;
}

std::string_view name(Backend b) {
    switch (b) {
    case Backend::scalar: return "scalar";
    case Backend::avx2: return "avx2";
    }
    return "?";
}

bool select(Backend b) {
    if (!supported(b)) return false;
    active_slot() = &table(b);
    active_backend_slot() = b;
    return true;
}

Backend active_backend() {
    return active_backend_slot();
}

const Ops& active() {
    return *active_slot();
}

const Ops& table(Backend b) {
    switch (b) {
    case Backend::scalar: return scalar_table();
    case Backend::avx2:
#if defined(NML_HAVE_AVX2)
        if (cpu_has_avx2()) return avx2_table();
#endif
        break;
    }
    throw contract_error(detail::msg("kernel backend '", name(b), "' is not supported on this host"));
}

} // namespace nml::kernels
