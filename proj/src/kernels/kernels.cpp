#include "xlstance/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <stdexcept>

namespace xlstance::kernels {

bool avx2_available() {
#if (defined(__x86_64__) || defined(_M_X64)) && defined(__GNUC__)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

namespace {

std::atomic<const Ops*> g_active{nullptr};

const Ops* select(const std::string& name) {
    if (name == "scalar") return &scalar_ops();
    if (name == "avx2") {
        if (!avx2_available())
            throw std::runtime_error("kernel backend 'avx2' not available on this CPU");
        return &avx2_ops();
    }
    if (name == "auto") return avx2_available() ? &avx2_ops() : &scalar_ops();
    throw std::runtime_error("unknown kernel backend '" + name + "' (expected scalar|avx2|auto)");
}

const Ops* initial_selection() {
    if (const char* env = std::getenv("XLSTANCE_KERNELS")) return select(env);
    return select("auto");
}

}  // namespace

const Ops& active() {
    const Ops* ops = g_active.load(std::memory_order_acquire);
    if (!ops) {
        ops = initial_selection();
        g_active.store(ops, std::memory_order_release);
    }
    return *ops;
}

void force_backend(const std::string& name) {
    g_active.store(name == "auto" ? initial_selection() : select(name), std::memory_order_release);
}

std::vector<std::string> available_backends() {
    std::vector<std::string> out{"scalar"};
    if (avx2_available()) out.push_back("avx2");
    return out;
}

}  // namespace xlstance::kernels
