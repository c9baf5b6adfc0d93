#pragma once

#include <cstddef>
#include <string>
#include <vector>

// Double-precision kernels behind the training and loss inner loops.
// Two implementations ship: a scalar reference and an AVX2 variant.
// The active backend is chosen once at startup (cpuid, overridable via
// the XLSTANCE_KERNELS environment variable or force_backend) and stays
// fixed for the lifetime of the process, so a run is reproducible
// against itself. Matrices are row-major.

namespace xlstance::kernels {

struct Ops {
    const char* name;

    double (*dot)(const double* a, const double* b, std::size_t n);
    // y += alpha * x
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
    // x *= alpha
    void (*scale)(double* x, double alpha, std::size_t n);
    void (*vadd)(const double* a, const double* b, double* out, std::size_t n);
    void (*vsub)(const double* a, const double* b, double* out, std::size_t n);
    void (*vmul)(const double* a, const double* b, double* out, std::size_t n);
    double (*sum)(const double* x, std::size_t n);
    double (*max)(const double* x, std::size_t n);
    // y = W x + b   (W: rows x cols, b may be null)
    void (*gemv)(const double* w, std::size_t rows, std::size_t cols,
                 const double* x, const double* b, double* y);
    // out += W^T g  (g: rows, out: cols)
    void (*gemv_t_acc)(const double* w, std::size_t rows, std::size_t cols,
                       const double* g, double* out);
    // W += g x^T    (rank-1 update; g: rows, x: cols)
    void (*ger_acc)(double* w, std::size_t rows, std::size_t cols,
                    const double* g, const double* x);
};

const Ops& scalar_ops();
bool avx2_available();       // compiled in and supported by this CPU
const Ops& avx2_ops();       // valid only when avx2_available()

// Runtime-selected backend. Honors XLSTANCE_KERNELS=scalar|avx2|auto.
const Ops& active();

// Overrides the selection; name is "scalar", "avx2" or "auto".
void force_backend(const std::string& name);

std::vector<std::string> available_backends();

inline double dot(const double* a, const double* b, std::size_t n) {
    return active().dot(a, b, n);
}
inline void axpy(double alpha, const double* x, double* y, std::size_t n) {
    active().axpy(alpha, x, y, n);
}
inline void scale(double* x, double alpha, std::size_t n) { active().scale(x, alpha, n); }
inline void vadd(const double* a, const double* b, double* out, std::size_t n) {
    active().vadd(a, b, out, n);
}
inline void vsub(const double* a, const double* b, double* out, std::size_t n) {
    active().vsub(a, b, out, n);
}
inline void vmul(const double* a, const double* b, double* out, std::size_t n) {
    active().vmul(a, b, out, n);
}
inline double sum(const double* x, std::size_t n) { return active().sum(x, n); }
inline double max(const double* x, std::size_t n) { return active().max(x, n); }
inline void gemv(const double* w, std::size_t rows, std::size_t cols,
                 const double* x, const double* b, double* y) {
    active().gemv(w, rows, cols, x, b, y);
}
inline void gemv_t_acc(const double* w, std::size_t rows, std::size_t cols,
                       const double* g, double* out) {
    active().gemv_t_acc(w, rows, cols, g, out);
}
inline void ger_acc(double* w, std::size_t rows, std::size_t cols,
                    const double* g, const double* x) {
    active().ger_acc(w, rows, cols, g, x);
}

}  // namespace xlstance::kernels
