#include "xlstance/kernels.hpp"

#include <limits>

// Reference implementations. Plain loops, no manual unrolling; these are
// the ground truth the SIMD variants are equivalence-tested against.

namespace xlstance::kernels {
namespace {

double s_dot(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

void s_axpy(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void s_scale(double* x, double alpha, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

void s_vadd(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void s_vsub(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

void s_vmul(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

double s_sum(const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i];
    return acc;
}

double s_max(const double* x, std::size_t n) {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i)
        if (x[i] > m) m = x[i];
    return m;
}

void s_gemv(const double* w, std::size_t rows, std::size_t cols,
            const double* x, const double* b, double* y) {
    for (std::size_t r = 0; r < rows; ++r) {
        const double* row = w + r * cols;
        double acc = b ? b[r] : 0.0;
        for (std::size_t c = 0; c < cols; ++c) acc += row[c] * x[c];
        y[r] = acc;
    }
}

void s_gemv_t_acc(const double* w, std::size_t rows, std::size_t cols,
                  const double* g, double* out) {
    for (std::size_t r = 0; r < rows; ++r) {
        const double* row = w + r * cols;
        const double gr = g[r];
        for (std::size_t c = 0; c < cols; ++c) out[c] += gr * row[c];
    }
}

void s_ger_acc(double* w, std::size_t rows, std::size_t cols,
               const double* g, const double* x) {
    for (std::size_t r = 0; r < rows; ++r) {
        double* row = w + r * cols;
        const double gr = g[r];
        for (std::size_t c = 0; c < cols; ++c) row[c] += gr * x[c];
    }
}

}  // namespace

const Ops& scalar_ops() {
    static const Ops ops = {
        "scalar",  s_dot,  s_axpy, s_scale,      s_vadd,    s_vsub,
        s_vmul,    s_sum,  s_max,  s_gemv,       s_gemv_t_acc, s_ger_acc,
    };
    return ops;
}

}  // namespace xlstance::kernels
