#include "bpr/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>

namespace bpr::fft {
namespace {

// Plan cache keyed by (rows, cols, sign). Plans are created with
// FFTW_UNALIGNED so fftw_execute_dft may run on any caller buffer; plan
// creation is serialized, execution is thread-safe.
struct PlanCache {
    std::mutex mu;
    std::map<std::tuple<int, int, int>, fftw_plan> plans;

    fftw_plan get(int rows, int cols, int sign) {
        std::lock_guard<std::mutex> lock(mu);
        auto key = std::make_tuple(rows, cols, sign);
        auto it = plans.find(key);
        if (it != plans.end()) return it->second;
        std::vector<cdouble> scratch(std::size_t(rows) * cols);
        auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
        fftw_plan p = (rows == 1)
            ? fftw_plan_dft_1d(cols, buf, buf, sign, FFTW_ESTIMATE | FFTW_UNALIGNED)
            : fftw_plan_dft_2d(rows, cols, buf, buf, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
        plans.emplace(key, p);
        return p;
    }
};

PlanCache& cache() {
    static PlanCache c;
    return c;
}

void run(const cdouble* in, cdouble* out, int rows, int cols, int sign) {
    fftw_plan p = cache().get(rows, cols, sign);
    const std::size_t n = std::size_t(rows) * cols;
    if (out != in) std::copy(in, in + n, out);
    fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(out), reinterpret_cast<fftw_complex*>(out));
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i) out[i] *= scale;
}

} // namespace

void forward2d(const cdouble* in, cdouble* out, int rows, int cols) { run(in, out, rows, cols, FFTW_FORWARD); }
void inverse2d(const cdouble* in, cdouble* out, int rows, int cols) { run(in, out, rows, cols, FFTW_BACKWARD); }

} // namespace bpr::fft
