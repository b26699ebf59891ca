#include "fft_correlate.hpp"

#include <fftw3.h>

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>

namespace partvos::detail {

namespace {

struct FftwFree {
    void operator()(void* p) const noexcept { fftw_free(p); }
};
template <typename T>
using FftwBuffer = std::unique_ptr<T[], FftwFree>;

template <typename T>
FftwBuffer<T> fftw_buffer(std::size_t n) {
    return FftwBuffer<T>(static_cast<T*>(fftw_malloc(sizeof(T) * n)));
}

struct PlanPair {
    fftw_plan forward = nullptr;
    fftw_plan inverse = nullptr;
};

// FFTW planning is not thread-safe; execution with fresh arrays is. Plans are
// created once per padded size under a lock and kept for the process lifetime.
class PlanCache {
public:
    PlanPair get(int h, int w) {
        std::lock_guard lock(mutex_);
        auto it = plans_.find({h, w});
        if (it != plans_.end()) return it->second;
        const std::size_t real_n = static_cast<std::size_t>(h) * w;
        const std::size_t cplx_n = static_cast<std::size_t>(h) * (w / 2 + 1);
        auto in = fftw_buffer<double>(real_n);
        auto out = fftw_buffer<fftw_complex>(cplx_n);
        PlanPair p;
        p.forward = fftw_plan_dft_r2c_2d(h, w, in.get(), out.get(), FFTW_ESTIMATE);
        p.inverse = fftw_plan_dft_c2r_2d(h, w, out.get(), in.get(), FFTW_ESTIMATE);
        plans_.emplace(std::pair{h, w}, p);
        return p;
    }

private:
    std::mutex mutex_;
    std::map<std::pair<int, int>, PlanPair> plans_;
};

PlanCache& plan_cache() {
    static PlanCache cache;
    return cache;
}

}  // namespace

int fft_friendly_size(int n) {
    for (int m = std::max(n, 1);; ++m) {
        int r = m;
        for (int p : {2, 3, 5, 7}) {
            while (r % p == 0) r /= p;
        }
        if (r == 1) return m;
    }
}

std::vector<double> correlate_valid_fft(const Plane& search, const Plane& kernel) {
    const int sw = search.width();
    const int sh = search.height();
    const int kw = kernel.width();
    const int kh = kernel.height();
    const int ow = sw - kw + 1;
    const int oh = sh - kh + 1;

    // Circular correlation over the padded grid equals linear correlation at
    // every valid placement: no kernel tap ever wraps there.
    const int h = fft_friendly_size(sh);
    const int w = fft_friendly_size(sw);
    const std::size_t real_n = static_cast<std::size_t>(h) * w;
    const std::size_t cplx_n = static_cast<std::size_t>(h) * (w / 2 + 1);
    const auto plans = plan_cache().get(h, w);

    auto buf = fftw_buffer<double>(real_n);
    auto spec_s = fftw_buffer<fftw_complex>(cplx_n);
    auto spec_k = fftw_buffer<fftw_complex>(cplx_n);

    std::fill(buf.get(), buf.get() + real_n, 0.0);
    for (int y = 0; y < sh; ++y) {
        for (int x = 0; x < sw; ++x) buf[static_cast<std::size_t>(y) * w + x] = search(x, y);
    }
    fftw_execute_dft_r2c(plans.forward, buf.get(), spec_s.get());

    std::fill(buf.get(), buf.get() + real_n, 0.0);
    for (int y = 0; y < kh; ++y) {
        for (int x = 0; x < kw; ++x) buf[static_cast<std::size_t>(y) * w + x] = kernel(x, y);
    }
    fftw_execute_dft_r2c(plans.forward, buf.get(), spec_k.get());

    // S * conj(K)
    for (std::size_t i = 0; i < cplx_n; ++i) {
        const double a = spec_s[i][0], b = spec_s[i][1];
        const double c = spec_k[i][0], d = spec_k[i][1];
        spec_s[i][0] = a * c + b * d;
        spec_s[i][1] = b * c - a * d;
    }
    fftw_execute_dft_c2r(plans.inverse, spec_s.get(), buf.get());

    const double scale = 1.0 / static_cast<double>(real_n);
    std::vector<double> out(static_cast<std::size_t>(ow) * oh);
    for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
            out[static_cast<std::size_t>(y) * ow + x] = buf[static_cast<std::size_t>(y) * w + x] * scale;
        }
    }
    return out;
}

}  // namespace partvos::detail
