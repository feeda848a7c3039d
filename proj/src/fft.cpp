#include "flagseq/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>

namespace flagseq {

namespace {

// FFTW planning is not thread-safe; executing distinct plans is. Plans are
// created once per (size, sign) with FFTW_UNALIGNED so they can run on any
// caller buffer via the new-array interface.
class PlanCache {
public:
    static PlanCache& instance() {
        static PlanCache cache;
        return cache;
    }

    void execute(std::vector<cplx>& data, int sign) {
        const std::size_t n = data.size();
        fftw_plan plan = nullptr;
        {
            std::lock_guard<std::mutex> lock(mu_);
            auto key = std::make_pair(n, sign);
            auto it = plans_.find(key);
            if (it == plans_.end()) {
                std::vector<cplx> scratch(n);
                plan = fftw_plan_dft_1d(static_cast<int>(n),
                                        reinterpret_cast<fftw_complex*>(scratch.data()),
                                        reinterpret_cast<fftw_complex*>(scratch.data()), sign,
                                        FFTW_ESTIMATE | FFTW_UNALIGNED);
                plans_[key] = plan;
            } else {
                plan = it->second;
            }
        }
        auto* buf = reinterpret_cast<fftw_complex*>(data.data());
        fftw_execute_dft(plan, buf, buf);
    }

private:
    PlanCache() = default;
    ~PlanCache() {
        for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
    }
    std::mutex mu_;
    std::map<std::pair<std::size_t, int>, fftw_plan> plans_;
};

}  // namespace

namespace fft {

void forward(std::vector<cplx>& data) {
    if (data.empty()) return;
    PlanCache::instance().execute(data, FFTW_FORWARD);
    instr::fft_calls().fetch_add(1, std::memory_order_relaxed);
}

void inverse(std::vector<cplx>& data) {
    if (data.empty()) return;
    PlanCache::instance().execute(data, FFTW_BACKWARD);
    instr::fft_calls().fetch_add(1, std::memory_order_relaxed);
}

}  // namespace fft

namespace instr {

std::atomic<long>& fft_calls() {
    static std::atomic<long> n{0};
    return n;
}

std::atomic<long>& af_line_calls() {
    static std::atomic<long> n{0};
    return n;
}

void reset() {
    fft_calls().store(0);
    af_line_calls().store(0);
}

}  // namespace instr

}  // namespace flagseq
