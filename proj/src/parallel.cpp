#include "dcglasso/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace dcglasso {

int default_workers()
{
    if (const char* env = std::getenv("DCGLASSO_WORKERS")) {
        try {
            const int w = std::stoi(env);
            if (w >= 1) return w;
        } catch (const std::exception&) {
            // fall through to the hardware default
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& fn)
{
    if (count == 0) return;
    const std::size_t threads = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, workers)));
    std::vector<std::exception_ptr> errors(count);
    if (threads == 1) {
        for (std::size_t i = 0; i < count; ++i) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    } else {
        std::atomic<std::size_t> next{0};
        auto work = [&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        };
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

} // namespace dcglasso
