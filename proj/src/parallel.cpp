#include "pfd/parallel.hpp"

#include <cstdlib>
#include <string>

namespace pfd {

std::size_t worker_count() {
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const char* env = std::getenv("PFD_THREADS");
    if (env == nullptr || *env == '\0') return hw;
    try {
        const long v = std::stol(env);
        if (v <= 0) return hw;
        return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
        return hw;
    }
}

}  // namespace pfd
