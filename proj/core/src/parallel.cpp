#include "grassproj/parallel.hpp"

#include <cstdlib>
#include <string>

namespace grassproj {

namespace {
std::atomic<unsigned> g_override{0};
}

unsigned default_threads() {
    if (const char* env = std::getenv("GRASSPROJ_THREADS")) {
        try {
            const long v = std::stol(env);
            if (v > 0) return static_cast<unsigned>(v);
        } catch (const std::exception&) {
        }
    }
    if (unsigned o = g_override.load()) return o;
    return std::max(1u, std::thread::hardware_concurrency());
}

void set_default_threads(unsigned n) { g_override.store(n); }

}  // namespace grassproj
