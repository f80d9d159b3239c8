#include "rwre/parallel.hpp"

#include <cstdlib>
#include <string>
#include <thread>

namespace rwre {

int resolve_workers(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("RWRE_WORKERS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

}  // namespace rwre
