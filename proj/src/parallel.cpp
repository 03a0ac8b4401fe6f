#include "opnorm/parallel.hpp"

#include <cstdlib>
#include <string>

namespace opnorm {

int worker_count(int requested) {
    int count = requested > 0 ? requested : static_cast<int>(std::thread::hardware_concurrency());
    count = std::max(count, 1);
    if (const char* cap = std::getenv("OPNORM_LAB_THREADS"); cap != nullptr && *cap != '\0') {
        try {
            const int limit = std::stoi(cap);
            if (limit > 0) {
                count = std::min(count, limit);
            }
        } catch (const std::exception&) {
            // Unparseable cap: ignore it.
        }
    }
    return count;
}

}  // namespace opnorm
