#include "gp_pathwise/parallel.hpp"
#include "gp_pathwise/random.hpp"
#include "gp_pathwise/types.hpp"

#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>
#include <vector>

namespace gp {

void require_dims(Eigen::Index expected, Eigen::Index actual, const char* what) {
    if (expected != actual) {
        std::ostringstream msg;
        msg << what << ": expected dimension " << expected << ", got " << actual;
        throw DimensionError(msg.str());
    }
}

Matrix standard_normal(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    std::normal_distribution<double> normal;
    Matrix out(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) out(i, j) = normal(rng);
    return out;
}

Vector standard_normal(Eigen::Index size, Rng& rng) {
    std::normal_distribution<double> normal;
    Vector out(size);
    for (Eigen::Index i = 0; i < size; ++i) out(i) = normal(rng);
    return out;
}

Matrix uniform_points(Eigen::Index count, Eigen::Index dim, Rng& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Matrix out(count, dim);
    for (Eigen::Index i = 0; i < count; ++i)
        for (Eigen::Index j = 0; j < dim; ++j) out(i, j) = unif(rng);
    return out;
}

namespace {
thread_local int serial_depth = 0;
}  // namespace

SerialScope::SerialScope() { ++serial_depth; }
SerialScope::~SerialScope() { --serial_depth; }

std::size_t worker_count() {
    if (const char* env = std::getenv("GP_PATHWISE_THREADS")) {
        const long value = std::strtol(env, nullptr, 10);
        if (value > 0) return static_cast<std::size_t>(value);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& task) {
    const std::size_t workers = std::min(worker_count(), count);
    if (workers <= 1 || serial_depth > 0) {
        for (std::size_t i = 0; i < count; ++i) task(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        const SerialScope nested;
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                task(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = count;
            }
        }
    };
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);
}

}  // namespace gp
