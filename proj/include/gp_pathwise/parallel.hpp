#pragma once

#include <cstddef>
#include <functional>

namespace gp {

/// Worker count: GP_PATHWISE_THREADS when set and positive, otherwise the
/// hardware concurrency (at least 1).
std::size_t worker_count();

/// Runs task(i) for i in [0, count) on up to worker_count() threads.
/// Tasks must not share mutable state; the first exception is rethrown.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& task);

/// While alive, parallel_for on this thread runs tasks inline. Worker
/// threads hold one implicitly, so nested loops never oversubscribe.
class SerialScope {
public:
    SerialScope();
    ~SerialScope();
    SerialScope(const SerialScope&) = delete;
    SerialScope& operator=(const SerialScope&) = delete;
};

}  // namespace gp
