#ifndef ROM_TIMING_HPP
#define ROM_TIMING_HPP

#include <chrono>
#include <cstddef>
#include <limits>

namespace rom {

// Per-call wall-clock accumulator (seconds).
struct TimingStats {
    double min = std::numeric_limits<double>::infinity();
    double max = 0.0;
    double total = 0.0;
    std::size_t count = 0;

    void add(double seconds)
    {
        if (seconds < min)
            min = seconds;
        if (seconds > max)
            max = seconds;
        total += seconds;
        ++count;
    }
    double mean() const { return count ? total / static_cast<double>(count) : 0.0; }
    void reset() { *this = TimingStats{}; }
};

class StopWatch {
public:
    StopWatch() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const
    {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }
    void restart() { start_ = std::chrono::steady_clock::now(); }

private:
    std::chrono::steady_clock::time_point start_;
};

} // namespace rom

#endif
