#ifndef ROM_BANDED_HPP
#define ROM_BANDED_HPP

#include <cstddef>
#include <vector>

namespace rom {

// Banded linear system solver with partial pivoting. Row i stores the
// window of columns [i - kl, i + kl + ku]; the extra kl superdiagonals
// hold pivoting fill-in.
class BandedLU {
public:
    BandedLU(std::size_t n, std::size_t kl, std::size_t ku);

    std::size_t size() const { return n_; }

    // Assembly access to A(i, j); j must lie within [i - kl, i + ku].
    double& at(std::size_t i, std::size_t j);
    void clear();

    void factor(); // throws std::runtime_error on a zero pivot
    void solve(std::vector<double>& rhs) const;

private:
    double& w(std::size_t i, std::size_t col) { return storage_[i * width_ + col]; }
    double w(std::size_t i, std::size_t col) const { return storage_[i * width_ + col]; }

    std::size_t n_, kl_, ku_, width_;
    std::vector<double> storage_;
    std::vector<std::size_t> pivot_;
    bool factored_ = false;
};

} // namespace rom

#endif
