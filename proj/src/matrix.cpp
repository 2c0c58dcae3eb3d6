#include "rom/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>

namespace rom {

namespace {

void check(bool ok, const char* what)
{
    if (!ok)
        throw std::invalid_argument(std::string("matrix: ") + what);
}

} // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill)
{
}

Matrix Matrix::identity(std::size_t n)
{
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i)
        m(i, i) = 1.0;
    return m;
}

void Matrix::fill(double v)
{
    std::fill(data_.begin(), data_.end(), v);
}

bool Matrix::all_finite() const
{
    for (double v : data_)
        if (!std::isfinite(v))
            return false;
    return true;
}

double Matrix::max_abs() const
{
    double m = 0.0;
    for (double v : data_)
        m = std::max(m, std::fabs(v));
    return m;
}

Matrix Matrix::transposed() const
{
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j)
            t(j, i) = (*this)(i, j);
    return t;
}

Matrix Matrix::column(std::size_t j) const
{
    check(j < cols_, "column index out of range");
    Matrix c(rows_, 1);
    for (std::size_t i = 0; i < rows_; ++i)
        c(i, 0) = (*this)(i, j);
    return c;
}

void Matrix::set_column(std::size_t j, const Matrix& col)
{
    check(j < cols_ && col.rows() == rows_ && col.cols() == 1, "set_column shape");
    for (std::size_t i = 0; i < rows_; ++i)
        (*this)(i, j) = col(i, 0);
}

namespace {

// Shared kernel for C += op(A) * B with row-major operands, where the
// element op(A)(i, p) sits at a[i * sa_i + p * sa_p]. Register-tiles the
// output 4 rows by 32 columns; within a tile every c(i, j) accumulates
// its k-terms in serial order, so results do not depend on tiling or on
// how many columns B happens to have.
void gemm_any(const double* a, std::size_t sa_i, std::size_t sa_p,
              const double* b, double* c,
              std::size_t m, std::size_t k, std::size_t n, bool accumulate)
{
    if (!accumulate)
        std::memset(c, 0, m * n * sizeof(double));

    constexpr std::size_t JT = 32;
    constexpr std::size_t IT = 4;

    std::size_t j0 = 0;
    for (; j0 + JT <= n; j0 += JT) {
        std::size_t i0 = 0;
        for (; i0 + IT <= m; i0 += IT) {
            double acc[IT][JT];
            for (std::size_t r = 0; r < IT; ++r)
                for (std::size_t j = 0; j < JT; ++j)
                    acc[r][j] = c[(i0 + r) * n + j0 + j];
            for (std::size_t p = 0; p < k; ++p) {
                const double* brow = b + p * n + j0;
                for (std::size_t r = 0; r < IT; ++r) {
                    const double av = a[(i0 + r) * sa_i + p * sa_p];
                    for (std::size_t j = 0; j < JT; ++j)
                        acc[r][j] += av * brow[j];
                }
            }
            for (std::size_t r = 0; r < IT; ++r)
                for (std::size_t j = 0; j < JT; ++j)
                    c[(i0 + r) * n + j0 + j] = acc[r][j];
        }
        for (; i0 < m; ++i0) {
            double acc[JT];
            for (std::size_t j = 0; j < JT; ++j)
                acc[j] = c[i0 * n + j0 + j];
            for (std::size_t p = 0; p < k; ++p) {
                const double av = a[i0 * sa_i + p * sa_p];
                const double* brow = b + p * n + j0;
                for (std::size_t j = 0; j < JT; ++j)
                    acc[j] += av * brow[j];
            }
            for (std::size_t j = 0; j < JT; ++j)
                c[i0 * n + j0 + j] = acc[j];
        }
    }
    if (j0 < n) {
        const std::size_t jr = n - j0;
        for (std::size_t i = 0; i < m; ++i) {
            double* crow = c + i * n + j0;
            for (std::size_t p = 0; p < k; ++p) {
                const double av = a[i * sa_i + p * sa_p];
                const double* brow = b + p * n + j0;
                for (std::size_t j = 0; j < jr; ++j)
                    crow[j] += av * brow[j];
            }
        }
    }
}

// C (+)= A * B.
void gemm(const double* a, const double* b, double* c,
          std::size_t m, std::size_t k, std::size_t n, bool accumulate)
{
    gemm_any(a, k, 1, b, c, m, k, n, accumulate);
}

// C (+)= A^T * B. A is k x m, B is k x n, C is m x n.
void gemm_tn(const double* a, const double* b, double* c,
             std::size_t m, std::size_t k, std::size_t n, bool accumulate)
{
    gemm_any(a, 1, m, b, c, m, k, n, accumulate);
}

// C (+)= A * B^T. A is m x k, B is n x k, C is m x n.
void gemm_nt(const double* a, const double* b, double* c,
             std::size_t m, std::size_t k, std::size_t n, bool accumulate)
{
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        double* crow = c + i * n;
        for (std::size_t j = 0; j < n; ++j) {
            const double* brow = b + j * k;
            double s = 0.0;
            for (std::size_t p = 0; p < k; ++p)
                s += arow[p] * brow[p];
            if (accumulate)
                crow[j] += s;
            else
                crow[j] = s;
        }
    }
}

} // namespace

void matmul(const Matrix& a, const Matrix& b, Matrix& c)
{
    check(a.cols() == b.rows(), "matmul inner dimensions");
    c = Matrix(a.rows(), b.cols());
    gemm(a.data(), b.data(), c.data(), a.rows(), a.cols(), b.cols(), false);
}

void matmul_acc(const Matrix& a, const Matrix& b, Matrix& c)
{
    check(a.cols() == b.rows(), "matmul inner dimensions");
    check(c.rows() == a.rows() && c.cols() == b.cols(), "matmul_acc output shape");
    gemm(a.data(), b.data(), c.data(), a.rows(), a.cols(), b.cols(), true);
}

void matmul_tn(const Matrix& a, const Matrix& b, Matrix& c)
{
    check(a.rows() == b.rows(), "matmul_tn inner dimensions");
    c = Matrix(a.cols(), b.cols());
    gemm_tn(a.data(), b.data(), c.data(), a.cols(), a.rows(), b.cols(), false);
}

void matmul_tn_acc(const Matrix& a, const Matrix& b, Matrix& c)
{
    check(a.rows() == b.rows(), "matmul_tn inner dimensions");
    check(c.rows() == a.cols() && c.cols() == b.cols(), "matmul_tn_acc output shape");
    gemm_tn(a.data(), b.data(), c.data(), a.cols(), a.rows(), b.cols(), true);
}

void matmul_nt(const Matrix& a, const Matrix& b, Matrix& c)
{
    check(a.cols() == b.cols(), "matmul_nt inner dimensions");
    c = Matrix(a.rows(), b.rows());
    gemm_nt(a.data(), b.data(), c.data(), a.rows(), a.cols(), b.rows(), false);
}

void matmul_nt_acc(const Matrix& a, const Matrix& b, Matrix& c)
{
    check(a.cols() == b.cols(), "matmul_nt inner dimensions");
    check(c.rows() == a.rows() && c.cols() == b.rows(), "matmul_nt_acc output shape");
    gemm_nt(a.data(), b.data(), c.data(), a.rows(), a.cols(), b.rows(), true);
}

Matrix matmul(const Matrix& a, const Matrix& b)
{
    Matrix c;
    matmul(a, b, c);
    return c;
}

void add_inplace(Matrix& a, const Matrix& b)
{
    check(a.rows() == b.rows() && a.cols() == b.cols(), "add shape");
    double* pa = a.data();
    const double* pb = b.data();
    for (std::size_t i = 0, n = a.size(); i < n; ++i)
        pa[i] += pb[i];
}

void sub_inplace(Matrix& a, const Matrix& b)
{
    check(a.rows() == b.rows() && a.cols() == b.cols(), "sub shape");
    double* pa = a.data();
    const double* pb = b.data();
    for (std::size_t i = 0, n = a.size(); i < n; ++i)
        pa[i] -= pb[i];
}

void scale_inplace(Matrix& a, double s)
{
    double* pa = a.data();
    for (std::size_t i = 0, n = a.size(); i < n; ++i)
        pa[i] *= s;
}

void axpy_inplace(Matrix& a, double s, const Matrix& b)
{
    check(a.rows() == b.rows() && a.cols() == b.cols(), "axpy shape");
    double* pa = a.data();
    const double* pb = b.data();
    for (std::size_t i = 0, n = a.size(); i < n; ++i)
        pa[i] += s * pb[i];
}

double dot(const Matrix& a, const Matrix& b)
{
    check(a.rows() == b.rows() && a.cols() == b.cols(), "dot shape");
    double s = 0.0;
    const double* pa = a.data();
    const double* pb = b.data();
    for (std::size_t i = 0, n = a.size(); i < n; ++i)
        s += pa[i] * pb[i];
    return s;
}

double frobenius_norm(const Matrix& a)
{
    return std::sqrt(dot(a, a));
}

Matrix householder_q(const Matrix& a)
{
    const std::size_t m = a.rows();
    const std::size_t n = a.cols();
    check(m >= n, "householder_q needs rows >= cols");

    Matrix r = a;
    // Householder vectors stored in-place below the diagonal of r.
    std::vector<double> beta(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        double norm = 0.0;
        for (std::size_t i = j; i < m; ++i)
            norm += r(i, j) * r(i, j);
        norm = std::sqrt(norm);
        if (norm == 0.0) {
            beta[j] = 0.0;
            continue;
        }
        const double alpha = (r(j, j) >= 0.0) ? -norm : norm;
        double v0 = r(j, j) - alpha;
        double vnorm2 = v0 * v0;
        for (std::size_t i = j + 1; i < m; ++i)
            vnorm2 += r(i, j) * r(i, j);
        if (vnorm2 == 0.0) {
            beta[j] = 0.0;
            r(j, j) = alpha;
            continue;
        }
        beta[j] = 2.0 / vnorm2;
        // Apply reflector to the trailing columns.
        for (std::size_t col = j + 1; col < n; ++col) {
            double s = v0 * r(j, col);
            for (std::size_t i = j + 1; i < m; ++i)
                s += r(i, j) * r(i, col);
            s *= beta[j];
            r(j, col) -= s * v0;
            for (std::size_t i = j + 1; i < m; ++i)
                r(i, col) -= s * r(i, j);
        }
        r(j, j) = alpha;
        // Keep v (with v0 implicit) in the subdiagonal; stash v0 separately.
        // We re-normalize on the back-accumulation pass instead.
        // Store v0 in an extra row? Simpler: scale stored vector so v0 = 1.
        for (std::size_t i = j + 1; i < m; ++i)
            r(i, j) /= v0;
        beta[j] *= v0 * v0;
    }

    // Accumulate Q = H_0 H_1 ... H_{n-1} applied to the first n columns of I.
    Matrix q(m, n);
    for (std::size_t j = 0; j < n; ++j)
        q(j, j) = 1.0;
    for (std::size_t j = n; j-- > 0;) {
        if (beta[j] == 0.0)
            continue;
        for (std::size_t col = 0; col < n; ++col) {
            double s = q(j, col);
            for (std::size_t i = j + 1; i < m; ++i)
                s += r(i, j) * q(i, col);
            s *= beta[j];
            q(j, col) -= s;
            for (std::size_t i = j + 1; i < m; ++i)
                q(i, col) -= s * r(i, j);
        }
    }
    return q;
}

void symmetric_eig(const Matrix& a, std::vector<double>& eigenvalues, Matrix& eigenvectors)
{
    check(a.rows() == a.cols(), "symmetric_eig needs a square matrix");
    const std::size_t n = a.rows();
    Matrix s = a;
    Matrix v = Matrix::identity(n);

    const int max_sweeps = 60;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                off += s(i, j) * s(i, j);
        if (off < 1e-28 * (1.0 + frobenius_norm(s)))
            break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = s(p, q);
                if (std::fabs(apq) < 1e-300)
                    continue;
                const double app = s(p, p);
                const double aqq = s(q, q);
                const double tau = (aqq - app) / (2.0 * apq);
                const double t = (tau >= 0.0)
                    ? 1.0 / (tau + std::sqrt(1.0 + tau * tau))
                    : -1.0 / (-tau + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double sn = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double skp = s(k, p);
                    const double skq = s(k, q);
                    s(k, p) = c * skp - sn * skq;
                    s(k, q) = sn * skp + c * skq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double spk = s(p, k);
                    const double sqk = s(q, k);
                    s(p, k) = c * spk - sn * sqk;
                    s(q, k) = sn * spk + c * sqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p);
                    const double vkq = v(k, q);
                    v(k, p) = c * vkp - sn * vkq;
                    v(k, q) = sn * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i)
        order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t x, std::size_t y) { return s(x, x) > s(y, y); });

    eigenvalues.assign(n, 0.0);
    eigenvectors = Matrix(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        eigenvalues[j] = s(order[j], order[j]);
        for (std::size_t i = 0; i < n; ++i)
            eigenvectors(i, j) = v(i, order[j]);
    }
}

} // namespace rom
