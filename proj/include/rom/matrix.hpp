#ifndef ROM_MATRIX_HPP
#define ROM_MATRIX_HPP

#include <cstddef>
#include <vector>

namespace rom {

// Dense row-major matrix of 64-bit floats. Column vectors are n x 1
// matrices. All heavy kernels live in matrix.cpp; they are written so
// that the accumulation order of every output entry is independent of
// the shapes of the other operands, which keeps results reproducible.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);

    static Matrix identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    double* row(std::size_t i) { return data_.data() + i * cols_; }
    const double* row(std::size_t i) const { return data_.data() + i * cols_; }

    void fill(double v);
    bool all_finite() const;
    double max_abs() const;

    Matrix transposed() const;
    Matrix column(std::size_t j) const;
    void set_column(std::size_t j, const Matrix& col);

    bool operator==(const Matrix& other) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// C = A * B. Throws on shape mismatch. C is resized as needed.
void matmul(const Matrix& a, const Matrix& b, Matrix& c);
// C += A * B.
void matmul_acc(const Matrix& a, const Matrix& b, Matrix& c);
// C = A^T * B and C += A^T * B.
void matmul_tn(const Matrix& a, const Matrix& b, Matrix& c);
void matmul_tn_acc(const Matrix& a, const Matrix& b, Matrix& c);
// C = A * B^T and C += A * B^T.
void matmul_nt(const Matrix& a, const Matrix& b, Matrix& c);
void matmul_nt_acc(const Matrix& a, const Matrix& b, Matrix& c);

Matrix matmul(const Matrix& a, const Matrix& b);

// Elementwise helpers (shape-checked).
void add_inplace(Matrix& a, const Matrix& b);
void sub_inplace(Matrix& a, const Matrix& b);
void scale_inplace(Matrix& a, double s);
// a += s * b
void axpy_inplace(Matrix& a, double s, const Matrix& b);

double dot(const Matrix& a, const Matrix& b);
double frobenius_norm(const Matrix& a);

// Thin Householder QR: returns Q with orthonormal columns spanning the
// column space of A (A is m x n, m >= n; Q is m x n).
Matrix householder_q(const Matrix& a);

// Eigendecomposition of a symmetric matrix by the cyclic Jacobi method.
// Eigenvalues are returned in descending order with matching columns in
// the eigenvector matrix.
void symmetric_eig(const Matrix& a, std::vector<double>& eigenvalues, Matrix& eigenvectors);

} // namespace rom

#endif
