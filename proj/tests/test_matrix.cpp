#include "rom/matrix.hpp"
#include "rom/rng.hpp"

#include "support/oracles.hpp"

#include <doctest.h>

using rom::Matrix;

TEST_CASE("matmul matches the triple-loop oracle")
{
    rom::Rng rng(7);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t m = 1 + rng.below(70);
        const std::size_t k = 1 + rng.below(70);
        const std::size_t n = 1 + rng.below(70);
        const Matrix a = oracle::random_matrix(m, k, rng);
        const Matrix b = oracle::random_matrix(k, n, rng);
        const Matrix c = rom::matmul(a, b);
        const Matrix ref = oracle::matmul(a, b);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j)
                CHECK(c(i, j) == doctest::Approx(ref(i, j)).epsilon(1e-12));
    }
}

TEST_CASE("matmul accumulation and transposed variants")
{
    rom::Rng rng(11);
    const Matrix a = oracle::random_matrix(13, 9, rng);
    const Matrix b = oracle::random_matrix(9, 17, rng);

    Matrix c;
    rom::matmul(a, b, c);
    Matrix c2 = c;
    rom::matmul_acc(a, b, c2);
    for (std::size_t i = 0; i < c.rows(); ++i)
        for (std::size_t j = 0; j < c.cols(); ++j)
            CHECK(c2(i, j) == doctest::Approx(2.0 * c(i, j)));

    Matrix tn;
    rom::matmul_tn(a, c, tn); // a^T (13x9)^T * c (13x17) -> 9x17
    const Matrix tn_ref = oracle::matmul(a.transposed(), c);
    for (std::size_t i = 0; i < tn.rows(); ++i)
        for (std::size_t j = 0; j < tn.cols(); ++j)
            CHECK(tn(i, j) == doctest::Approx(tn_ref(i, j)).epsilon(1e-12));

    Matrix nt;
    rom::matmul_nt(c, b.transposed(), nt); // c (13x17) * b (9x17) -> 13x9
    const Matrix nt_ref = oracle::matmul(c, b);
    for (std::size_t i = 0; i < nt.rows(); ++i)
        for (std::size_t j = 0; j < nt.cols(); ++j)
            CHECK(nt(i, j) == doctest::Approx(nt_ref(i, j)).epsilon(1e-12));
}

TEST_CASE("matmul result does not depend on the partner batch width")
{
    // Column j of A*B must equal A*(column j of B) so batched and
    // per-vector forward paths agree.
    rom::Rng rng(13);
    const Matrix a = oracle::random_matrix(40, 25, rng);
    const Matrix b = oracle::random_matrix(25, 33, rng);
    const Matrix full = rom::matmul(a, b);
    for (std::size_t j = 0; j < b.cols(); ++j) {
        const Matrix single = rom::matmul(a, b.column(j));
        for (std::size_t i = 0; i < a.rows(); ++i)
            CHECK(single(i, 0) == full(i, j));
    }
}

TEST_CASE("matmul shape mismatch throws")
{
    const Matrix a(3, 4), b(5, 2);
    Matrix c;
    CHECK_THROWS_AS(rom::matmul(a, b, c), std::invalid_argument);
}

TEST_CASE("householder_q produces an orthonormal range basis")
{
    rom::Rng rng(17);
    const Matrix a = oracle::random_matrix(50, 12, rng);
    const Matrix q = rom::householder_q(a);
    REQUIRE(q.rows() == 50);
    REQUIRE(q.cols() == 12);
    Matrix g;
    rom::matmul_tn(q, q, g);
    for (std::size_t i = 0; i < 12; ++i)
        for (std::size_t j = 0; j < 12; ++j)
            CHECK(g(i, j) == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-12));

    // Q must span the columns of A: A - Q Q^T A == 0 for full-rank A.
    Matrix qta;
    rom::matmul_tn(q, a, qta);
    const Matrix back = rom::matmul(q, qta);
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            CHECK(back(i, j) == doctest::Approx(a(i, j)).epsilon(1e-10));
}

TEST_CASE("symmetric_eig recovers a synthetic spectrum")
{
    rom::Rng rng(23);
    const std::size_t n = 12;
    const Matrix q = rom::householder_q(oracle::random_matrix(n, n, rng));
    std::vector<double> lambda(n);
    for (std::size_t i = 0; i < n; ++i)
        lambda[i] = static_cast<double>(n - i);
    Matrix a(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < n; ++k)
                s += q(i, k) * lambda[k] * q(j, k);
            a(i, j) = s;
        }
    std::vector<double> eig;
    Matrix vec;
    rom::symmetric_eig(a, eig, vec);
    for (std::size_t i = 0; i < n; ++i)
        CHECK(eig[i] == doctest::Approx(lambda[i]).epsilon(1e-10));
    // Eigenvector property: A v = lambda v.
    for (std::size_t j = 0; j < n; ++j) {
        const Matrix v = vec.column(j);
        const Matrix av = rom::matmul(a, v);
        for (std::size_t i = 0; i < n; ++i)
            CHECK(av(i, 0) == doctest::Approx(eig[j] * v(i, 0)).epsilon(1e-8));
    }
}

TEST_CASE("deterministic forward: identical inputs give identical bits")
{
    rom::Rng rng(29);
    const Matrix a = oracle::random_matrix(31, 19, rng);
    const Matrix b = oracle::random_matrix(19, 23, rng);
    const Matrix c1 = rom::matmul(a, b);
    const Matrix c2 = rom::matmul(a, b);
    CHECK(c1 == c2);
}
