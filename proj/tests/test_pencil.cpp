#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support.hpp"

using namespace ndsa;

namespace {
const ToleranceConfig cfg;
}

TEST_CASE("rank_of on trivial shapes") {
    CHECK(rank_of(Matrix::Zero(2, 3), cfg) == 0);
    CHECK(rank_of(Matrix::Identity(3, 3), cfg) == 3);
    Matrix ones(2, 2);
    ones << 1, 1, 1, 1;
    CHECK(rank_of(ones, cfg) == 1);
    CHECK(rank_of(Matrix(0, 4), cfg) == 0);
    CHECK(rank_of(Matrix(4, 0), cfg) == 0);
}

TEST_CASE("null_basis shapes and residuals") {
    CHECK(null_basis(Matrix::Identity(2, 2), cfg).cols() == 0);

    Matrix row(1, 2);
    row << 1, 1;
    const Matrix nb = null_basis(row, cfg);
    REQUIRE(nb.cols() == 1);
    CHECK(std::abs(nb.col(0).norm() - 1.0) < 1e-14);
    CHECK((row * nb).norm() < cfg.residual_tol);
    // span{(1,-1)/sqrt(2)} up to a unitary factor
    CHECK(std::abs(std::abs(nb(0, 0)) - 1.0 / std::sqrt(2.0)) < 1e-12);
    CHECK(std::abs(nb(0, 0) + nb(1, 0)) < 1e-12);

    const Matrix zfull = null_basis(Matrix::Zero(2, 2), cfg);
    CHECK(zfull.cols() == 2);
    CHECK((zfull.adjoint() * zfull - Matrix::Identity(2, 2)).norm() < 1e-12);

    CHECK(null_basis(Matrix(0, 3), cfg).isApprox(Matrix::Identity(3, 3)));
}

TEST_CASE("canonical blocks") {
    const Pencil k1 = make_canonical_block(BlockKind::K, 1);
    CHECK(k1.G(0, 0) == Complex(1, 0));
    CHECK(k1.H(0, 0) == Complex(0, 0));

    const Pencil l0 = make_canonical_block(BlockKind::L, 0);
    CHECK(l0.rows() == 0);
    CHECK(l0.cols() == 1);

    const Pencil j2 = make_canonical_block(BlockKind::J, 2);
    const Pencil l2 = make_canonical_block(BlockKind::L, 2);
    CHECK(j2.rows() == 3);
    CHECK(j2.cols() == 2);
    CHECK((j2.G - l2.G.transpose()).norm() == 0.0);
    CHECK((j2.H - l2.H.transpose()).norm() == 0.0);

    CHECK_THROWS_AS(make_canonical_block(BlockKind::K, 0), DimensionError);
    CHECK_THROWS_AS(make_canonical_block(BlockKind::N, 0), DimensionError);
}

TEST_CASE("analytic null spaces of K and L") {
    CHECK(analytic_null_K_at_zero(1)(0, 0) == Complex(1, 0));
    const Matrix k3 = analytic_null_K_at_zero(3);
    CHECK(k3.rows() == 3);
    CHECK(k3(0, 0) == Complex(1, 0));
    CHECK(k3(1, 0) == Complex(0, 0));
    CHECK(k3(2, 0) == Complex(0, 0));
    // K_2 at lambda = 1 has empty null space
    const Pencil k2 = make_canonical_block(BlockKind::K, 2);
    CHECK(null_basis(k2.at(1.0), cfg).cols() == 0);

    const Matrix l1 = analytic_null_L(1, Complex(2, 0));
    CHECK(l1(0, 0) == Complex(1, 0));
    CHECK(l1(1, 0) == Complex(-2, 0));
    const Matrix l2 = analytic_null_L(2, Complex(0, 0));
    CHECK(l2(0, 0) == Complex(1, 0));
    CHECK(l2(1, 0) == Complex(0, 0));
    CHECK(l2(2, 0) == Complex(0, 0));
    CHECK(analytic_null_L(0, Complex(5, 3))(0, 0) == Complex(1, 0));
}

TEST_CASE("canonical block rank laws at random points") {
    Rng rng(42);
    for (Index m = 1; m <= 5; ++m) {
        const Pencil K = make_canonical_block(BlockKind::K, m);
        const Pencil N = make_canonical_block(BlockKind::N, m);
        const Pencil L = make_canonical_block(BlockKind::L, m);
        const Pencil J = make_canonical_block(BlockKind::J, m);
        for (int t = 0; t < 50; ++t) {
            const Complex l = rng.uniform_complex(3.0);
            CHECK(rank_of(K.at(l), cfg) == (std::abs(l) > 0 ? m : m - 1));
            CHECK(rank_of(N.at(l), cfg) == m);
            CHECK(rank_of(J.at(l), cfg) == m);
            CHECK(rank_of(L.at(l), cfg) == m);  // never FCR: m < m+1 columns
            // exact annihilation, no tolerance
            CHECK((L.at(l) * analytic_null_L(m, l)).cwiseAbs().maxCoeff() == 0.0);
        }
        CHECK(rank_of(K.at(0.0), cfg) == m - 1);
        CHECK((K.at(0.0) * analytic_null_K_at_zero(m)).norm() == 0.0);
    }
}

TEST_CASE("fcr_after_reduction examples") {
    Matrix I2 = Matrix::Identity(2, 2);
    CHECK(fcr_after_reduction(I2, Matrix::Zero(2, 2), cfg));

    Matrix e1(1, 2), e2(1, 2);
    e1 << 1, 0;
    e2 << 0, 1;
    CHECK(fcr_after_reduction(e1, e2, cfg));
    CHECK_FALSE(fcr_after_reduction(e1, e1, cfg));
}

TEST_CASE("fcr_after_reduction equals stacked rank on random pairs") {
    Rng rng(7);
    for (int t = 0; t < 200; ++t) {
        const Index cols = rng.uniform_int(1, 8);
        const Index r1 = rng.uniform_int(0, 4);
        const Index r2 = rng.uniform_int(0, 4);
        Matrix M1 = test::random_complex_matrix(rng, r1, cols);
        Matrix M2 = test::random_complex_matrix(rng, r2, cols);
        if (rng.uniform() < 0.3 && r1 > 0) M1.row(0).setZero();
        if (rng.uniform() < 0.3 && cols > 1) M2.col(0) = M2.col(cols - 1);
        const Matrix stack = vstack(M1, M2);
        CHECK(fcr_after_reduction(M1, M2, cfg) == (rank_of(stack, cfg) == cols));
    }
}

TEST_CASE("null_via_composition examples") {
    Rng rng(1);
    const Matrix empty =
        null_via_composition(Matrix::Identity(3, 3), test::random_complex_matrix(rng, 2, 3), cfg);
    CHECK(empty.cols() == 0);

    const Matrix full = null_via_composition(Matrix::Zero(1, 2), Matrix::Zero(3, 2), cfg);
    CHECK(full.cols() == 2);
    CHECK((full.adjoint() * full - Matrix::Identity(2, 2)).norm() < 1e-12);

    Matrix m1(1, 3), m2(1, 3);
    m1 << 1, 0, 0;
    m2 << 0, 1, 0;
    const Matrix w = null_via_composition(m1, m2, cfg);
    REQUIRE(w.cols() == 1);
    CHECK(std::abs(std::abs(w(2, 0)) - 1.0) < 1e-12);
    CHECK(std::abs(w(0, 0)) < 1e-12);
    CHECK(std::abs(w(1, 0)) < 1e-12);
}

TEST_CASE("null_via_composition spans the stacked null space") {
    Rng rng(11);
    for (int t = 0; t < 200; ++t) {
        const Index cols = rng.uniform_int(1, 8);
        Matrix M1 = test::random_complex_matrix(rng, rng.uniform_int(0, 4), cols);
        Matrix M2 = test::random_complex_matrix(rng, rng.uniform_int(0, 4), cols);
        if (rng.uniform() < 0.4 && M1.rows() > 0) M1.row(M1.rows() - 1).setZero();
        const Matrix composed = null_via_composition(M1, M2, cfg);
        const Matrix direct = null_basis(vstack(M1, M2), cfg);
        REQUIRE(composed.cols() == direct.cols());
        // column spaces agree iff the orthogonal projectors agree
        const Matrix p1 = composed * composed.adjoint();
        const Matrix p2 = direct * direct.adjoint();
        CHECK((p1 - p2).norm() < 1e-9);
        CHECK((vstack(M1, M2) * composed).norm() <
              cfg.residual_tol * (1.0 + vstack(M1, M2).norm()));
    }
}
