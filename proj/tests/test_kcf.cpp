#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support.hpp"

using namespace ndsa;

namespace {
const ToleranceConfig cfg;

std::vector<Complex> probe_samples() {
    return {Complex(0.3, 0.7), Complex(-1.1, 0.2), Complex(2.0, -0.5)};
}

}  // namespace

TEST_CASE("already canonical diag(lambda, 1) splits into K1 and N1") {
    Matrix G = Matrix::Zero(2, 2);
    G(0, 0) = 1;
    Matrix H = Matrix::Zero(2, 2);
    H(1, 1) = 1;
    const KroneckerStructure ks = compute_kcf(Pencil(G, H), cfg);
    CHECK(ks.mu == 0);
    CHECK(ks.xi == std::vector<Index>{1});
    CHECK(ks.eta == std::vector<Index>{1});
    CHECK(ks.kappa.empty());
    CHECK(ks.rho.empty());
    CHECK(reconstruct_residual(ks, Pencil(G, H), probe_samples()) < 1e-12);
}

TEST_CASE("strictly regular pencil is recognized whole") {
    Matrix G = Matrix::Identity(2, 2);
    Matrix H = Matrix::Zero(2, 2);
    H(0, 0) = -1;
    H(1, 1) = -2;
    const Pencil P(G, H);
    const KroneckerStructure ks = compute_kcf(P, cfg);
    CHECK(ks.mu == 2);
    CHECK(ks.a() == 0);
    CHECK(ks.b() == 0);
    CHECK(ks.c() == 0);
    CHECK(ks.d() == 0);
    const SingularPointSet pts = singular_points(ks, cfg);
    REQUIRE(pts.points.size() == 2);
    CHECK(std::abs(pts.points[0] - Complex(1, 0)) < 1e-9);
    CHECK(std::abs(pts.points[1] - Complex(2, 0)) < 1e-9);
}

TEST_CASE("1x2 zero pencil is L0 + L0 + J0") {
    const Pencil P(Matrix::Zero(1, 2), Matrix::Zero(1, 2));
    const KroneckerStructure ks = compute_kcf(P, cfg);
    CHECK(ks.mu == 0);
    CHECK(ks.a() == 0);
    CHECK(ks.b() == 0);
    CHECK(ks.kappa == std::vector<Index>({0, 0}));
    CHECK(ks.rho == std::vector<Index>({0}));
    CHECK(reconstruct_residual(ks, P, probe_samples()) == 0.0);
}

TEST_CASE("reconstruction residual flags corruption") {
    Rng rng(3);
    const test::PlantedStructure ps{2, {1}, {}, {1}, {}};
    const Pencil P = test::plant_pencil(ps, rng);
    KroneckerStructure ks = compute_kcf(P, cfg);
    CHECK(reconstruct_residual(ks, P, probe_samples()) <= 1e-10);
    ks.U *= 1.001;  // deliberate corruption
    CHECK(reconstruct_residual(ks, P, probe_samples()) > cfg.residual_tol);
}

TEST_CASE("leading width bookkeeping") {
    KroneckerStructure ks;
    ks.mu = 2;
    ks.xi = {1};
    ks.kappa = {0};
    CHECK(leading_width(ks) == 3);
    CHECK(leading_cols(ks) == 4);
    KroneckerStructure empty;
    CHECK(leading_width(empty) == 0);
    KroneckerStructure two;
    two.xi = {2, 1};
    CHECK(leading_width(two) == 3);
}

TEST_CASE("singular point sets") {
    SUBCASE("eigenvalue and zero") {
        Matrix G = Matrix::Identity(1, 1), H = Matrix::Identity(1, 1);
        H(0, 0) = -2;
        KroneckerStructure ks;
        ks.mu = 1;
        ks.h_reg = Pencil(G, H);
        ks.xi = {1};
        const SingularPointSet pts = singular_points(ks, cfg);
        CHECK_FALSE(pts.whole_plane);
        REQUIRE(pts.points.size() == 2);
        CHECK(std::abs(pts.points[0] - Complex(0, 0)) < 1e-12);
        CHECK(std::abs(pts.points[1] - Complex(2, 0)) < 1e-12);
    }
    SUBCASE("L block forces the whole plane") {
        KroneckerStructure ks;
        ks.kappa = {1};
        ks.h_reg = Pencil(Matrix(0, 0), Matrix(0, 0));
        CHECK(singular_points(ks, cfg).whole_plane);
    }
    SUBCASE("only N and J blocks: empty set") {
        KroneckerStructure ks;
        ks.eta = {2};
        ks.rho = {1};
        ks.h_reg = Pencil(Matrix(0, 0), Matrix(0, 0));
        const SingularPointSet pts = singular_points(ks, cfg);
        CHECK_FALSE(pts.whole_plane);
        CHECK(pts.points.empty());
    }
}

TEST_CASE("reduced null bases per block kind") {
    SUBCASE("K1 at zero") {
        KroneckerStructure ks;
        ks.xi = {1};
        ks.h_reg = Pencil(Matrix(0, 0), Matrix(0, 0));
        const Matrix nb = reduced_null_basis(ks, Complex(0, 0), cfg);
        REQUIRE(nb.cols() == 1);
        CHECK(nb(0, 0) == Complex(1, 0));
    }
    SUBCASE("L1 at 3") {
        KroneckerStructure ks;
        ks.kappa = {1};
        ks.h_reg = Pencil(Matrix(0, 0), Matrix(0, 0));
        const Matrix nb = reduced_null_basis(ks, Complex(3, 0), cfg);
        REQUIRE(nb.rows() == 2);
        REQUIRE(nb.cols() == 1);
        CHECK(nb(0, 0) == Complex(1, 0));
        CHECK(nb(1, 0) == Complex(-3, 0));
    }
    SUBCASE("regular part away from its eigenvalue") {
        KroneckerStructure ks;
        ks.mu = 1;
        Matrix G = Matrix::Identity(1, 1), H = Matrix::Identity(1, 1);
        H(0, 0) = -2;
        ks.h_reg = Pencil(G, H);
        CHECK(reduced_null_basis(ks, Complex(5, 0), cfg).cols() == 0);
        CHECK(reduced_null_basis(ks, Complex(2, 0), cfg).cols() == 1);
    }
}

TEST_CASE("v_inverse_leading maps the identity correctly") {
    SUBCASE("identity V") {
        KroneckerStructure ks;
        ks.mu = 2;
        ks.eta = {1};
        ks.h_reg = Pencil(Matrix::Identity(2, 2), Matrix::Identity(2, 2));
        ks.V = Matrix::Identity(3, 3);
        const Matrix lead = v_inverse_leading(ks);
        CHECK(lead.rows() == 3);
        CHECK(lead.cols() == 2);
        CHECK((lead - Matrix::Identity(3, 3).leftCols(2)).norm() < 1e-14);
    }
    SUBCASE("random invertible V") {
        Rng rng(17);
        KroneckerStructure ks;
        ks.mu = 2;
        ks.eta = {2};
        ks.h_reg = Pencil(Matrix::Identity(2, 2), Matrix::Identity(2, 2));
        ks.V = test::random_wellcond(rng, 4);
        const Matrix lead = v_inverse_leading(ks);
        Matrix expect = Matrix::Zero(4, 2);
        expect.topLeftCorner(2, 2) = Matrix::Identity(2, 2);
        CHECK((ks.V * lead - expect).norm() < 1e-10);
    }
}

TEST_CASE("planted structures are recovered exactly") {
    Rng rng(2024);
    int done = 0;
    while (done < 60) {
        const test::PlantedStructure ps = test::random_structure(rng);
        const Pencil P = test::plant_pencil(ps, rng);
        CAPTURE(ps.mu);
        CAPTURE(ps.rows());
        CAPTURE(ps.cols());
        const KroneckerStructure ks = compute_kcf(P, cfg);
        CHECK(test::same_structure(ps, ks));
        CHECK(ks.rows() == P.rows());
        CHECK(ks.cols() == P.cols());
        CHECK(reconstruct_residual(ks, P, probe_samples()) <= 1e-8);
        ++done;
    }
}

TEST_CASE("singular points match rank drops for c == 0 pencils") {
    Rng rng(555);
    int done = 0;
    while (done < 40) {
        test::PlantedStructure ps = test::random_structure(rng);
        ps.kappa.clear();  // keep the singular set finite
        if (ps.rows() + ps.cols() == 0) continue;
        const Pencil P = test::plant_pencil(ps, rng);
        const KroneckerStructure ks = compute_kcf(P, cfg);
        const SingularPointSet pts = singular_points(ks, cfg);
        REQUIRE_FALSE(pts.whole_plane);
        for (const Complex& l : pts.points) {
            CHECK(rank_of(P.at(l), cfg) < P.cols());
        }
        for (int t = 0; t < 20; ++t) {
            const Complex l = rng.uniform_complex(2.0);
            bool near = false;
            for (const Complex& p : pts.points) near = near || std::abs(l - p) < 1e-6;
            if (near) continue;
            CHECK(rank_of(P.at(l), cfg) == P.cols());
        }
        ++done;
    }
}

TEST_CASE("reduced null basis annihilates the leading block") {
    Rng rng(808);
    int done = 0;
    while (done < 25) {
        test::PlantedStructure ps = test::random_structure(rng);
        const Pencil P = test::plant_pencil(ps, rng);
        const KroneckerStructure ks = compute_kcf(P, cfg);
        const SingularPointSet pts = singular_points(ks, cfg);
        std::vector<Complex> trial;
        if (pts.whole_plane)
            trial = {Complex(0.37, 1.2), Complex(-2.0, 0.0)};
        else
            trial = pts.points;
        for (const Complex& l : trial) {
            const Matrix nb = reduced_null_basis(ks, l, cfg);
            if (nb.cols() == 0) continue;
            // leading diag block of the canonical pencil at l
            const Pencil can = canonical_pencil(ks);
            const Matrix lead =
                can.at(l).topLeftCorner(leading_width(ks), leading_cols(ks));
            CHECK((lead * nb).norm() <= cfg.residual_tol * (1.0 + lead.norm()));
            CHECK(rank_of(nb, cfg) == nb.cols());
        }
        ++done;
    }
}

TEST_CASE("pencil_fcr_everywhere structure rules") {
    const Pencil j2 = make_canonical_block(BlockKind::J, 2);
    CHECK(pencil_fcr_everywhere(j2, cfg).fcr);

    const Pencil k1 = make_canonical_block(BlockKind::K, 1);
    const PencilFcrEverywhere res = pencil_fcr_everywhere(k1, cfg);
    CHECK_FALSE(res.fcr);
    REQUIRE(res.drop_point.has_value());
    CHECK(std::abs(*res.drop_point) < 1e-9);

    // [lambda - 1; 1] keeps full column rank everywhere
    Matrix G(2, 1), H(2, 1);
    G << 1, 0;
    H << -1, 1;
    CHECK(pencil_fcr_everywhere(Pencil(G, H), cfg).fcr);
}
