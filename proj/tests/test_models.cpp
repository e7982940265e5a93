#include "qrom/controls.hpp"
#include "qrom/models.hpp"

#include <doctest.h>

using namespace qrom;

namespace {

// dense n-spin operator with `op` at `site`
Mat embed(const Mat& op, int site, int sites) {
    Mat out = Mat::Identity(1, 1);
    for (int q = 0; q < sites; ++q) out = kron(out, q == site ? op : Mat::Identity(2, 2));
    return out;
}

Mat compose_layer(const std::vector<Mat>& gates, int sites) {
    Mat total = Mat::Identity(1 << sites, 1 << sites);
    for (size_t bond = 0; bond < gates.size(); ++bond) {
        Mat lifted = Mat::Identity(1, 1);
        lifted = kron(Mat::Identity(1 << bond, 1 << bond), gates[bond]);
        lifted = kron(lifted, Mat::Identity(1 << (sites - 2 - static_cast<int>(bond)),
                                            1 << (sites - 2 - static_cast<int>(bond))));
        total = lifted * total;   // staircase order: bond 0 acts first
    }
    return total;
}

}   // namespace

TEST_CASE("xyz gate at tau -> 0 is the identity") {
    XYZParams p;
    p.tau = 1e-300;
    CHECK((build_xyz_gate(p, BondPosition::mid) - Mat::Identity(4, 4)).norm() < 1e-12);
}

TEST_CASE("xyz gates are unitary at the reference couplings") {
    XYZParams p;   // J = (0.9, 1, 1.1), h = 0.2, tau = 0.15
    for (auto pos :
         {BondPosition::left, BondPosition::mid, BondPosition::right, BondPosition::both}) {
        Mat g = build_xyz_gate(p, pos);
        CHECK((g.adjoint() * g - Mat::Identity(4, 4)).norm() < 1e-10);
    }
}

TEST_CASE("xyz gate with pure z field is diagonal with half-weight phases") {
    XYZParams p;
    p.coupling = {0.0, 0.0, 0.0};
    p.field = {0.0, 0.0, 0.8};
    p.tau = 0.3;
    Mat g = build_xyz_gate(p, BondPosition::mid);
    for (int b0 = 0; b0 < 2; ++b0)
        for (int b1 = 0; b1 < 2; ++b1) {
            const double z0 = 1.0 - 2.0 * b0, z1 = 1.0 - 2.0 * b1;
            cxd expected = std::exp(cxd(0, -p.tau * 0.8 * 0.5 * (z0 + z1)));
            CHECK(std::abs(g(b0 * 2 + b1, b0 * 2 + b1) - expected) < 1e-12);
        }
    Mat offdiag = g;
    offdiag.diagonal().setZero();
    CHECK(offdiag.norm() < 1e-12);
}

TEST_CASE("xyz boundary weights sum to one full field per spin") {
    // with J = 0 all single-spin factors of a layer commute, so the staircase
    // composition must equal exp(-i tau sum_i h.sigma_i) exactly
    XYZParams p;
    p.coupling = {0.0, 0.0, 0.0};
    p.field = {0.3, -0.4, 0.7};
    p.tau = 0.21;
    for (int sites : {2, 3, 5}) {
        CircuitLayout layout = xyz_circuit(p, sites, 1, 0);
        Mat composed = compose_layer(layout.layers[0], sites);
        Mat h_total = Mat::Zero(1 << sites, 1 << sites);
        for (int q = 0; q < sites; ++q)
            for (int k = 1; k <= 3; ++k)
                h_total += p.field(k - 1) * embed(pauli(k), q, sites);
        CHECK((composed - expm_hermitian(h_total, p.tau)).norm() < 1e-11);
    }
}

TEST_CASE("disorder samples are deterministic and in range") {
    auto a = sample_disorder(7, 3);
    auto b = sample_disorder(7, 3);
    CHECK(a == b);
    auto c = sample_disorder(8, 3);
    CHECK(a != c);
    for (double v : sample_disorder(42, 1000)) {
        CHECK(v >= 0.0);
        CHECK(v < 6.283185307179586477);
    }
}

TEST_CASE("disorder sample mean approaches pi") {
    auto draws = sample_disorder(5, 100000);
    double mean = 0.0;
    for (double v : draws) mean += v;
    mean /= static_cast<double>(draws.size());
    CHECK(std::abs(mean - 3.14159265358979324) < 0.02);
}

TEST_CASE("mbl layer with zero coupling and fields is the identity") {
    MBLParams p;
    p.coupling = 0.0;
    p.fields = {0.0, 0.0, 0.0, 0.0};
    for (const Mat& g : build_mbl_layer(p))
        CHECK((g - Mat::Identity(4, 4)).norm() < 1e-14);
}

TEST_CASE("mbl layer with zero coupling is a diagonal z-phase layer") {
    MBLParams p;
    p.coupling = 0.0;
    p.fields = {0.3, 1.2, 2.5, 0.0};
    auto gates = build_mbl_layer(p);
    Mat composed = compose_layer(gates, 4);
    Mat expected = Mat::Identity(16, 16);
    for (int idx = 0; idx < 16; ++idx) {
        double angle = 0.0;
        for (int q = 0; q < 3; ++q) {   // last spin carries no field
            const double z = ((idx >> (3 - q)) & 1) ? -1.0 : 1.0;
            angle += p.fields[static_cast<size_t>(q)] * z;
        }
        expected(idx, idx) = std::exp(cxd(0, angle));
    }
    CHECK((composed - expected).norm() < 1e-12);
}

TEST_CASE("mbl layer reproduces the dense Floquet operator at n = 4") {
    MBLParams p;
    p.coupling = 0.3;
    p.fields = sample_disorder(11, 4);
    const int sites = 4;
    auto gates = build_mbl_layer(p);
    Mat composed = compose_layer(gates, sites);

    Mat h_diag = Mat::Zero(16, 16);
    for (int q = 0; q < sites - 1; ++q) {
        h_diag += p.fields[static_cast<size_t>(q)] * embed(sigma_z(), q, sites);
        h_diag += p.coupling * embed(sigma_z(), q, sites) * embed(sigma_z(), q + 1, sites);
    }
    Mat h_x = Mat::Zero(16, 16);
    for (int q = 0; q < sites; ++q) h_x += p.coupling * embed(sigma_x(), q, sites);
    Mat dense = expm_hermitian(h_diag, -1.0) * expm_hermitian(h_x, -1.0);
    CHECK((composed - dense).norm() < 1e-10);

    SUBCASE("optional field on the last spin") {
        p.field_on_last = true;
        Mat composed_full = compose_layer(build_mbl_layer(p), sites);
        Mat h_full = h_diag + p.fields[3] * embed(sigma_z(), 3, sites);
        Mat dense_full = expm_hermitian(h_full, -1.0) * expm_hermitian(h_x, -1.0);
        CHECK((composed_full - dense_full).norm() < 1e-10);
    }
}

TEST_CASE("every layer gate is unitary") {
    MBLParams p;
    p.coupling = 0.45;
    p.fields = sample_disorder(3, 6);
    for (const Mat& g : build_mbl_layer(p))
        CHECK((g.adjoint() * g - Mat::Identity(4, 4)).norm() < 1e-10);
    XYZParams xp;
    CircuitLayout layout = xyz_circuit(xp, 6, 2, 3);
    CHECK_NOTHROW(layout.validate());
}

TEST_CASE("product states use spin 0 as the most significant bit") {
    Vec up = product_state(std::vector<Spin>{Spin::up});
    CHECK(up(0) == cxd(1.0));
    CHECK(up(1) == cxd(0.0));
    Vec ud = product_state(std::vector<Spin>{Spin::up, Spin::down});
    CHECK(ud(1) == cxd(1.0));
    CHECK(ud.norm() == doctest::Approx(1.0));
}

TEST_CASE("control sequence validation") {
    ControlSequence c = ControlSequence::identity(2, 5);
    CHECK_NOTHROW(c.validate(10));
    CHECK(c.length() == 3);
    CHECK(c.active_at(2));
    CHECK(!c.active_at(5));
    CHECK_THROWS_AS(c.validate(4), std::invalid_argument);
    c.gates[1](0, 0) = 2.0;
    CHECK_THROWS_AS(c.validate(10), std::invalid_argument);
}
