#include "qrom/exactsim.hpp"

#include <doctest.h>

#include <random>

using namespace qrom;

namespace {

std::mt19937_64 rng(4711);

Mat random_unitary_2() {
    std::normal_distribution<double> normal(0.0, 1.0);
    Mat g(2, 2);
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) g(r, c) = cxd(normal(rng), normal(rng));
    SvdResult f = svd(g);
    return f.u * f.vh;
}

}   // namespace

TEST_CASE("single-spin circuit leaves the state constant") {
    CircuitLayout layout;
    layout.sites = 1;
    layout.steps = 3;
    layout.target = 0;
    layout.layers = {std::vector<Mat>{}};
    Vec psi = product_state(std::vector<Spin>{Spin::up});
    Trajectory t = exact_trajectory(layout, psi);
    for (double v : t.sz) CHECK(v == doctest::Approx(1.0));
}

TEST_CASE("two-spin evolution equals the dense gate") {
    XYZParams p;
    CircuitLayout layout = xyz_circuit(p, 2, 1, 0);
    Vec psi0 = product_state(std::vector<Spin>{Spin::up, Spin::down});
    Vec expected = layout.gate(0, 0) * psi0;
    Vec got;
    evolve(layout, psi0, nullptr, [&](int k, const Vec& s) {
        if (k == 1) got = s;
    });
    CHECK((got - expected).norm() < 1e-13);
}

TEST_CASE("gate kernels match dense embedding on three spins") {
    XYZParams p;
    Mat g = build_xyz_gate(p, BondPosition::mid);
    for (int bond : {0, 1}) {
        Vec psi(8);
        std::normal_distribution<double> normal(0.0, 1.0);
        for (int i = 0; i < 8; ++i) psi(i) = cxd(normal(rng), normal(rng));
        psi /= psi.norm();
        Mat dense = bond == 0 ? kron(g, Mat::Identity(2, 2)) : kron(Mat::Identity(2, 2), g);
        Vec expected = dense * psi;
        Vec state = psi;
        apply_two_site_gate(state, 3, bond, g);
        CHECK((state - expected).norm() < 1e-13);
    }
    Mat u = random_unitary_2();
    Vec psi(8);
    for (int i = 0; i < 8; ++i) psi(i) = cxd(i + 1, -i);
    psi /= psi.norm();
    Vec state = psi;
    apply_single_site_gate(state, 3, 1, u);
    Vec expected = kron(kron(Mat::Identity(2, 2), u), Mat::Identity(2, 2)) * psi;
    CHECK((state - expected).norm() < 1e-13);
}

TEST_CASE("norm drift over one hundred steps stays tiny") {
    XYZParams p;
    CircuitLayout layout = xyz_circuit(p, 5, 100, 0);
    Vec psi0 = product_state(std::vector<Spin>(5, Spin::down));
    double worst = 0.0;
    evolve(layout, psi0, nullptr, [&](int, const Vec& s) {
        worst = std::max(worst, std::abs(s.norm() - 1.0));
    });
    CHECK(worst <= 1e-9);
}

TEST_CASE("state-vector cap is enforced") {
    XYZParams p;
    CircuitLayout layout = xyz_circuit(p, 6, 1, 0);
    Vec psi0 = product_state(std::vector<Spin>(6, Spin::down));
    CHECK_THROWS_AS(evolve(layout, psi0, nullptr, nullptr, 5), std::runtime_error);
}

TEST_CASE("tomographic channel at k = 0") {
    XYZParams p;
    CircuitLayout layout = xyz_circuit(p, 4, 3, 1);
    std::vector<Vec> kets(4, spin_ket(Spin::down));
    kets[1] = spin_ket(Spin::up);

    ChoiMatrix same = process_channel(layout, kets, 1, 0);
    CHECK(mutual_information(same) == doctest::Approx(2.0).epsilon(1e-8));
    // identity-channel Choi: 0.5 * sum_{bb'} |bb><b'b'|
    Mat expected = Mat::Zero(4, 4);
    expected(0, 0) = expected(0, 3) = expected(3, 0) = expected(3, 3) = 0.5;
    CHECK((same.data - expected).norm() < 1e-10);

    ChoiMatrix other = process_channel(layout, kets, 3, 0);
    CHECK(mutual_information(other) == doctest::Approx(0.0).epsilon(1e-8));
    CHECK((other.input_marginal() - 0.5 * Mat::Identity(2, 2)).norm() < 1e-8);
}

TEST_CASE("info flow map boundary column and identity circuit") {
    CircuitLayout layout;
    layout.sites = 3;
    layout.steps = 4;
    layout.target = 1;
    layout.layers = {std::vector<Mat>(2, Mat::Identity(4, 4))};
    std::vector<Vec> kets(3, spin_ket(Spin::down));
    InfoFlowMap map = info_flow(layout, kets);
    for (int k = 0; k <= 4; ++k) {
        CHECK(map.values(1, k) == doctest::Approx(2.0).epsilon(1e-8));
        CHECK(map.values(0, k) == doctest::Approx(0.0).epsilon(1e-8));
        CHECK(map.values(2, k) == doctest::Approx(0.0).epsilon(1e-8));
    }

    XYZParams p;
    CircuitLayout xyz = xyz_circuit(p, 4, 3, 0);
    std::vector<Vec> kets4(4, spin_ket(Spin::down));
    InfoFlowMap flowing = info_flow(xyz, kets4);
    CHECK(flowing.values(0, 0) == doctest::Approx(2.0).epsilon(1e-8));
    for (int m = 1; m < 4; ++m) CHECK(flowing.values(m, 0) == doctest::Approx(0.0).epsilon(1e-8));
    for (int m = 0; m < 4; ++m)
        for (int k = 0; k <= 3; ++k) {
            CHECK(flowing.values(m, k) >= -1e-10);
            CHECK(flowing.values(m, k) <= 2.0 + 1e-10);
        }
}

TEST_CASE("light cone of the identity circuit never grows") {
    CircuitLayout layout;
    layout.sites = 4;
    layout.steps = 5;
    layout.target = 2;
    layout.layers = {std::vector<Mat>(3, Mat::Identity(4, 4))};
    Vec psi0 = product_state(std::vector<Spin>(4, Spin::down));
    auto bound = light_cone_bound(layout, psi0, 1e-6);
    for (double b : bound) CHECK(b == doctest::Approx(2.0));
}

TEST_CASE("light cone bound starts at two and grows under real dynamics") {
    XYZParams p;
    CircuitLayout layout = xyz_circuit(p, 5, 6, 0);
    Vec psi0 = product_state(std::vector<Spin>(5, Spin::down));
    auto bound = light_cone_bound(layout, psi0, 1e-6);
    CHECK(bound[0] == doctest::Approx(2.0));
    CHECK(bound.back() > 2.0);
}

TEST_CASE("averaging maps: single seed and duplicates") {
    XYZParams p;
    CircuitLayout layout = xyz_circuit(p, 3, 2, 0);
    std::vector<Vec> kets(3, spin_ket(Spin::down));
    InfoFlowMap one = info_flow(layout, kets);
    InfoFlowMap same = average_maps({one});
    CHECK((same.values - one.values).cwiseAbs().maxCoeff() == 0.0);
    InfoFlowMap dup = average_maps({one, one, one});
    CHECK((dup.values - one.values).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("controls interleave before each layer") {
    XYZParams p;
    CircuitLayout layout = xyz_circuit(p, 3, 2, 1);
    Vec psi0 = product_state(std::vector<Spin>{Spin::down, Spin::up, Spin::down});
    ControlSequence c;
    c.k_start = 0;
    c.k_stop = 2;
    c.gates = {random_unitary_2(), random_unitary_2()};

    Vec manual = psi0;
    for (int k = 0; k < 2; ++k) {
        apply_single_site_gate(manual, 3, 1, c.gates[static_cast<size_t>(k)]);
        apply_two_site_gate(manual, 3, 0, layout.gate(k, 0));
        apply_two_site_gate(manual, 3, 1, layout.gate(k, 1));
    }
    Vec got;
    evolve(layout, psi0, &c, [&](int k, const Vec& s) {
        if (k == 2) got = s;
    });
    CHECK((got - manual).norm() < 1e-13);

    ControlSequence ident = ControlSequence::identity(0, 2);
    Trajectory with_id = exact_trajectory(layout, psi0, &ident);
    Trajectory without = exact_trajectory(layout, psi0, nullptr);
    for (size_t k = 0; k < with_id.sz.size(); ++k)
        CHECK(with_id.sz[k] == doctest::Approx(without.sz[k]).epsilon(1e-12));
}
