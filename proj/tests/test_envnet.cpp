#include "qrom/envnet.hpp"

#include <doctest.h>

#include <random>

using namespace qrom;

namespace {

std::mt19937_64 rng(999);

Mat random_complex(int rows, int cols) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Mat m(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) m(r, c) = cxd(normal(rng), normal(rng));
    return m;
}

Mat random_unitary_matrix(int n) {
    SvdResult f = svd(random_complex(n, n));
    return f.u * f.vh;
}

Mat random_isometry(int rows, int cols) {
    Eigen::HouseholderQR<Mat> qr(random_complex(rows, cols));
    Mat q = qr.householderQ();
    return q.leftCols(cols);
}

// independent operator-Schmidt rank: reshuffle with its own index math and
// count nonzero eigenvalues of M M^dag
int oracle_chi(const Mat& u, int ds, int de) {
    Mat m(ds * ds, de * de);
    for (int r = 0; r < u.rows(); ++r)
        for (int c = 0; c < u.cols(); ++c) {
            const int so = r / de, eo = r % de, si = c / de, ei = c % de;
            m(so * ds + si, eo * de + ei) = u(r, c);
        }
    RVec lam = eigh(m * m.adjoint()).lambdas;
    int chi = 0;
    for (Eigen::Index j = 0; j < lam.size(); ++j)
        if (lam(j) > 1e-18 * lam(0)) ++chi;
    return chi;
}

Mat swap_gate() {
    Mat s = Mat::Zero(4, 4);
    s(0, 0) = s(1, 2) = s(2, 1) = s(3, 3) = 1.0;
    return s;
}

Mat cnot_gate() {
    Mat c = Mat::Zero(4, 4);
    c(0, 0) = c(1, 1) = c(2, 3) = c(3, 2) = 1.0;
    return c;
}

Mat compose_layer(const std::vector<Mat>& gates, int sites) {
    Mat total = Mat::Identity(1 << sites, 1 << sites);
    for (size_t bond = 0; bond < gates.size(); ++bond) {
        Mat lifted = kron(Mat::Identity(1 << bond, 1 << bond), gates[bond]);
        lifted = kron(lifted, Mat::Identity(1 << (sites - 2 - static_cast<int>(bond)),
                                            1 << (sites - 2 - static_cast<int>(bond))));
        total = lifted * total;   // staircase order: bond 0 acts first
    }
    return total;
}

// all chi^N dyad strings of a dense environment network, stacked as a
// (d_env x chi^N) matrix of vectors B_{i_N}..B_{i_1} |psi>
Mat dense_network_columns(const std::vector<Mat>& blocks, const Vec& psi, int steps) {
    const int chi = static_cast<int>(blocks.size());
    Eigen::Index cols = 1;
    for (int m = 0; m < steps; ++m) cols *= chi;
    Mat out(psi.size(), cols);
    for (Eigen::Index str = 0; str < cols; ++str) {
        Vec v = psi;
        Eigen::Index rem = str;
        for (int m = 0; m < steps; ++m) {
            v = blocks[static_cast<size_t>(rem % chi)] * v;
            rem /= chi;
        }
        out.col(str) = v;
    }
    return out;
}

// same for a truncated, time-dependent network (initial bond is trivial)
Mat dense_network_columns(const EnvironmentNetwork& net, int steps) {
    const int chi = static_cast<int>(net.blocks[0].size());
    Eigen::Index cols = 1;
    for (int m = 0; m < steps; ++m) cols *= chi;
    Mat out(net.ranks[static_cast<size_t>(steps)], cols);
    for (Eigen::Index str = 0; str < cols; ++str) {
        Vec v = Vec::Ones(1);
        Eigen::Index rem = str;
        for (int m = 0; m < steps; ++m) {
            v = net.blocks[static_cast<size_t>(m)][static_cast<size_t>(rem % chi)] * v;
            rem /= chi;
        }
        out.col(str) = v;
    }
    return out;
}

// minimal distance over the dropped final isometry:
// min_W ||W E_t - E_e||^2 = ||E_t||^2 + ||E_e||^2 - 2 * nuclear(E_t E_e^dag)
double aligned_network_error(const Mat& truncated, const Mat& exact) {
    const double cross = svd(truncated * exact.adjoint()).s.sum();
    const double sq = truncated.squaredNorm() + exact.squaredNorm() - 2.0 * cross;
    return std::sqrt(std::max(0.0, sq)) / exact.norm();
}

}   // namespace

TEST_CASE("decompose_gate of the identity is a single product dyad") {
    DyadicDecomposition d = decompose_gate(Mat::Identity(4, 4), 2, 2);
    CHECK(d.chi() == 1);
    Mat a_scaled = d.system_blocks[0] / d.system_blocks[0](0, 0);
    Mat b_scaled = d.env_blocks[0] / d.env_blocks[0](0, 0);
    CHECK((a_scaled - Mat::Identity(2, 2)).norm() < 1e-12);
    CHECK((b_scaled - Mat::Identity(2, 2)).norm() < 1e-12);
}

TEST_CASE("operator-Schmidt ranks of SWAP and CNOT") {
    CHECK(decompose_gate(swap_gate(), 2, 2).chi() == 4);
    CHECK(oracle_chi(swap_gate(), 2, 2) == 4);
    CHECK(decompose_gate(cnot_gate(), 2, 2).chi() == 2);
    CHECK(oracle_chi(cnot_gate(), 2, 2) == 2);
}

TEST_CASE("decomposition invariants on random unitaries") {
    for (int trial = 0; trial < 5; ++trial) {
        Mat u = random_unitary_matrix(8);   // d_system = 2, d_env = 4
        DyadicDecomposition d = decompose_gate(u, 2, 4);
        CHECK(d.chi() == oracle_chi(u, 2, 4));
        Mat rebuilt = Mat::Zero(8, 8);
        for (int i = 0; i < d.chi(); ++i)
            rebuilt += kron(d.system_blocks[static_cast<size_t>(i)],
                            d.env_blocks[static_cast<size_t>(i)]);
        CHECK((rebuilt - u).norm() < 1e-10);
        for (int i = 0; i < d.chi(); ++i)
            for (int j = 0; j < d.chi(); ++j) {
                cxd tr = (d.system_blocks[static_cast<size_t>(i)] *
                          d.system_blocks[static_cast<size_t>(j)].adjoint())
                             .trace();
                CHECK(std::abs(tr - cxd(i == j ? 1.0 : 0.0)) < 1e-10);
            }
        Mat left = Mat::Zero(4, 4), right = Mat::Zero(4, 4);
        for (const Mat& b : d.env_blocks) {
            left += b * b.adjoint();
            right += b.adjoint() * b;
        }
        CHECK((left - 2.0 * Mat::Identity(4, 4)).norm() < 1e-10);
        CHECK((right - 2.0 * Mat::Identity(4, 4)).norm() < 1e-10);
    }
    CHECK_THROWS_AS(decompose_gate(2.0 * Mat::Identity(4, 4), 2, 2), std::invalid_argument);
}

TEST_CASE("swap_tensor_factors exchanges the slots") {
    Mat a = random_complex(2, 2), b = random_complex(2, 2);
    CHECK((swap_tensor_factors(kron(a, b), 2, 2) - kron(b, a)).norm() < 1e-12);
}

TEST_CASE("environment channel of the identity gate is the identity map") {
    EnvironmentChannel c = env_channel(decompose_gate(Mat::Identity(4, 4), 2, 2));
    Mat rho = random_complex(2, 2);
    rho = rho * rho.adjoint();
    rho /= rho.trace();
    CHECK((c.apply(rho) - rho).norm() < 1e-12);
}

TEST_CASE("environment channel of SWAP is completely depolarizing") {
    EnvironmentChannel c = env_channel(decompose_gate(swap_gate(), 2, 2));
    for (int trial = 0; trial < 3; ++trial) {
        Mat rho = random_complex(2, 2);
        rho = rho * rho.adjoint();
        rho /= rho.trace();
        CHECK((c.apply(rho) - 0.5 * Mat::Identity(2, 2)).norm() < 1e-12);
    }
}

TEST_CASE("Kraus trace preservation across gate families") {
    XYZParams p;
    std::vector<Mat> gates{build_xyz_gate(p, BondPosition::left),
                           build_xyz_gate(p, BondPosition::mid),
                           build_xyz_gate(p, BondPosition::right), swap_gate(), cnot_gate(),
                           random_unitary_matrix(4)};
    MBLParams mp;
    mp.coupling = 0.3;
    mp.fields = sample_disorder(2, 5);
    for (const Mat& g : build_mbl_layer(mp)) gates.push_back(g);
    for (const Mat& g : gates) {
        EnvironmentChannel c = env_channel(decompose_gate(g, 2, 2));
        Mat acc = Mat::Zero(2, 2);
        for (const Mat& k : c.kraus) acc += k.adjoint() * k;
        CHECK((acc - Mat::Identity(2, 2)).norm() <= 1e-12);
    }
}

TEST_CASE("rank_select on reference spectra") {
    RVec pure(4);
    pure << 1.0, 0.0, 0.0, 0.0;
    CHECK(rank_select(0.5, pure) == 1);
    CHECK(rank_select(0.0, pure) == 1);

    RVec lam(4);
    lam << 0.7, 0.2, 0.06, 0.04;
    // oracle: enumerate r, pick the smallest with sqrt(tail) <= eps
    auto oracle = [&](double eps) {
        for (int r = 1; r <= 4; ++r) {
            double tail = 0.0;
            for (int j = r; j < 4; ++j) tail += lam(j);
            if (std::sqrt(tail) <= eps) return r;
        }
        return 4;
    };
    CHECK(oracle(0.25) == 3);
    CHECK(rank_select(0.25, lam) == 3);
    CHECK(rank_select(0.001, lam) == 4);
    CHECK(rank_select(1.0, lam) == 1);

    RVec two(3);
    two << 0.8, 0.2, 0.0;
    CHECK(rank_select(0.0, two) == 2);   // zero budget keeps the nonzero part

    for (int trial = 0; trial < 20; ++trial) {
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        RVec s(6);
        for (int j = 0; j < 6; ++j) s(j) = unif(rng);
        std::sort(s.data(), s.data() + 6, std::greater<double>());
        s /= s.sum();
        const double eps = unif(rng);
        const int got = rank_select(eps, s);
        int expected = 6;
        for (int r = 1; r <= 6; ++r) {
            double tail = 0.0;
            for (int j = r; j < 6; ++j) tail += s(j);
            if (std::sqrt(tail) <= eps) {
                expected = r;
                break;
            }
        }
        CHECK(got == expected);
    }
}

TEST_CASE("identity channel keeps rank one with zero error") {
    DyadicDecomposition d = decompose_gate(Mat::Identity(4, 4), 2, 2);
    Vec psi = random_complex(2, 1);
    psi /= psi.norm();
    EnvironmentNetwork net = truncate_environment(env_channel(d), d, psi, 8, 0.3, 64);
    for (int m = 1; m <= 8; ++m) CHECK(net.ranks[static_cast<size_t>(m)] == 1);
    CHECK(net.realized_error() == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(!net.exceeds_budget);
}

TEST_CASE("qubit environments never exceed rank two") {
    Mat g = random_unitary_matrix(4);
    DyadicDecomposition d = decompose_gate(g, 2, 2);
    Vec psi(2);
    psi << 1.0, 0.0;
    EnvironmentNetwork net = truncate_environment(env_channel(d), d, psi, 10, 1e-8, 64);
    for (int r : net.ranks) CHECK(r <= 2);
}

TEST_CASE("single-sweep truncation stays within the error budget") {
    // dense four-spin chain, target spin 0; the exact network is contracted
    // from the full-step dyadic decomposition, the truncated one is lifted
    // through the stored isometries
    XYZParams p;
    CircuitLayout layout = xyz_circuit(p, 4, 4, 0);
    Mat step = compose_layer(layout.layers[0], 4);
    DyadicDecomposition full = decompose_gate(step, 2, 8);
    Vec psi_env = Vec::Zero(8);
    psi_env(7) = 1.0;   // all environment spins down

    Mat exact = dense_network_columns(full.env_blocks, psi_env, 4);
    for (double eps : {0.1, 0.01, 0.0}) {
        EnvironmentNetwork net =
            truncate_environment(env_channel(full), full, psi_env, 4, eps, 512, true);
        Mat truncated = net.isometries.back() * dense_network_columns(net, 4);
        const double err = (truncated - exact).norm() / exact.norm();
        if (eps > 0)
            CHECK(err <= eps);
        else
            CHECK(err <= 1e-10);
        CHECK(net.realized_error() <= eps + 1e-12);
    }
}

TEST_CASE("one-shot truncation picks the optimal isometry") {
    Mat g = random_unitary_matrix(8);
    DyadicDecomposition d = decompose_gate(g, 2, 4);
    Vec psi = random_complex(4, 1);
    psi /= psi.norm();
    Mat rho = Mat::Zero(4, 4);
    for (const Mat& k : env_channel(d).kraus) rho += k * psi * psi.adjoint() * k.adjoint();
    EighResult e = eigh(rho);
    const int r = 2;
    Mat w_opt = e.vectors.leftCols(r);
    const double captured = (w_opt.adjoint() * rho * w_opt).trace().real();
    for (int trial = 0; trial < 25; ++trial) {
        Mat w = random_isometry(4, r);
        CHECK((w.adjoint() * rho * w).trace().real() <= captured + 1e-12);
    }
}

TEST_CASE("rank cap is a soft condition that records the realized error") {
    Mat g = random_unitary_matrix(8);
    DyadicDecomposition d = decompose_gate(g, 2, 4);
    Vec psi = random_complex(4, 1);
    psi /= psi.norm();
    EnvironmentNetwork net = truncate_environment(env_channel(d), d, psi, 6, 1e-6, 1);
    CHECK(net.exceeds_budget);
    for (int m = 1; m <= 6; ++m) CHECK(net.ranks[static_cast<size_t>(m)] == 1);
    CHECK(net.realized_error() > 1e-6);
}

TEST_CASE("chain builder on a two-spin chain equals the direct sweep") {
    XYZParams p;
    CircuitLayout layout = xyz_circuit(p, 2, 6, 0);
    std::vector<Vec> kets{spin_ket(Spin::up), spin_ket(Spin::down)};
    ChainEnvironment chain = build_chain_environment(layout, 0.05, 64, kets);
    REQUIRE(chain.right.has_value());
    REQUIRE(!chain.left.has_value());

    DyadicDecomposition d = decompose_gate(layout.gate(0, 0), 2, 2);
    EnvironmentNetwork direct =
        truncate_environment(env_channel(d), d, spin_ket(Spin::down), 6, 0.05, 64);
    REQUIRE(chain.right->ranks == direct.ranks);
    for (int m = 0; m < 6; ++m)
        for (size_t i = 0; i < direct.blocks[static_cast<size_t>(m)].size(); ++i)
            CHECK((chain.right->blocks[static_cast<size_t>(m)][i] -
                   direct.blocks[static_cast<size_t>(m)][i])
                      .norm() < 1e-12);
}

namespace {

// exact dense environment blocks for target spin 0: B_i = V_env (b_i (x) I),
// with b_i taken from the same bond decomposition the builder uses, so the
// dyad labels agree
std::vector<Mat> exact_env_blocks_first_spin(const CircuitLayout& layout) {
    const int n = layout.sites;
    std::vector<Mat> env_gates(layout.layers[0].begin() + 1, layout.layers[0].end());
    Mat v_env = env_gates.empty() ? Mat::Identity(2, 2) : compose_layer(env_gates, n - 1);
    DyadicDecomposition dec = decompose_gate(layout.gate(0, 0), 2, 2);
    const int rest = 1 << (n - 2);
    std::vector<Mat> out;
    out.reserve(dec.env_blocks.size());
    for (const Mat& b : dec.env_blocks) out.push_back(v_env * kron(b, Mat::Identity(rest, rest)));
    return out;
}

}   // namespace

TEST_CASE("iterative chain builder reproduces exact influence overlaps at eps = 0") {
    XYZParams p;
    const int sites = 5, steps = 4;
    CircuitLayout layout = xyz_circuit(p, sites, steps, 0);
    std::vector<Vec> kets(static_cast<size_t>(sites), spin_ket(Spin::down));
    kets[0] = spin_ket(Spin::up);
    ChainEnvironment chain = build_chain_environment(layout, 0.0, 4096, kets);

    std::vector<Vec> env_kets(static_cast<size_t>(sites - 1), spin_ket(Spin::down));
    Vec psi_env = product_state(env_kets);
    Mat exact = dense_network_columns(exact_env_blocks_first_spin(layout), psi_env, steps);
    Mat truncated = dense_network_columns(*chain.right, steps);

    Mat gram_exact = exact.adjoint() * exact;
    Mat gram_trunc = truncated.adjoint() * truncated;
    CHECK((gram_exact - gram_trunc).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("iterative chain builder meets the global error budget") {
    XYZParams p;
    const int sites = 6, steps = 5;
    CircuitLayout layout = xyz_circuit(p, sites, steps, 0);
    std::vector<Vec> kets(static_cast<size_t>(sites), spin_ket(Spin::down));
    kets[0] = spin_ket(Spin::up);

    std::vector<Vec> env_kets(static_cast<size_t>(sites - 1), spin_ket(Spin::down));
    Vec psi_env = product_state(env_kets);
    Mat exact = dense_network_columns(exact_env_blocks_first_spin(layout), psi_env, steps);

    for (double eps : {0.1, 0.01}) {
        ChainEnvironment chain = build_chain_environment(layout, eps, 4096, kets);
        REQUIRE(!chain.right->exceeds_budget);
        Mat truncated = dense_network_columns(*chain.right, steps);
        CHECK(aligned_network_error(truncated, exact) <= eps);
    }
}

TEST_CASE("chain ranks respect the dimension and growth bounds") {
    XYZParams p;
    CircuitLayout layout = xyz_circuit(p, 6, 6, 0);
    std::vector<Vec> kets(6, spin_ket(Spin::down));
    kets[0] = spin_ket(Spin::up);
    ChainEnvironment chain = build_chain_environment(layout, 1e-6, 4096, kets);
    const auto& ranks = chain.right->ranks;
    for (size_t m = 0; m < ranks.size(); ++m) {
        CHECK(ranks[m] <= 32);   // 2^(environment sites)
        CHECK(static_cast<double>(ranks[m]) <= std::pow(4.0, static_cast<double>(m)));
    }

    // left-canonical contraction after truncation: sum_i B^dag B <= 2 I
    for (const auto& row : chain.right->blocks) {
        Mat acc = Mat::Zero(row[0].cols(), row[0].cols());
        for (const Mat& b : row) acc += b.adjoint() * b;
        CHECK(eigh(acc).lambdas(0) <= 2.0 + 1e-9);
    }
}
