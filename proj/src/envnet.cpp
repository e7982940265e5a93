#include "qrom/envnet.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>

namespace qrom {

namespace {

// Floor below which post-clip eigenvalues are treated as exact zeros (eigh
// noise on rank-deficient density matrices). Kept tight: weak-coupling
// spectra carry genuine weights down to ~1e-14 that exact builds must retain.
constexpr double kSpectrumFloor = 1e-15;

Mat unvec_rowmajor(const Vec& v, Eigen::Index rows, Eigen::Index cols) {
    Mat m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = v(r * cols + c);
    return m;
}

struct SweepResult {
    std::vector<std::vector<Mat>> blocks;
    std::vector<int> ranks;
    std::vector<Mat> isometries;
    std::vector<double> step_errors;
    bool capped = false;
    int degenerate_cuts = 0;
};

// Produces the contracted columns C_i = B_i(m+1) w(m) for step m without
// requiring the caller to materialize B_i itself.
using ContractFn = std::function<std::vector<Mat>(int m, const Mat& w_prev)>;

// Algorithm: starting from rho(0) = v0 v0^dag, propagate the (possibly
// sub-normalized) environment density matrix one step at a time through the
// blocks, keep the leading-eigenvector isometry w(m+1) per step, and contract
// it into the blocks. rho is carried in the reduced basis.
SweepResult density_matrix_sweep(const ContractFn& contract, int steps, const Vec& v0,
                                 double eps_step, int r_max, double sys_dim,
                                 bool keep_isometries) {
    SweepResult out;
    out.ranks.assign(static_cast<size_t>(steps) + 1, 1);
    out.blocks.resize(static_cast<size_t>(steps));
    out.step_errors.assign(static_cast<size_t>(steps), 0.0);
    if (keep_isometries) out.isometries.resize(static_cast<size_t>(steps));

    Mat w_prev = v0;                 // d(0) x r(0), r(0) = 1
    Mat rho_factor = Mat::Ones(1, 1);   // reduced density matrix = F F^dag
    for (int m = 0; m < steps; ++m) {
        std::vector<Mat> contracted = contract(m, w_prev);
        const Eigen::Index dim = contracted.at(0).rows();
        const Eigen::Index r_prev = contracted.at(0).cols();

        Mat w;
        int r = 0;
        bool exact_mode = eps_step == 0.0;
        if (exact_mode) {
            // Zero budget: keep the orthonormalized image span of the
            // contracted columns. Amplitudes separate genuine directions from
            // roundoff far more sharply than density-matrix weights do, and
            // covering the full span keeps the effective gates isometric.
            Mat stacked(dim, static_cast<Eigen::Index>(contracted.size()) * r_prev);
            for (size_t i = 0; i < contracted.size(); ++i)
                stacked.middleCols(static_cast<Eigen::Index>(i) * r_prev, r_prev) =
                    contracted[i];
            SvdResult f = svd(stacked);
            const double cutoff = 1e-12 * (f.s.size() > 0 ? f.s(0) : 0.0);
            for (Eigen::Index j = 0; j < f.s.size() && j < dim; ++j)
                if (f.s(j) > cutoff) ++r;
            r = std::max(r, 1);
            if (r_max > 0 && r > r_max) {
                exact_mode = false;   // cap collision: fall back to mass selection
            } else {
                w = f.u.leftCols(r);
            }
        }
        if (!exact_mode) {
            Mat rho = Mat::Zero(dim, dim);
            const double inv_root = 1.0 / std::sqrt(sys_dim);
            for (const Mat& c : contracted) {
                Mat g = inv_root * (c * rho_factor);
                rho.selfadjointView<Eigen::Lower>().rankUpdate(g, 1.0);
            }
            rho.triangularView<Eigen::StrictlyUpper>() = rho.adjoint();

            EighResult e = eigh(rho);
            RVec lambdas = clip_density_spectrum(e.lambdas);
            const double floor = kSpectrumFloor * (lambdas.size() > 0 ? lambdas(0) : 0.0);
            for (Eigen::Index j = 0; j < lambdas.size(); ++j)
                if (lambdas(j) < floor) lambdas(j) = 0.0;

            r = rank_select(eps_step, lambdas);
            if (r_max > 0 && r > r_max) {
                r = r_max;
                out.capped = true;
            }
            double tail = 0.0;
            for (Eigen::Index j = r; j < lambdas.size(); ++j) tail += lambdas(j);
            out.step_errors[static_cast<size_t>(m)] = std::sqrt(std::max(0.0, tail));
            if (r < lambdas.size() && lambdas(r - 1) - lambdas(r) < 1e-12)
                ++out.degenerate_cuts;
            w = e.vectors.leftCols(r);
            rho_factor = lambdas.head(r).cwiseSqrt().cast<cxd>().asDiagonal();
        } else {
            // carry the reduced density factor forward in the new basis:
            // rho(m+1) = sum_i (K_i in reduced bases) rho(m) (...)^dag
            Mat stacked_f(r, static_cast<Eigen::Index>(contracted.size()) * rho_factor.cols());
            const double inv_root = 1.0 / std::sqrt(sys_dim);
            for (size_t i = 0; i < contracted.size(); ++i)
                stacked_f.middleCols(static_cast<Eigen::Index>(i) * rho_factor.cols(),
                                     rho_factor.cols()) =
                    inv_root * (w.adjoint() * (contracted[i] * rho_factor));
            Mat small = stacked_f * stacked_f.adjoint();
            EighResult e = eigh(small, 1e-6);
            RVec lambdas = e.lambdas.cwiseMax(0.0);
            rho_factor = e.vectors * lambdas.cwiseSqrt().cast<cxd>().asDiagonal();
        }

        auto& step_blocks = out.blocks[static_cast<size_t>(m)];
        step_blocks.reserve(contracted.size());
        for (const Mat& c : contracted) step_blocks.push_back(w.adjoint() * c);
        out.ranks[static_cast<size_t>(m) + 1] = r;
        if (keep_isometries) out.isometries[static_cast<size_t>(m)] = w;
        w_prev = std::move(w);
    }
    return out;
}

// C_i = sum_i' kron(site_{i,i'}, inner_{i'}) w  (site factor on the slow slot)
// or    sum_i' kron(inner_{i'}, site_{i,i'}) w  (site factor on the fast slot),
// evaluated without forming the Kronecker products.
std::vector<Mat> contract_composed(const std::vector<Mat>& site_factors_flat, int chi_out,
                                   int chi_in, const std::vector<Mat>& inner, bool site_slow,
                                   const Mat& w) {
    const Eigen::Index a = inner[0].rows();   // inner output dim
    const Eigen::Index b = inner[0].cols();   // inner input dim
    const Eigen::Index r = w.cols();
    std::vector<Mat> out(static_cast<size_t>(chi_out));
    for (auto& c : out) c = Mat::Zero(2 * a, r);

    if (site_slow) {
        // w[(s'*b + beta), c]: view as (b, 2r) with column (2c + s')
        Eigen::Map<const Mat> w_view(w.data(), b, 2 * r);
        for (int ip = 0; ip < chi_in; ++ip) {
            Mat t = inner[static_cast<size_t>(ip)] * w_view;   // (a, 2r)
            for (int i = 0; i < chi_out; ++i) {
                const Mat& s2 = site_factors_flat[static_cast<size_t>(i * chi_in + ip)];
                Eigen::Map<Mat> c_view(out[static_cast<size_t>(i)].data(), a, 2 * r);
                for (Eigen::Index col = 0; col < r; ++col)
                    for (int s = 0; s < 2; ++s)
                        c_view.col(2 * col + s) += s2(s, 0) * t.col(2 * col) +
                                                   s2(s, 1) * t.col(2 * col + 1);
            }
        }
    } else {
        // w[(beta*2 + s'), c]: strided (b, r) views per s'
        using Strided = Eigen::Map<const Mat, 0, Eigen::Stride<Eigen::Dynamic, 2>>;
        using StridedOut = Eigen::Map<Mat, 0, Eigen::Stride<Eigen::Dynamic, 2>>;
        for (int ip = 0; ip < chi_in; ++ip) {
            Mat t(2 * a, r);   // kron(inner, I) w, laid out [(alpha*2 + s'), c]
            for (int sp = 0; sp < 2; ++sp) {
                Strided w_s(w.data() + sp, b, r, Eigen::Stride<Eigen::Dynamic, 2>(2 * b, 2));
                StridedOut t_s(t.data() + sp, a, r, Eigen::Stride<Eigen::Dynamic, 2>(2 * a, 2));
                t_s = inner[static_cast<size_t>(ip)] * w_s;
            }
            for (int i = 0; i < chi_out; ++i) {
                const Mat& s2 = site_factors_flat[static_cast<size_t>(i * chi_in + ip)];
                Eigen::Map<Mat, 0> c_flat(out[static_cast<size_t>(i)].data(), 2, a * r);
                Eigen::Map<const Mat, 0> t_flat(t.data(), 2, a * r);
                c_flat.noalias() += s2 * t_flat;
            }
        }
    }
    return out;
}

}   // namespace

DyadicDecomposition decompose_gate(const Mat& u, int d_system, int d_env) {
    const Eigen::Index dim = static_cast<Eigen::Index>(d_system) * d_env;
    if (u.rows() != dim || u.cols() != dim)
        throw std::invalid_argument("decompose_gate: dimension mismatch");
    if (!is_unitary(u)) throw std::invalid_argument("decompose_gate: input is not unitary");

    // reshuffle u[(so,eo),(si,ei)] -> m[(so,si),(eo,ei)]
    Mat m(static_cast<Eigen::Index>(d_system) * d_system,
          static_cast<Eigen::Index>(d_env) * d_env);
    for (int so = 0; so < d_system; ++so)
        for (int eo = 0; eo < d_env; ++eo)
            for (int si = 0; si < d_system; ++si)
                for (int ei = 0; ei < d_env; ++ei)
                    m(so * d_system + si, eo * d_env + ei) =
                        u(so * d_env + eo, si * d_env + ei);

    SvdResult f = svd(m);
    const double cutoff = 1e-12 * (f.s.size() > 0 ? f.s(0) : 0.0);
    DyadicDecomposition out;
    out.d_system = d_system;
    out.d_env = d_env;
    for (Eigen::Index k = 0; k < f.s.size(); ++k) {
        if (f.s(k) <= cutoff) break;
        out.system_blocks.push_back(unvec_rowmajor(f.u.col(k), d_system, d_system));
        // singular value absorbed into the environment side:
        // B_k(eo, ei) = s_k * vh(k, eo*d_env + ei)
        out.env_blocks.push_back(
            unvec_rowmajor(f.s(k) * f.vh.row(k).transpose(), d_env, d_env));
    }
    return out;
}

Mat swap_tensor_factors(const Mat& u, int d_a, int d_b) {
    const Eigen::Index dim = static_cast<Eigen::Index>(d_a) * d_b;
    if (u.rows() != dim || u.cols() != dim)
        throw std::invalid_argument("swap_tensor_factors: dimension mismatch");
    Mat out(dim, dim);
    for (int ao = 0; ao < d_a; ++ao)
        for (int bo = 0; bo < d_b; ++bo)
            for (int ai = 0; ai < d_a; ++ai)
                for (int bi = 0; bi < d_b; ++bi)
                    out(bo * d_a + ao, bi * d_a + ai) = u(ao * d_b + bo, ai * d_b + bi);
    return out;
}

Mat EnvironmentChannel::apply(const Mat& rho) const {
    Mat out = Mat::Zero(rho.rows(), rho.cols());
    for (const Mat& k : kraus) out.noalias() += k * rho * k.adjoint();
    return out;
}

EnvironmentChannel env_channel(const DyadicDecomposition& d) {
    EnvironmentChannel c;
    const double scale = 1.0 / std::sqrt(static_cast<double>(d.d_system));
    c.kraus.reserve(d.env_blocks.size());
    for (const Mat& b : d.env_blocks) c.kraus.push_back(scale * b);
    return c;
}

int rank_select(double eps_step, const RVec& lambdas) {
    const Eigen::Index n = lambdas.size();
    if (n == 0) throw std::invalid_argument("rank_select: empty spectrum");
    double total = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
        if (lambdas(j) < 0.0)
            throw std::invalid_argument("rank_select: spectrum must be non-negative");
        if (j > 0 && lambdas(j) > lambdas(j - 1) + 1e-12)
            throw std::invalid_argument("rank_select: spectrum must be descending");
        total += lambdas(j);
    }
    if (total > 1.0 + 1e-8) throw std::invalid_argument("rank_select: spectrum mass above one");

    double tail = total;
    for (int r = 1; r <= static_cast<int>(n); ++r) {
        tail -= lambdas(r - 1);
        if (std::sqrt(std::max(0.0, tail)) <= eps_step) return r;
    }
    return static_cast<int>(n);
}

double EnvironmentNetwork::realized_error() const {
    double acc = 0.0;
    for (double e : step_errors) acc += e * e;
    return std::sqrt(acc);
}

EnvironmentNetwork truncate_environment(const EnvironmentChannel& channel,
                                        const DyadicDecomposition& decomposition,
                                        const Vec& psi_env, int steps, double epsilon, int r_max,
                                        bool keep_isometries) {
    if (steps < 1) throw std::invalid_argument("truncate_environment: need at least one step");
    if (epsilon < 0.0 || epsilon >= 1.0)
        throw std::invalid_argument("truncate_environment: epsilon must lie in [0, 1)");
    if (std::abs(psi_env.norm() - 1.0) > 1e-10)
        throw std::invalid_argument("truncate_environment: environment state must be unit norm");
    if (channel.kraus.size() != decomposition.env_blocks.size())
        throw std::invalid_argument("truncate_environment: channel/decomposition mismatch");
    if (psi_env.size() != decomposition.d_env)
        throw std::invalid_argument("truncate_environment: state dimension mismatch");

    const double eps_step = epsilon / std::sqrt(static_cast<double>(steps));
    const auto& blocks = decomposition.env_blocks;
    SweepResult sweep = density_matrix_sweep(
        [&blocks](int, const Mat& w_prev) {
            std::vector<Mat> contracted;
            contracted.reserve(blocks.size());
            for (const Mat& b : blocks) contracted.push_back(b * w_prev);
            return contracted;
        },
        steps, psi_env, eps_step, r_max, static_cast<double>(decomposition.d_system),
        keep_isometries);
    EnvironmentNetwork net;
    net.blocks = std::move(sweep.blocks);
    net.ranks = std::move(sweep.ranks);
    net.isometries = std::move(sweep.isometries);
    net.step_errors = std::move(sweep.step_errors);
    net.epsilon = epsilon;
    net.r_max = r_max;
    net.exceeds_budget = sweep.capped;
    net.degenerate_cuts = sweep.degenerate_cuts;
    return net;
}

namespace {

// Decompositions of one bond's gate, resolved per step (cached once for
// time-invariant layouts). `swapped` flips the gate so the dangling dyad side
// faces a left-lying environment.
struct BondDyads {
    std::vector<DyadicDecomposition> decs;   // size 1 or steps

    const DyadicDecomposition& at(int step) const {
        return decs.size() == 1 ? decs[0] : decs.at(static_cast<size_t>(step));
    }
};

BondDyads decompose_bond(const CircuitLayout& layout, int bond, bool swapped) {
    BondDyads out;
    const size_t copies = layout.time_invariant() ? 1 : static_cast<size_t>(layout.steps);
    out.decs.reserve(copies);
    for (size_t s = 0; s < copies; ++s) {
        const Mat& g = layout.gate(static_cast<int>(s), bond);
        out.decs.push_back(decompose_gate(swapped ? swap_tensor_factors(g, 2, 2) : g, 2, 2));
    }
    return out;
}

EnvironmentNetwork merge_sweep(EnvironmentNetwork base, SweepResult sweep, double epsilon,
                               int r_max, bool first) {
    EnvironmentNetwork net;
    net.blocks = std::move(sweep.blocks);
    net.ranks = std::move(sweep.ranks);
    net.isometries = std::move(sweep.isometries);
    net.epsilon = epsilon;
    net.r_max = r_max;
    if (first) {
        net.step_errors = std::move(sweep.step_errors);
        net.exceeds_budget = sweep.capped;
        net.degenerate_cuts = sweep.degenerate_cuts;
    } else {
        // accumulate per-step errors across absorption sweeps in quadrature
        net.step_errors = std::move(base.step_errors);
        for (size_t m = 0; m < net.step_errors.size(); ++m) {
            double e = sweep.step_errors[m];
            net.step_errors[m] = std::sqrt(net.step_errors[m] * net.step_errors[m] + e * e);
        }
        net.exceeds_budget = base.exceeds_budget || sweep.capped;
        net.degenerate_cuts = base.degenerate_cuts + sweep.degenerate_cuts;
    }
    return net;
}

// One absorption: compose the new site's gate column with the already
// truncated inner network and re-compress. `outer` is the bond connecting the
// absorbed site toward the system, `inner` the bond it shares with the inner
// network (null on the first absorption). For a right-lying chain the new
// site factor sits on the slow tensor slot, for a left-lying chain on the
// fast slot. The Kronecker-structured blocks are contracted lazily, so the
// peak stored object is one set of (2 r x r) columns.
EnvironmentNetwork absorb_site(const EnvironmentNetwork* inner_net, const BondDyads& outer,
                               const BondDyads* inner, bool left_chain, const Vec& site_ket,
                               int steps, double eps_step, int r_max, double epsilon,
                               bool keep_isometries) {
    ContractFn contract;
    if (inner_net == nullptr) {
        // first absorption: raw 2x2 dyad factors on the outermost site
        contract = [&outer](int m, const Mat& w_prev) {
            std::vector<Mat> contracted;
            const auto& blocks = outer.at(m).env_blocks;
            contracted.reserve(blocks.size());
            for (const Mat& b : blocks) contracted.push_back(b * w_prev);
            return contracted;
        };
    } else {
        contract = [&outer, inner, inner_net, left_chain](int m, const Mat& w_prev) {
            const auto& odec = outer.at(m);
            const auto& idec = inner->at(m);
            const auto& iblocks = inner_net->blocks[static_cast<size_t>(m)];
            if (iblocks.size() != idec.system_blocks.size())
                throw std::invalid_argument("absorb_site: dyad index mismatch between bonds");
            const int chi_out = static_cast<int>(odec.env_blocks.size());
            const int chi_in = static_cast<int>(iblocks.size());
            // right chain: site factor P'_{i'} Q_i on the slow slot;
            // left chain: site factor Q_i P'_{i'} on the fast slot
            std::vector<Mat> site_factors(static_cast<size_t>(chi_out) * chi_in);
            for (int i = 0; i < chi_out; ++i)
                for (int ip = 0; ip < chi_in; ++ip)
                    site_factors[static_cast<size_t>(i * chi_in + ip)] =
                        left_chain ? Mat(odec.env_blocks[static_cast<size_t>(i)] *
                                         idec.system_blocks[static_cast<size_t>(ip)])
                                   : Mat(idec.system_blocks[static_cast<size_t>(ip)] *
                                         odec.env_blocks[static_cast<size_t>(i)]);
            return contract_composed(site_factors, chi_out, chi_in, iblocks, !left_chain,
                                     w_prev);
        };
    }

    // the inner network starts at bond rank 1, so the composed input space is
    // the absorbed site's ket either way
    SweepResult sweep =
        density_matrix_sweep(contract, steps, site_ket, eps_step, r_max, 2.0, keep_isometries);
    EnvironmentNetwork base = inner_net != nullptr ? *inner_net : EnvironmentNetwork{};
    return merge_sweep(std::move(base), std::move(sweep), epsilon, r_max, inner_net == nullptr);
}

}   // namespace

ChainEnvironment build_chain_environment(const CircuitLayout& layout, double epsilon, int r_max,
                                         const std::vector<Vec>& site_states,
                                         bool keep_isometries) {
    layout.validate();
    if (layout.sites < 2)
        throw std::invalid_argument("build_chain_environment: need at least two spins");
    if (epsilon < 0.0 || epsilon >= 1.0)
        throw std::invalid_argument("build_chain_environment: epsilon must lie in [0, 1)");
    if (site_states.size() != static_cast<size_t>(layout.sites))
        throw std::invalid_argument("build_chain_environment: need one initial ket per site");
    for (const Vec& ket : site_states)
        if (ket.size() != 2 || std::abs(ket.norm() - 1.0) > 1e-10)
            throw std::invalid_argument(
                "build_chain_environment: site states must be unit-norm qubit kets");

    const int l = layout.target;
    const int n = layout.sites;
    const int steps = layout.steps;
    const bool has_left = l > 0;
    const bool has_right = l < n - 1;
    const double eps_side = (has_left && has_right) ? epsilon / 2.0 : epsilon;

    ChainEnvironment out;
    out.target = l;
    out.steps = steps;

    if (has_right) {
        const int n_abs = n - 1 - l;
        const double eps_step =
            eps_side / std::sqrt(static_cast<double>(steps) * static_cast<double>(n_abs));
        EnvironmentNetwork net;
        BondDyads outer = decompose_bond(layout, n - 2, false);
        net = absorb_site(nullptr, outer, nullptr, false, site_states[static_cast<size_t>(n - 1)],
                          steps, eps_step, r_max, eps_side, keep_isometries);
        BondDyads inner = std::move(outer);
        for (int j = n - 2; j >= l + 1; --j) {
            outer = decompose_bond(layout, j - 1, false);
            net = absorb_site(&net, outer, &inner, false, site_states[static_cast<size_t>(j)],
                              steps, eps_step, r_max, eps_side, keep_isometries);
            inner = std::move(outer);
        }
        out.right = std::move(net);
        out.sys_right.resize(static_cast<size_t>(steps));
        for (int m = 0; m < steps; ++m)
            out.sys_right[static_cast<size_t>(m)] = inner.at(m).system_blocks;
    }

    if (has_left) {
        const int n_abs = l;
        const double eps_step =
            eps_side / std::sqrt(static_cast<double>(steps) * static_cast<double>(n_abs));
        EnvironmentNetwork net;
        BondDyads outer = decompose_bond(layout, 0, true);
        net = absorb_site(nullptr, outer, nullptr, true, site_states[0], steps, eps_step, r_max,
                          eps_side, keep_isometries);
        BondDyads inner = std::move(outer);
        for (int j = 1; j <= l - 1; ++j) {
            outer = decompose_bond(layout, j, true);
            net = absorb_site(&net, outer, &inner, true, site_states[static_cast<size_t>(j)],
                              steps, eps_step, r_max, eps_side, keep_isometries);
            inner = std::move(outer);
        }
        out.left = std::move(net);
        out.sys_left.resize(static_cast<size_t>(steps));
        for (int m = 0; m < steps; ++m)
            out.sys_left[static_cast<size_t>(m)] = inner.at(m).system_blocks;
    }

    return out;
}

}   // namespace qrom
