#pragma once

#include "qrom/linalg.hpp"
#include "qrom/models.hpp"

#include <optional>
#include <vector>

namespace qrom {

/// Operator-Schmidt split of a two-site unitary, U = sum_i A_i (x) B_i, with
/// Tr(A_i A_j^dag) = delta_ij and the singular values absorbed into the
/// environment-side blocks, so sum_i B_i B_i^dag = sum_i B_i^dag B_i = d_S I.
struct DyadicDecomposition {
    std::vector<Mat> system_blocks;   // A_i, d_system x d_system
    std::vector<Mat> env_blocks;      // B_i, d_env x d_env
    int d_system = 2;
    int d_env = 2;

    int chi() const { return static_cast<int>(system_blocks.size()); }
};

/// Bipartition axis: system factor on the slow (left) tensor index.
DyadicDecomposition decompose_gate(const Mat& u, int d_system, int d_env);

/// Reorders a (d_a x d_b)-factorized operator so the two tensor slots swap.
Mat swap_tensor_factors(const Mat& u, int d_a, int d_b);

/// CPTP map driving the environment density matrix, K_i = B_i / sqrt(d_S).
struct EnvironmentChannel {
    std::vector<Mat> kraus;

    Mat apply(const Mat& rho) const;
};

EnvironmentChannel env_channel(const DyadicDecomposition& d);

/// Smallest rank r with sqrt(sum_{j>r} lambda_j) <= eps_step. Expects a
/// clipped non-negative descending spectrum.
int rank_select(double eps_step, const RVec& lambdas);

/// Time-indexed compressed environment: blocks[m-1][i] maps the rank-r(m-1)
/// effective space at step m-1 to the rank-r(m) space at step m, carrying the
/// dyad index i. ranks[0] == 1 (the initial state is absorbed into the first
/// block). step_errors holds the realized per-truncation errors.
struct EnvironmentNetwork {
    std::vector<std::vector<Mat>> blocks;
    std::vector<int> ranks;
    std::vector<Mat> isometries;   // w(m), kept only on request
    std::vector<double> step_errors;
    double epsilon = 0.0;
    int r_max = 0;
    bool exceeds_budget = false;
    int degenerate_cuts = 0;

    int steps() const { return static_cast<int>(blocks.size()); }
    double realized_error() const;
};

/// Single-sweep dimensionality reduction for a time-independent environment:
/// propagate rho(m+1) = Psi[rho(m)], keep the leading eigenvectors per step
/// with per-step budget epsilon / sqrt(steps), contract the isometries into
/// the blocks. The final isometry w(N) is dropped.
EnvironmentNetwork truncate_environment(const EnvironmentChannel& channel,
                                        const DyadicDecomposition& decomposition,
                                        const Vec& psi_env, int steps, double epsilon, int r_max,
                                        bool keep_isometries = false);

/// Compressed environment(s) of the target spin plus the system-side dyad
/// blocks needed to assemble effective gates. For an end target one side is
/// empty; for an interior target both chains are built.
struct ChainEnvironment {
    int target = 0;
    int steps = 0;
    std::vector<std::vector<Mat>> sys_left;    // AL_i per step (gate on bond target-1)
    std::vector<std::vector<Mat>> sys_right;   // AR_j per step (gate on bond target)
    std::optional<EnvironmentNetwork> left;
    std::optional<EnvironmentNetwork> right;
};

/// Iterative builder for chain-shaped environments: absorbs one site's gate
/// column at a time (outermost site first) and re-compresses after each
/// absorption. Each sweep uses the per-step budget eps_side / sqrt(N * n_abs)
/// so the compounded error estimate stays below epsilon; an interior target
/// splits epsilon evenly between the two chains. Peak stored dimension stays
/// bounded by 2 * r_max per tensor.
ChainEnvironment build_chain_environment(const CircuitLayout& layout, double epsilon, int r_max,
                                         const std::vector<Vec>& site_states,
                                         bool keep_isometries = false);

}   // namespace qrom
