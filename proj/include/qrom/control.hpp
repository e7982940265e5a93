#pragma once

#include "qrom/rom.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <random>
#include <utility>

namespace qrom {

struct OptimizerConfig {
    double learning_rate = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps_adam = 1e-8;
    int max_iters = 10000;
    /// Stop once the relative best-loss improvement over a 200-iteration
    /// window falls below tol.
    double tol = 1e-9;
    std::uint64_t seed = 0;
    enum class Init { identity, random } init = Init::identity;

    void validate() const;
};

/// Four pure states whose Bloch vectors span a regular tetrahedron; passing
/// them through a channel determines its action on any qubit state.
struct TetrahedronStates {
    std::array<Eigen::Vector3d, 4> bloch;
    std::array<Vec, 4> kets;

    Mat density(int i) const;
    static TetrahedronStates standard();
};

enum class LossKind { identity_recover, erase_recover, transfer, echo };

/// A loss instance: which objective, plus the model(s) it is evaluated on.
/// Transfer carries one model per tetrahedron input state.
struct LossProblem {
    LossKind kind = LossKind::identity_recover;
    const ReducedOrderModel* rom = nullptr;
    const std::vector<ReducedOrderModel>* transfer_roms = nullptr;
    const TetrahedronStates* targets = nullptr;

    int steps() const;
    double evaluate(const ControlSequence& controls) const;
};

double loss_identity_recover(const ReducedOrderModel& rom, const ControlSequence& controls);
double loss_erase_recover(const ReducedOrderModel& rom, const ControlSequence& controls);
double loss_transfer(const std::vector<ReducedOrderModel>& roms, const TetrahedronStates& targets,
                     const ControlSequence& controls);
double loss_echo(const ReducedOrderModel& rom, const ControlSequence& controls);

/// Per-gate Euclidean gradients G with dL = Re<G, du>, i.e. G(p,q) =
/// dL/dRe(u_pq) + i dL/dIm(u_pq), via reverse-mode differentiation through
/// the effective-gate chain.
std::vector<Mat> loss_gradient(const LossProblem& problem, const ControlSequence& controls);

struct LossEval {
    double loss = 0.0;
    std::vector<Mat> gradients;
};

/// Loss and gradients from a single forward/backward pass.
LossEval loss_and_gradient(const LossProblem& problem, const ControlSequence& controls);

/// Projection onto the tangent space of the unitary group at u under the
/// canonical metric: G - u herm(u^dag G).
Mat riemannian_grad(const Mat& u, const Mat& euclidean);

/// Polar retraction of u + step back onto the unitary manifold.
Mat retract(const Mat& u, const Mat& step);

Mat random_unitary(std::mt19937_64& rng, int dim = 2);

struct HistoryEntry {
    int iter = 0;
    double loss = 0.0;
    double grad_norm = 0.0;
};

struct OptimizeResult {
    ControlSequence best;
    double best_loss = 0.0;
    std::vector<HistoryEntry> history;
    int iterations = 0;
};

/// Riemannian ADAM over the product of unitary groups. Momentum buffers live
/// in ambient coordinates and are re-projected onto the tangent space after
/// every retraction.
OptimizeResult optimize(const LossProblem& problem, std::pair<int, int> window,
                        const OptimizerConfig& config);

/// Same optimizer driven by arbitrary loss/gradient callables (toy problems,
/// tests).
OptimizeResult optimize_custom(
    const std::function<double(const ControlSequence&)>& loss,
    const std::function<std::vector<Mat>(const ControlSequence&)>& grad, ControlSequence initial,
    const OptimizerConfig& config);

}   // namespace qrom
