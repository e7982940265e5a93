#include "qrom/control.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qrom {

namespace {

constexpr double kInvLn2 = 1.4426950408889634074;

Mat choi_identity_raw() {
    Mat j = Mat::Zero(4, 4);
    j(0, 0) = j(0, 3) = j(3, 0) = j(3, 3) = 1.0;
    return j;
}

Mat choi_depolarizing_raw() { return 0.5 * Mat::Identity(4, 4); }

struct ColumnSet {
    const ReducedOrderModel* rom = nullptr;
    std::vector<std::vector<RomState>> cols;   // [column][k], k = 0..N
};

std::vector<RomState> run_column(const ReducedOrderModel& rom, const Vec& init,
                                 const ControlSequence& controls) {
    std::vector<RomState> states;
    states.reserve(static_cast<size_t>(rom.steps) + 1);
    states.push_back(rom.initial_state(&init));
    for (int k = 0; k < rom.steps; ++k) {
        const Mat* u = controls.active_at(k) ? &controls.gate(k) : nullptr;
        states.push_back(rom.apply_step(states.back(), k, u));
    }
    return states;
}

void check_problem(const LossProblem& p, const ControlSequence& controls) {
    if (p.kind == LossKind::transfer) {
        if (p.transfer_roms == nullptr || p.targets == nullptr)
            throw std::invalid_argument("loss: transfer needs four models and target states");
        const auto& roms = *p.transfer_roms;
        if (roms.size() != 4)
            throw std::invalid_argument("loss: transfer needs exactly four models");
        for (const auto& r : roms) {
            if (r.steps != roms[0].steps || r.target != roms[0].target ||
                (r.psi_system0 - roms[0].psi_system0).norm() > 1e-12)
                throw std::invalid_argument("loss: transfer models are inconsistent");
        }
    } else if (p.rom == nullptr) {
        throw std::invalid_argument("loss: missing model");
    }
    if (p.kind == LossKind::erase_recover && p.steps() % 2 != 0)
        throw std::invalid_argument("loss: erase-recover needs an even step count");
    controls.validate_shape(p.steps());
}

std::vector<ColumnSet> run_forward(const LossProblem& p, const ControlSequence& controls) {
    std::vector<ColumnSet> sets;
    if (p.kind == LossKind::transfer) {
        for (const auto& rom : *p.transfer_roms) {
            ColumnSet s;
            s.rom = &rom;
            s.cols.push_back(run_column(rom, rom.psi_system0, controls));
            sets.push_back(std::move(s));
        }
    } else {
        ColumnSet s;
        s.rom = p.rom;
        for (int b = 0; b < 2; ++b) {
            Vec basis = Vec::Zero(2);
            basis(b) = 1.0;
            s.cols.push_back(run_column(*p.rom, basis, controls));
        }
        sets.push_back(std::move(s));
    }
    return sets;
}

/// Raw Choi matrix J[(s,b),(s',b')] from the two basis columns at step k.
Mat raw_choi_at(const ColumnSet& set, int k) {
    Mat j(4, 4);
    for (int s = 0; s < 2; ++s)
        for (int b = 0; b < 2; ++b)
            for (int sp = 0; sp < 2; ++sp)
                for (int bp = 0; bp < 2; ++bp) {
                    const auto& psi_b = set.cols[static_cast<size_t>(b)][static_cast<size_t>(k)];
                    const auto& psi_bp =
                        set.cols[static_cast<size_t>(bp)][static_cast<size_t>(k)];
                    cxd v = 0.0;
                    for (int a = 0; a < psi_b.r_left; ++a)
                        v += psi_bp.amp.col(a * 2 + sp).dot(psi_b.amp.col(a * 2 + s));
                    j(s * 2 + b, sp * 2 + bp) = v;
                }
    return j;
}

/// Hermitian Gamma with dS = Tr(Gamma drho) for S(rho) in bits; eigenvalues
/// floored at 1e-12 to keep the logarithm finite.
Mat entropy_grad_bits(const Mat& rho) {
    EighResult e = eigh(rho, 1e-6);
    Vec diag(e.lambdas.size());
    for (Eigen::Index j = 0; j < e.lambdas.size(); ++j) {
        const double lam = std::max(e.lambdas(j), 1e-12);
        diag(j) = -(std::log2(lam) + kInvLn2);
    }
    return e.vectors * diag.asDiagonal() * e.vectors.adjoint();
}

/// Hermitian Gamma_J with d(-I) = Tr(Gamma_J dJ) for the raw (unnormalized)
/// Choi matrix J.
Mat echo_choi_grad(const Mat& j_raw) {
    const double tau = j_raw.trace().real();
    ChoiMatrix omega{j_raw / tau, true};
    Mat gamma_i = kron(entropy_grad_bits(omega.output_marginal()), Mat::Identity(2, 2)) +
                  kron(Mat::Identity(2, 2), entropy_grad_bits(omega.input_marginal())) -
                  entropy_grad_bits(omega.data);
    Mat gamma_l = -gamma_i;
    const double shift = (gamma_l * omega.data).trace().real() / tau;
    return gamma_l / tau - shift * Mat::Identity(4, 4);
}

/// lambda_c += sum_{s,b} Gamma[(t,c),(s,b)] psi_b at one checkpoint.
void inject_choi_grad(const Mat& gamma, const ColumnSet& set, int k,
                      std::vector<RomState>& lambda) {
    for (int c = 0; c < 2; ++c)
        for (int t = 0; t < 2; ++t)
            for (int s = 0; s < 2; ++s)
                for (int b = 0; b < 2; ++b) {
                    const cxd coef = gamma(t * 2 + c, s * 2 + b);
                    if (coef == cxd(0.0)) continue;
                    const auto& psi = set.cols[static_cast<size_t>(b)][static_cast<size_t>(k)];
                    auto& lam = lambda[static_cast<size_t>(c)];
                    for (int a = 0; a < psi.r_left; ++a)
                        lam.amp.col(a * 2 + t) += coef * psi.amp.col(a * 2 + s);
                }
}

RomState zero_state_at(const ReducedOrderModel& rom, int k) {
    RomState s;
    s.r_left = rom.left_ranks.at(static_cast<size_t>(k));
    s.r_right = rom.right_ranks.at(static_cast<size_t>(k));
    s.amp = Mat::Zero(s.r_right, 2 * s.r_left);
    return s;
}

double evaluate_from_forward(const LossProblem& p, const std::vector<ColumnSet>& sets) {
    const int n = p.steps();
    switch (p.kind) {
        case LossKind::identity_recover:
            return (raw_choi_at(sets[0], n) - choi_identity_raw()).squaredNorm();
        case LossKind::erase_recover:
            return (raw_choi_at(sets[0], n / 2) - choi_depolarizing_raw()).squaredNorm() +
                   (raw_choi_at(sets[0], n) - choi_identity_raw()).squaredNorm();
        case LossKind::echo: {
            ChoiMatrix j{raw_choi_at(sets[0], n), false};
            return -mutual_information(j.as_trace_one());
        }
        case LossKind::transfer: {
            double acc = 0.0;
            for (size_t i = 0; i < sets.size(); ++i) {
                Mat rho = sets[i].rom->reduced_system_state(
                    sets[i].cols[0][static_cast<size_t>(n)]);
                acc += (p.targets->density(static_cast<int>(i)) - rho).squaredNorm();
            }
            return acc;
        }
    }
    throw std::logic_error("loss: unknown kind");
}

}   // namespace

int LossProblem::steps() const {
    if (kind == LossKind::transfer) {
        if (transfer_roms == nullptr || transfer_roms->empty())
            throw std::invalid_argument("loss: transfer needs models");
        return transfer_roms->front().steps;
    }
    if (rom == nullptr) throw std::invalid_argument("loss: missing model");
    return rom->steps;
}

double LossProblem::evaluate(const ControlSequence& controls) const {
    check_problem(*this, controls);
    return evaluate_from_forward(*this, run_forward(*this, controls));
}

double loss_identity_recover(const ReducedOrderModel& rom, const ControlSequence& controls) {
    LossProblem p;
    p.kind = LossKind::identity_recover;
    p.rom = &rom;
    return p.evaluate(controls);
}

double loss_erase_recover(const ReducedOrderModel& rom, const ControlSequence& controls) {
    LossProblem p;
    p.kind = LossKind::erase_recover;
    p.rom = &rom;
    return p.evaluate(controls);
}

double loss_transfer(const std::vector<ReducedOrderModel>& roms, const TetrahedronStates& targets,
                     const ControlSequence& controls) {
    LossProblem p;
    p.kind = LossKind::transfer;
    p.transfer_roms = &roms;
    p.targets = &targets;
    return p.evaluate(controls);
}

double loss_echo(const ReducedOrderModel& rom, const ControlSequence& controls) {
    LossProblem p;
    p.kind = LossKind::echo;
    p.rom = &rom;
    return p.evaluate(controls);
}

std::vector<Mat> loss_gradient(const LossProblem& problem, const ControlSequence& controls) {
    return loss_and_gradient(problem, controls).gradients;
}

LossEval loss_and_gradient(const LossProblem& problem, const ControlSequence& controls) {
    check_problem(problem, controls);
    const int n = problem.steps();
    std::vector<ColumnSet> sets = run_forward(problem, controls);
    const double loss_value = evaluate_from_forward(problem, sets);
    std::vector<Mat> grads(controls.gates.size(), Mat::Zero(2, 2));

    for (size_t set_idx = 0; set_idx < sets.size(); ++set_idx) {
        const ColumnSet& set = sets[set_idx];
        const ReducedOrderModel& rom = *set.rom;
        const size_t ncols = set.cols.size();
        std::vector<RomState> lambda(ncols, zero_state_at(rom, n));

        // terminal adjoints
        switch (problem.kind) {
            case LossKind::identity_recover: {
                Mat gamma = 2.0 * (raw_choi_at(set, n) - choi_identity_raw());
                inject_choi_grad(gamma, set, n, lambda);
                break;
            }
            case LossKind::erase_recover: {
                Mat gamma = 2.0 * (raw_choi_at(set, n) - choi_identity_raw());
                inject_choi_grad(gamma, set, n, lambda);
                break;
            }
            case LossKind::echo: {
                inject_choi_grad(echo_choi_grad(raw_choi_at(set, n)), set, n, lambda);
                break;
            }
            case LossKind::transfer: {
                Mat rho = rom.reduced_system_state(set.cols[0][static_cast<size_t>(n)]);
                Mat gamma = 2.0 * (rho - problem.targets->density(static_cast<int>(set_idx)));
                const auto& psi = set.cols[0][static_cast<size_t>(n)];
                for (int t = 0; t < 2; ++t)
                    for (int s = 0; s < 2; ++s)
                        for (int a = 0; a < psi.r_left; ++a)
                            lambda[0].amp.col(a * 2 + t) += gamma(t, s) * psi.amp.col(a * 2 + s);
                break;
            }
        }

        for (int k = n - 1; k >= 0; --k) {
            const bool active = controls.active_at(k);
            for (size_t col = 0; col < ncols; ++col) {
                RomState mu = rom.apply_step_adjoint(lambda[col], k, nullptr);
                if (active) {
                    Mat& g = grads[static_cast<size_t>(k - controls.k_start)];
                    const auto& psi = set.cols[col][static_cast<size_t>(k)];
                    for (int p = 0; p < 2; ++p)
                        for (int q = 0; q < 2; ++q) {
                            cxd acc = 0.0;
                            for (int a = 0; a < psi.r_left; ++a)
                                acc += psi.amp.col(a * 2 + q).dot(mu.amp.col(a * 2 + p));
                            g(p, q) += 2.0 * acc;
                        }
                    lambda[col] =
                        ReducedOrderModel::apply_system_gate(mu, controls.gate(k).adjoint());
                } else {
                    lambda[col] = std::move(mu);
                }
            }
            if (problem.kind == LossKind::erase_recover && k == n / 2) {
                Mat gamma = 2.0 * (raw_choi_at(set, n / 2) - choi_depolarizing_raw());
                inject_choi_grad(gamma, set, n / 2, lambda);
            }
        }
    }
    return {loss_value, std::move(grads)};
}

Mat riemannian_grad(const Mat& u, const Mat& euclidean) {
    Mat inner = u.adjoint() * euclidean;
    Mat herm = 0.5 * (inner + inner.adjoint());
    return euclidean - u * herm;
}

Mat retract(const Mat& u, const Mat& step) {
    if (!step.allFinite()) throw std::invalid_argument("retract: non-finite step");
    SvdResult f = svd(u + step);
    return f.u * f.vh;
}

Mat random_unitary(std::mt19937_64& rng, int dim) {
    auto uniform = [&rng]() { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
    Mat g(dim, dim);
    for (int r = 0; r < dim; ++r)
        for (int c = 0; c < dim; ++c) {
            const double u1 = std::max(uniform(), 1e-300);
            const double u2 = uniform();
            const double mag = std::sqrt(-2.0 * std::log(u1));
            g(r, c) = cxd(mag * std::cos(6.283185307179586 * u2),
                          mag * std::sin(6.283185307179586 * u2));
        }
    SvdResult f = svd(g);
    return f.u * f.vh;
}

void OptimizerConfig::validate() const {
    if (!(learning_rate > 0)) throw std::invalid_argument("optimizer: learning_rate must be > 0");
    if (!(beta1 > 0 && beta1 < 1) || !(beta2 > 0 && beta2 < 1))
        throw std::invalid_argument("optimizer: betas must lie in (0, 1)");
    if (!(eps_adam > 0)) throw std::invalid_argument("optimizer: eps_adam must be > 0");
    if (max_iters < 1) throw std::invalid_argument("optimizer: max_iters must be >= 1");
    if (tol < 0) throw std::invalid_argument("optimizer: tol must be >= 0");
}

Mat TetrahedronStates::density(int i) const {
    Mat rho = 0.5 * Mat::Identity(2, 2);
    rho += 0.5 * (bloch[static_cast<size_t>(i)](0) * sigma_x() +
                  bloch[static_cast<size_t>(i)](1) * sigma_y() +
                  bloch[static_cast<size_t>(i)](2) * sigma_z());
    return rho;
}

TetrahedronStates TetrahedronStates::standard() {
    TetrahedronStates t;
    const double r2 = std::sqrt(2.0);
    t.bloch[0] = {0.0, 0.0, 1.0};
    t.bloch[1] = {2.0 * r2 / 3.0, 0.0, -1.0 / 3.0};
    t.bloch[2] = {-r2 / 3.0, std::sqrt(2.0 / 3.0), -1.0 / 3.0};
    t.bloch[3] = {-r2 / 3.0, -std::sqrt(2.0 / 3.0), -1.0 / 3.0};
    for (int i = 0; i < 4; ++i) {
        const auto& s = t.bloch[static_cast<size_t>(i)];
        const double theta = std::acos(std::clamp(s(2), -1.0, 1.0));
        const double phi = std::atan2(s(1), s(0));
        Vec ket(2);
        ket(0) = std::cos(theta / 2.0);
        ket(1) = std::exp(cxd(0.0, phi)) * std::sin(theta / 2.0);
        t.kets[static_cast<size_t>(i)] = ket;
    }
    return t;
}

namespace {

OptimizeResult optimize_fused(const std::function<LossEval(const ControlSequence&)>& fused,
                              ControlSequence current, const OptimizerConfig& config) {
    config.validate();
    const size_t ng = current.gates.size();

    OptimizeResult out;
    LossEval eval = fused(current);
    out.best = current;
    out.best_loss = eval.loss;
    out.history.push_back({0, eval.loss, 0.0});
    if (ng == 0) return out;

    std::vector<Mat> mom(ng, Mat::Zero(2, 2));
    std::vector<Eigen::ArrayXXd> vel(ng, Eigen::ArrayXXd::Zero(2, 2));
    std::vector<double> best_trace{out.best_loss};

    double b1p = 1.0, b2p = 1.0;
    for (int t = 1; t <= config.max_iters; ++t) {
        double grad_sq = 0.0;
        b1p *= config.beta1;
        b2p *= config.beta2;
        for (size_t i = 0; i < ng; ++i) {
            Mat r = riemannian_grad(current.gates[i], eval.gradients[i]);
            grad_sq += r.squaredNorm();
            mom[i] = config.beta1 * mom[i] + (1.0 - config.beta1) * r;
            vel[i] = config.beta2 * vel[i] + (1.0 - config.beta2) * r.array().abs2();
            Mat mhat = mom[i] / (1.0 - b1p);
            Eigen::ArrayXXd vhat = vel[i] / (1.0 - b2p);
            Mat step = -config.learning_rate *
                       (mhat.array() / (vhat.sqrt() + config.eps_adam)).matrix();
            current.gates[i] = retract(current.gates[i], riemannian_grad(current.gates[i], step));
            mom[i] = riemannian_grad(current.gates[i], mom[i]);   // transport by re-projection
        }
        eval = fused(current);
        if (!std::isfinite(eval.loss))
            throw std::runtime_error("optimize: loss became non-finite at iteration " +
                                     std::to_string(t));
        if (eval.loss < out.best_loss) {
            out.best_loss = eval.loss;
            out.best = current;
        }
        out.history.push_back({t, eval.loss, std::sqrt(grad_sq)});
        best_trace.push_back(out.best_loss);
        out.iterations = t;
        if (t >= 200) {
            const double prev = best_trace[static_cast<size_t>(t) - 200];
            const double improvement = prev - out.best_loss;
            if (improvement < config.tol * std::max(std::abs(prev), 1e-12)) break;
        }
    }
    return out;
}

}   // namespace

OptimizeResult optimize_custom(
    const std::function<double(const ControlSequence&)>& loss,
    const std::function<std::vector<Mat>(const ControlSequence&)>& grad,
    ControlSequence current, const OptimizerConfig& config) {
    return optimize_fused(
        [&loss, &grad](const ControlSequence& c) {
            return LossEval{loss(c), grad(c)};
        },
        std::move(current), config);
}

OptimizeResult optimize(const LossProblem& problem, std::pair<int, int> window,
                        const OptimizerConfig& config) {
    config.validate();
    ControlSequence init;
    init.k_start = window.first;
    init.k_stop = window.second;
    const int dn = window.second - window.first;
    if (dn < 0 || window.first < 0 || window.second > problem.steps())
        throw std::invalid_argument("optimize: window must lie inside [0, N)");
    if (config.init == OptimizerConfig::Init::identity) {
        init.gates.assign(static_cast<size_t>(dn), Mat::Identity(2, 2));
    } else {
        std::mt19937_64 rng(config.seed);
        init.gates.reserve(static_cast<size_t>(dn));
        for (int i = 0; i < dn; ++i) init.gates.push_back(random_unitary(rng));
    }
    return optimize_fused(
        [&problem](const ControlSequence& c) { return loss_and_gradient(problem, c); },
        std::move(init), config);
}

}   // namespace qrom
