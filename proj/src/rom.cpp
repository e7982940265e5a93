#include "qrom/rom.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

namespace qrom {

ChoiMatrix ChoiMatrix::as_trace_one() const {
    if (trace_one) return *this;
    cxd tr = data.trace();
    if (std::abs(tr) < 1e-14) throw std::invalid_argument("ChoiMatrix: vanishing trace");
    return ChoiMatrix{data / tr.real(), true};
}

Mat ChoiMatrix::output_marginal() const {
    const int d_in = 2;
    const int d_out = static_cast<int>(data.rows()) / d_in;
    Mat out = Mat::Zero(d_out, d_out);
    for (int s = 0; s < d_out; ++s)
        for (int sp = 0; sp < d_out; ++sp)
            for (int b = 0; b < d_in; ++b) out(s, sp) += data(s * d_in + b, sp * d_in + b);
    return out;
}

Mat ChoiMatrix::input_marginal() const {
    const int d_in = 2;
    const int d_out = static_cast<int>(data.rows()) / d_in;
    Mat out = Mat::Zero(d_in, d_in);
    for (int b = 0; b < d_in; ++b)
        for (int bp = 0; bp < d_in; ++bp)
            for (int s = 0; s < d_out; ++s) out(b, bp) += data(s * d_in + b, s * d_in + bp);
    return out;
}

double mutual_information(const ChoiMatrix& omega) {
    if (!omega.trace_one) throw std::invalid_argument("mutual_information: need trace-one view");
    if (std::abs(omega.data.trace().real() - 1.0) > 1e-8 ||
        std::abs(omega.data.trace().imag()) > 1e-8)
        throw std::invalid_argument("mutual_information: trace differs from one");
    auto entropy = [](const Mat& rho) {
        return vn_entropy_bits(clip_density_spectrum(eigh(rho, 1e-8).lambdas));
    };
    return entropy(omega.output_marginal()) + entropy(omega.input_marginal()) -
           entropy(omega.data);
}

RomState ReducedOrderModel::initial_state(const Vec* system_override) const {
    const Vec& psi = system_override != nullptr ? *system_override : psi_system0;
    if (psi.size() != 2) throw std::invalid_argument("initial_state: system ket must be 2-d");
    RomState s;
    s.r_left = 1;
    s.r_right = 1;
    s.amp = Mat::Zero(1, 2);
    s.amp(0, 0) = psi(0);
    s.amp(0, 1) = psi(1);
    return s;
}

namespace {

// out[a,s,b] = sum_{ij} BL_i[a,a'] (AR_j AL_i)[s,s'] BR_j[b,b'] in[a',s',b']
Mat apply_factored(const Mat& in, int rl_in, int rl_out, int rr_out,
                   const std::vector<Mat>& bl, const std::vector<Mat>& al,
                   const std::vector<Mat>& br, const std::vector<Mat>& ar, bool adjoint) {
    Mat out = Mat::Zero(static_cast<Eigen::Index>(rr_out), 2 * static_cast<Eigen::Index>(rl_out));
    Mat z(static_cast<Eigen::Index>(rr_out), 2 * static_cast<Eigen::Index>(rl_in));
    for (size_t i = 0; i < bl.size(); ++i) {
        z.setZero();
        for (size_t j = 0; j < br.size(); ++j) {
            Mat a2 = ar[j] * al[i];   // system factor for the (i, j) dyad pair
            Mat y = adjoint ? Mat(br[j].adjoint() * in) : Mat(br[j] * in);
            if (adjoint) a2.adjointInPlace();
            for (int ap = 0; ap < rl_in; ++ap)
                for (int s = 0; s < 2; ++s)
                    z.col(ap * 2 + s) += a2(s, 0) * y.col(ap * 2) + a2(s, 1) * y.col(ap * 2 + 1);
        }
        // contract the left bond: view z as (2*rr_out, rl_in) and multiply by
        // BL^T (BL^* for the adjoint step)
        Eigen::Map<const Mat> w(z.data(), 2 * static_cast<Eigen::Index>(rr_out), rl_in);
        Eigen::Map<Mat> o(out.data(), 2 * static_cast<Eigen::Index>(rr_out), rl_out);
        if (adjoint)
            o.noalias() += w * bl[i].conjugate();
        else
            o.noalias() += w * bl[i].transpose();
    }
    return out;
}

Mat apply_control(const Mat& in, int rl, const Mat& u) {
    Mat out(in.rows(), in.cols());
    for (int a = 0; a < rl; ++a)
        for (int s = 0; s < 2; ++s)
            out.col(a * 2 + s) = u(s, 0) * in.col(a * 2) + u(s, 1) * in.col(a * 2 + 1);
    return out;
}

}   // namespace

RomState ReducedOrderModel::apply_system_gate(const RomState& in, const Mat& u) {
    RomState out = in;
    out.amp = apply_control(in.amp, in.r_left, u);
    return out;
}

RomState ReducedOrderModel::apply_step(const RomState& in, int step, const Mat* control) const {
    const auto m = static_cast<size_t>(step);
    RomState out;
    out.r_left = left_ranks.at(static_cast<size_t>(step) + 1);
    out.r_right = right_ranks.at(static_cast<size_t>(step) + 1);
    Mat staged = control != nullptr ? apply_control(in.amp, in.r_left, *control) : in.amp;
    out.amp = apply_factored(staged, in.r_left, out.r_left, out.r_right, left_blocks.at(m),
                             sys_left.at(m), right_blocks.at(m), sys_right.at(m), false);
    return out;
}

RomState ReducedOrderModel::apply_step_adjoint(const RomState& in, int step,
                                               const Mat* control) const {
    const auto m = static_cast<size_t>(step);
    RomState out;
    out.r_left = left_ranks.at(static_cast<size_t>(step));
    out.r_right = right_ranks.at(static_cast<size_t>(step));
    out.amp = apply_factored(in.amp, in.r_left, out.r_left, out.r_right, left_blocks.at(m),
                             sys_left.at(m), right_blocks.at(m), sys_right.at(m), true);
    if (control != nullptr) out.amp = apply_control(out.amp, out.r_left, control->adjoint());
    return out;
}

Mat ReducedOrderModel::dense_eff_gate(int step) const {
    const auto m = static_cast<size_t>(step);
    const int rl_in = left_ranks.at(m), rr_in = right_ranks.at(m);
    const int rl_out = left_ranks.at(m + 1), rr_out = right_ranks.at(m + 1);
    Mat out = Mat::Zero(static_cast<Eigen::Index>(2) * rl_out * rr_out,
                        static_cast<Eigen::Index>(2) * rl_in * rr_in);
    for (size_t i = 0; i < left_blocks.at(m).size(); ++i)
        for (size_t j = 0; j < right_blocks.at(m).size(); ++j)
            out += kron(left_blocks[m][i],
                        kron(sys_right[m][j] * sys_left[m][i], right_blocks[m][j]));
    return out;
}

Mat ReducedOrderModel::reduced_system_state(const RomState& state) const {
    Mat rho = Mat::Zero(2, 2);
    for (int s = 0; s < 2; ++s)
        for (int sp = 0; sp < 2; ++sp)
            for (int a = 0; a < state.r_left; ++a)
                rho(s, sp) += state.amp.col(a * 2 + sp).dot(state.amp.col(a * 2 + s));
    return rho;
}

void ReducedOrderModel::validate() const {
    if (steps < 0) throw std::invalid_argument("ReducedOrderModel: negative step count");
    const auto ns = static_cast<size_t>(steps);
    if (left_ranks.size() != ns + 1 || right_ranks.size() != ns + 1 ||
        sys_left.size() != ns || sys_right.size() != ns || left_blocks.size() != ns ||
        right_blocks.size() != ns)
        throw std::invalid_argument("ReducedOrderModel: inconsistent table sizes");
    if (left_ranks[0] != 1 || right_ranks[0] != 1)
        throw std::invalid_argument("ReducedOrderModel: initial bond ranks must be one");
    for (size_t m = 0; m < ns; ++m) {
        if (sys_left[m].size() != left_blocks[m].size() ||
            sys_right[m].size() != right_blocks[m].size())
            throw std::invalid_argument("ReducedOrderModel: dyad index mismatch");
        for (const Mat& b : left_blocks[m])
            if (b.rows() != left_ranks[m + 1] || b.cols() != left_ranks[m])
                throw std::invalid_argument("ReducedOrderModel: left block shape mismatch");
        for (const Mat& b : right_blocks[m])
            if (b.rows() != right_ranks[m + 1] || b.cols() != right_ranks[m])
                throw std::invalid_argument("ReducedOrderModel: right block shape mismatch");
    }
    if (psi_system0.size() != 2 || std::abs(psi_system0.norm() - 1.0) > 1e-10)
        throw std::invalid_argument("ReducedOrderModel: system state must be a unit qubit ket");
}

ReducedOrderModel build_rom(const ChainEnvironment& env, const Vec& psi_system0) {
    ReducedOrderModel rom;
    rom.target = env.target;
    rom.steps = env.steps;
    rom.psi_system0 = psi_system0;
    const auto ns = static_cast<size_t>(env.steps);

    const std::vector<Mat> trivial_block{Mat::Ones(1, 1)};
    const std::vector<Mat> trivial_sys{Mat::Identity(2, 2)};

    if (env.left.has_value()) {
        if (env.sys_left.size() != ns || env.left->blocks.size() != ns)
            throw std::invalid_argument("build_rom: left environment table size mismatch");
        rom.left_ranks = env.left->ranks;
        rom.left_blocks = env.left->blocks;
        rom.sys_left = env.sys_left;
        rom.epsilon += env.left->epsilon;
    } else {
        rom.left_ranks.assign(ns + 1, 1);
        rom.left_blocks.assign(ns, trivial_block);
        rom.sys_left.assign(ns, trivial_sys);
    }
    if (env.right.has_value()) {
        if (env.sys_right.size() != ns || env.right->blocks.size() != ns)
            throw std::invalid_argument("build_rom: right environment table size mismatch");
        rom.right_ranks = env.right->ranks;
        rom.right_blocks = env.right->blocks;
        rom.sys_right = env.sys_right;
        rom.epsilon += env.right->epsilon;
    } else {
        rom.right_ranks.assign(ns + 1, 1);
        rom.right_blocks.assign(ns, trivial_block);
        rom.sys_right.assign(ns, trivial_sys);
    }
    for (size_t m = 0; m < ns; ++m) {
        if (rom.sys_left[m].size() != rom.left_blocks[m].size() ||
            rom.sys_right[m].size() != rom.right_blocks[m].size())
            throw std::invalid_argument("build_rom: dyad index range mismatch");
    }
    rom.validate();
    return rom;
}

namespace {

void check_controls(const ReducedOrderModel& rom, const ControlSequence* controls) {
    if (controls != nullptr) controls->validate(rom.steps);
}

}   // namespace

Trajectory propagate(const ReducedOrderModel& rom, const ControlSequence* controls) {
    check_controls(rom, controls);
    Trajectory t;
    t.rho.reserve(static_cast<size_t>(rom.steps) + 1);
    RomState state = rom.initial_state();
    const Mat sx = sigma_x(), sy = sigma_y(), sz = sigma_z();
    auto record = [&](const RomState& s) {
        Mat rho = rom.reduced_system_state(s);
        t.rho.push_back(rho);
        t.sx.push_back((sx * rho).trace().real());
        t.sy.push_back((sy * rho).trace().real());
        t.sz.push_back((sz * rho).trace().real());
        t.purity.push_back((rho * rho).trace().real());
    };
    record(state);
    for (int k = 0; k < rom.steps; ++k) {
        const Mat* u = (controls != nullptr && controls->active_at(k)) ? &controls->gate(k)
                                                                       : nullptr;
        state = rom.apply_step(state, k, u);
        record(state);
    }
    return t;
}

ChoiMatrix channel(const ReducedOrderModel& rom, const ControlSequence* controls, int k) {
    check_controls(rom, controls);
    if (k < 0 || k > rom.steps) throw std::invalid_argument("channel: step index out of range");
    std::array<RomState, 2> cols;
    for (int b = 0; b < 2; ++b) {
        Vec basis = Vec::Zero(2);
        basis(b) = 1.0;
        cols[static_cast<size_t>(b)] = rom.initial_state(&basis);
    }
    for (int step = 0; step < k; ++step) {
        const Mat* u = (controls != nullptr && controls->active_at(step)) ? &controls->gate(step)
                                                                          : nullptr;
        for (auto& c : cols) c = rom.apply_step(c, step, u);
    }
    ChoiMatrix choi;
    choi.data = Mat::Zero(4, 4);
    choi.trace_one = false;
    for (int s = 0; s < 2; ++s)
        for (int b = 0; b < 2; ++b)
            for (int sp = 0; sp < 2; ++sp)
                for (int bp = 0; bp < 2; ++bp) {
                    cxd v = 0.0;
                    const auto& psi_b = cols[static_cast<size_t>(b)];
                    const auto& psi_bp = cols[static_cast<size_t>(bp)];
                    for (int a = 0; a < psi_b.r_left; ++a)
                        v += psi_bp.amp.col(a * 2 + sp).dot(psi_b.amp.col(a * 2 + s));
                    choi.data(s * 2 + b, sp * 2 + bp) = v;
                }
    return choi;
}

}   // namespace qrom
