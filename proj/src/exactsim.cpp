#include "qrom/exactsim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qrom {

namespace {

std::uint64_t insert_zero_bit(std::uint64_t value, int pos) {
    const std::uint64_t low = value & ((std::uint64_t{1} << pos) - 1);
    return ((value >> pos) << (pos + 1)) | low;
}

void check_cap(int sites, int cap) {
    if (sites > cap)
        throw std::runtime_error("exactsim: chain length exceeds the state-vector cap");
}

}   // namespace

void apply_two_site_gate(Vec& state, int total_qubits, int left_qubit, const Mat& gate4) {
    const int pb = total_qubits - 2 - left_qubit;   // bit of qubit left_qubit+1
    const int pa = pb + 1;                          // bit of qubit left_qubit
    if (pb < 0 || pa >= total_qubits) throw std::invalid_argument("apply_two_site_gate: bond");
    const std::uint64_t count = std::uint64_t{1} << (total_qubits - 2);
    const std::uint64_t ma = std::uint64_t{1} << pa;
    const std::uint64_t mb = std::uint64_t{1} << pb;
    for (std::uint64_t k = 0; k < count; ++k) {
        const std::uint64_t base = insert_zero_bit(insert_zero_bit(k, pb), pa);
        const std::uint64_t idx[4] = {base, base | mb, base | ma, base | ma | mb};
        cxd v[4];
        for (int r = 0; r < 4; ++r) v[r] = state(static_cast<Eigen::Index>(idx[r]));
        for (int r = 0; r < 4; ++r) {
            cxd acc = 0.0;
            for (int c = 0; c < 4; ++c) acc += gate4(r, c) * v[c];
            state(static_cast<Eigen::Index>(idx[r])) = acc;
        }
    }
}

void apply_single_site_gate(Vec& state, int total_qubits, int qubit, const Mat& gate2) {
    const int p = total_qubits - 1 - qubit;
    if (p < 0 || p >= total_qubits) throw std::invalid_argument("apply_single_site_gate: qubit");
    const std::uint64_t count = std::uint64_t{1} << (total_qubits - 1);
    const std::uint64_t m = std::uint64_t{1} << p;
    for (std::uint64_t k = 0; k < count; ++k) {
        const std::uint64_t i0 = insert_zero_bit(k, p);
        const std::uint64_t i1 = i0 | m;
        const cxd v0 = state(static_cast<Eigen::Index>(i0));
        const cxd v1 = state(static_cast<Eigen::Index>(i1));
        state(static_cast<Eigen::Index>(i0)) = gate2(0, 0) * v0 + gate2(0, 1) * v1;
        state(static_cast<Eigen::Index>(i1)) = gate2(1, 0) * v0 + gate2(1, 1) * v1;
    }
}

void evolve(const CircuitLayout& layout, Vec state, const ControlSequence* controls,
            const std::function<void(int, const Vec&)>& observer, int cap) {
    layout.validate();
    check_cap(layout.sites, cap);
    if (controls != nullptr) controls->validate(layout.steps);

    int total_qubits = 0;
    while ((Eigen::Index{1} << total_qubits) < state.size()) ++total_qubits;
    if ((Eigen::Index{1} << total_qubits) != state.size() || total_qubits < layout.sites)
        throw std::invalid_argument("evolve: state size must be 2^q with q >= sites");

    if (observer) observer(0, state);
    for (int k = 0; k < layout.steps; ++k) {
        if (controls != nullptr && controls->active_at(k))
            apply_single_site_gate(state, total_qubits, layout.target, controls->gate(k));
        for (int bond = 0; bond < layout.sites - 1; ++bond)
            apply_two_site_gate(state, total_qubits, bond, layout.gate(k, bond));
        if (observer) observer(k + 1, state);
    }
}

Mat reduced_density(const Vec& state, int total_qubits, const std::vector<int>& qubits) {
    const int nq = static_cast<int>(qubits.size());
    const Eigen::Index dim = Eigen::Index{1} << nq;
    std::vector<int> positions;
    positions.reserve(qubits.size());
    for (int q : qubits) positions.push_back(total_qubits - 1 - q);
    std::vector<int> sorted = positions;
    std::sort(sorted.begin(), sorted.end());

    Mat rho = Mat::Zero(dim, dim);
    const std::uint64_t rest = std::uint64_t{1} << (total_qubits - nq);
    Vec gathered(dim);
    for (std::uint64_t k = 0; k < rest; ++k) {
        std::uint64_t base = k;
        for (int p : sorted) base = insert_zero_bit(base, p);
        for (Eigen::Index sub = 0; sub < dim; ++sub) {
            std::uint64_t idx = base;
            for (int b = 0; b < nq; ++b)
                if ((sub >> (nq - 1 - b)) & 1) idx |= std::uint64_t{1} << positions[b];
            gathered(sub) = state(static_cast<Eigen::Index>(idx));
        }
        rho.noalias() += gathered * gathered.adjoint();
    }
    return rho;
}

Trajectory exact_trajectory(const CircuitLayout& layout, const Vec& psi0,
                            const ControlSequence* controls, int cap) {
    Trajectory t;
    const Mat sx = sigma_x(), sy = sigma_y(), sz = sigma_z();
    evolve(layout, psi0, controls,
           [&](int, const Vec& state) {
               Mat rho = reduced_density(state, layout.sites, {layout.target});
               t.rho.push_back(rho);
               t.sx.push_back((sx * rho).trace().real());
               t.sy.push_back((sy * rho).trace().real());
               t.sz.push_back((sz * rho).trace().real());
               t.purity.push_back((rho * rho).trace().real());
           },
           cap);
    return t;
}

namespace {

Vec ancilla_entangled_state(const CircuitLayout& layout, const std::vector<Vec>& site_states) {
    if (site_states.size() != static_cast<size_t>(layout.sites))
        throw std::invalid_argument("exactsim: need one initial ket per site");
    const int l = layout.target;
    Vec full;
    for (int b = 0; b < 2; ++b) {
        std::vector<Vec> kets = site_states;
        Vec basis = Vec::Zero(2);
        basis(b) = 1.0;
        kets[static_cast<size_t>(l)] = basis;
        kets.push_back(basis);   // ancilla, lowest-order qubit
        Vec branch = product_state(kets);
        if (b == 0)
            full = branch;
        else
            full += branch;
    }
    return full / std::sqrt(2.0);
}

ChoiMatrix choi_from_state(const Vec& state, int total_qubits, int spin_out) {
    ChoiMatrix c;
    c.data = reduced_density(state, total_qubits, {spin_out, total_qubits - 1});
    c.trace_one = true;
    return c;
}

}   // namespace

ChoiMatrix process_channel(const CircuitLayout& layout, const std::vector<Vec>& site_states,
                           int spin_out, int k, const ControlSequence* controls, int cap) {
    if (spin_out < 0 || spin_out >= layout.sites)
        throw std::invalid_argument("process_channel: output spin out of range");
    if (k < 0 || k > layout.steps)
        throw std::invalid_argument("process_channel: step index out of range");
    check_cap(layout.sites + 1, cap + 1);
    Vec state = ancilla_entangled_state(layout, site_states);
    const int total_qubits = layout.sites + 1;
    ChoiMatrix out;
    CircuitLayout clipped = layout;
    clipped.steps = k;
    ControlSequence window;
    const ControlSequence* ctrl = controls;
    if (controls != nullptr && controls->k_stop > k) {
        window = *controls;
        window.k_stop = std::min(window.k_stop, k);
        window.k_start = std::min(window.k_start, window.k_stop);
        window.gates.resize(static_cast<size_t>(window.k_stop - window.k_start));
        ctrl = &window;
    }
    evolve(clipped, std::move(state), ctrl,
           [&](int step, const Vec& s) {
               if (step == k) out = choi_from_state(s, total_qubits, spin_out);
           },
           cap + 1);
    return out;
}

InfoFlowMap info_flow(const CircuitLayout& layout, const std::vector<Vec>& site_states,
                      const ControlSequence* controls, int cap) {
    check_cap(layout.sites + 1, cap + 1);
    Vec state = ancilla_entangled_state(layout, site_states);
    const int total_qubits = layout.sites + 1;
    InfoFlowMap map;
    map.source = layout.target;
    map.values.resize(layout.sites, layout.steps + 1);
    evolve(layout, std::move(state), controls,
           [&](int step, const Vec& s) {
               for (int m = 0; m < layout.sites; ++m) {
                   ChoiMatrix omega = choi_from_state(s, total_qubits, m);
                   map.values(m, step) = mutual_information(omega);
               }
           },
           cap + 1);
    return map;
}

std::vector<double> light_cone_bound(const CircuitLayout& layout, const Vec& psi0, double delta,
                                     int cap) {
    std::vector<Mat> initial(static_cast<size_t>(layout.sites));
    std::vector<double> bound;
    bound.reserve(static_cast<size_t>(layout.steps) + 1);
    evolve(layout, psi0, nullptr,
           [&](int step, const Vec& s) {
               int cone = 0;
               for (int m = 0; m < layout.sites; ++m) {
                   Mat rho = reduced_density(s, layout.sites, {m});
                   if (step == 0) initial[static_cast<size_t>(m)] = rho;
                   RVec diff = eigh(rho - initial[static_cast<size_t>(m)], 1e-6).lambdas;
                   const double dist = 0.5 * diff.cwiseAbs().sum();
                   if (m == layout.target || dist > delta) ++cone;
               }
               bound.push_back(std::pow(2.0, cone));
           },
           cap);
    return bound;
}

InfoFlowMap average_maps(const std::vector<InfoFlowMap>& maps) {
    if (maps.empty()) throw std::invalid_argument("average_maps: empty input");
    InfoFlowMap out = maps.front();
    for (size_t i = 1; i < maps.size(); ++i) {
        if (maps[i].source != out.source || maps[i].values.rows() != out.values.rows() ||
            maps[i].values.cols() != out.values.cols())
            throw std::invalid_argument("average_maps: shape or source mismatch");
        out.values += maps[i].values;
    }
    out.values /= static_cast<double>(maps.size());
    return out;
}

}   // namespace qrom
