#include "qrom/serialize.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace qrom {

namespace {

// Container layout (all integers little-endian, doubles raw IEEE-754 bits):
//   u32 magic "QRTN" | u32 version | u32 kind
// followed by the kind's payload. Matrices are stored as
//   u64 rows | u64 cols | rows*cols complex entries column-major,
// a complex entry as re f64 | im f64, and a block table as
//   u64 steps | per step { u32 chi | chi matrices }.
// Environment networks: epsilon f64, r_max u32, exceeds u32, degenerate u32,
// rank table, step-error table, block table, optional isometry list.
// Reduced-order models: target u32, steps u32, epsilon f64, system ket,
// left/right rank tables, then four block tables (system-side dyads and bond
// blocks per side). Control sequences: window u32 pair plus the gate list.
constexpr std::uint32_t kMagic = 0x4E54'5251;   // "QRTN"
constexpr std::uint32_t kVersion = 1;
enum class Kind : std::uint32_t { envnet = 1, rom = 2, controls = 3 };

struct Writer {
    std::vector<std::uint8_t> bytes;

    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void f64(double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof(bits));
        u64(bits);
    }
    void complex(cxd v) {
        f64(v.real());
        f64(v.imag());
    }
    void matrix(const Mat& m) {
        u64(static_cast<std::uint64_t>(m.rows()));
        u64(static_cast<std::uint64_t>(m.cols()));
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            for (Eigen::Index r = 0; r < m.rows(); ++r) complex(m(r, c));
    }
    void block_table(const std::vector<std::vector<Mat>>& table) {
        u64(table.size());
        for (const auto& row : table) {
            u32(static_cast<std::uint32_t>(row.size()));
            for (const Mat& m : row) matrix(m);
        }
    }
};

struct Reader {
    const std::vector<std::uint8_t>* bytes;
    size_t pos = 0;

    std::uint32_t u32() {
        if (pos + 4 > bytes->size()) throw std::invalid_argument("deserialize: truncated data");
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>((*bytes)[pos++]) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        if (pos + 8 > bytes->size()) throw std::invalid_argument("deserialize: truncated data");
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>((*bytes)[pos++]) << (8 * i);
        return v;
    }
    double f64() {
        std::uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, sizeof(v));
        return v;
    }
    cxd complex() {
        double re = f64();
        double im = f64();
        return {re, im};
    }
    Mat matrix() {
        auto rows = static_cast<Eigen::Index>(u64());
        auto cols = static_cast<Eigen::Index>(u64());
        if (rows < 0 || cols < 0 || rows * cols > (1LL << 32))
            throw std::invalid_argument("deserialize: implausible matrix shape");
        Mat m(rows, cols);
        for (Eigen::Index c = 0; c < cols; ++c)
            for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = complex();
        return m;
    }
    std::vector<std::vector<Mat>> block_table() {
        auto n = static_cast<size_t>(u64());
        std::vector<std::vector<Mat>> table(n);
        for (auto& row : table) {
            auto chi = static_cast<size_t>(u32());
            row.reserve(chi);
            for (size_t i = 0; i < chi; ++i) row.push_back(matrix());
        }
        return table;
    }
};

Writer begin(Kind kind) {
    Writer w;
    w.u32(kMagic);
    w.u32(kVersion);
    w.u32(static_cast<std::uint32_t>(kind));
    return w;
}

Reader open(const std::vector<std::uint8_t>& bytes, Kind kind) {
    Reader r{&bytes};
    if (r.u32() != kMagic) throw std::invalid_argument("deserialize: bad magic");
    if (r.u32() != kVersion) throw std::invalid_argument("deserialize: unsupported version");
    if (r.u32() != static_cast<std::uint32_t>(kind))
        throw std::invalid_argument("deserialize: container holds a different object kind");
    return r;
}

}   // namespace

std::vector<std::uint8_t> serialize(const EnvironmentNetwork& net) {
    Writer w = begin(Kind::envnet);
    w.f64(net.epsilon);
    w.u32(static_cast<std::uint32_t>(net.r_max));
    w.u32(net.exceeds_budget ? 1 : 0);
    w.u32(static_cast<std::uint32_t>(net.degenerate_cuts));
    w.u64(net.ranks.size());
    for (int r : net.ranks) w.u32(static_cast<std::uint32_t>(r));
    w.u64(net.step_errors.size());
    for (double e : net.step_errors) w.f64(e);
    w.block_table(net.blocks);
    w.u32(net.isometries.empty() ? 0 : 1);
    if (!net.isometries.empty()) {
        w.u64(net.isometries.size());
        for (const Mat& m : net.isometries) w.matrix(m);
    }
    return std::move(w.bytes);
}

EnvironmentNetwork deserialize_environment(const std::vector<std::uint8_t>& bytes) {
    Reader r = open(bytes, Kind::envnet);
    EnvironmentNetwork net;
    net.epsilon = r.f64();
    net.r_max = static_cast<int>(r.u32());
    net.exceeds_budget = r.u32() != 0;
    net.degenerate_cuts = static_cast<int>(r.u32());
    net.ranks.resize(r.u64());
    for (auto& v : net.ranks) v = static_cast<int>(r.u32());
    net.step_errors.resize(r.u64());
    for (auto& v : net.step_errors) v = r.f64();
    net.blocks = r.block_table();
    if (r.u32() != 0) {
        net.isometries.resize(r.u64());
        for (auto& m : net.isometries) m = r.matrix();
    }
    return net;
}

std::vector<std::uint8_t> serialize(const ReducedOrderModel& rom) {
    Writer w = begin(Kind::rom);
    w.u32(static_cast<std::uint32_t>(rom.target));
    w.u32(static_cast<std::uint32_t>(rom.steps));
    w.f64(rom.epsilon);
    w.complex(rom.psi_system0(0));
    w.complex(rom.psi_system0(1));
    auto ranks = [&w](const std::vector<int>& v) {
        w.u64(v.size());
        for (int x : v) w.u32(static_cast<std::uint32_t>(x));
    };
    ranks(rom.left_ranks);
    ranks(rom.right_ranks);
    w.block_table(rom.sys_left);
    w.block_table(rom.sys_right);
    w.block_table(rom.left_blocks);
    w.block_table(rom.right_blocks);
    return std::move(w.bytes);
}

ReducedOrderModel deserialize_rom(const std::vector<std::uint8_t>& bytes) {
    Reader r = open(bytes, Kind::rom);
    ReducedOrderModel rom;
    rom.target = static_cast<int>(r.u32());
    rom.steps = static_cast<int>(r.u32());
    rom.epsilon = r.f64();
    rom.psi_system0 = Vec(2);
    rom.psi_system0(0) = r.complex();
    rom.psi_system0(1) = r.complex();
    auto ranks = [&r]() {
        std::vector<int> v(r.u64());
        for (auto& x : v) x = static_cast<int>(r.u32());
        return v;
    };
    rom.left_ranks = ranks();
    rom.right_ranks = ranks();
    rom.sys_left = r.block_table();
    rom.sys_right = r.block_table();
    rom.left_blocks = r.block_table();
    rom.right_blocks = r.block_table();
    rom.validate();
    return rom;
}

std::vector<std::uint8_t> serialize(const ControlSequence& controls) {
    Writer w = begin(Kind::controls);
    w.u32(static_cast<std::uint32_t>(controls.k_start));
    w.u32(static_cast<std::uint32_t>(controls.k_stop));
    w.u64(controls.gates.size());
    for (const Mat& g : controls.gates) w.matrix(g);
    return std::move(w.bytes);
}

ControlSequence deserialize_controls(const std::vector<std::uint8_t>& bytes) {
    Reader r = open(bytes, Kind::controls);
    ControlSequence c;
    c.k_start = static_cast<int>(r.u32());
    c.k_stop = static_cast<int>(r.u32());
    c.gates.resize(r.u64());
    for (auto& g : c.gates) g = r.matrix();
    return c;
}

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_file: cannot open " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write_file: short write to " + path.string());
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw std::runtime_error("read_file: cannot open " + path.string());
    std::vector<std::uint8_t> bytes(static_cast<size_t>(in.tellg()));
    in.seekg(0);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!in) throw std::runtime_error("read_file: short read from " + path.string());
    return bytes;
}

std::uint64_t fnv1a(const std::vector<std::uint8_t>& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::uint8_t b : bytes) {
        h ^= b;
        h *= 0x100000001b3ull;
    }
    return h;
}

namespace {

std::ofstream open_csv(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("csv: cannot open " + path.string());
    out.precision(17);
    return out;
}

}   // namespace

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& t) {
    auto out = open_csv(path);
    out << "k,sx,sy,sz,purity\n";
    for (size_t k = 0; k < t.sx.size(); ++k)
        out << k << ',' << t.sx[k] << ',' << t.sy[k] << ',' << t.sz[k] << ',' << t.purity[k]
            << '\n';
}

void write_loss_history_csv(const std::filesystem::path& path,
                            const std::vector<HistoryEntry>& history) {
    auto out = open_csv(path);
    out << "iter,loss,grad_norm\n";
    for (const auto& h : history) out << h.iter << ',' << h.loss << ',' << h.grad_norm << '\n';
}

void write_rank_profile_csv(const std::filesystem::path& path, const std::vector<int>& left,
                            const std::vector<int>& right,
                            const std::vector<double>* cone_bound) {
    auto out = open_csv(path);
    out << "k,r_left,r_right,d_eff" << (cone_bound != nullptr ? ",cone_bound" : "") << '\n';
    for (size_t k = 0; k < left.size(); ++k) {
        out << k << ',' << left[k] << ',' << right[k] << ',' << 2 * left[k] * right[k];
        if (cone_bound != nullptr) out << ',' << (*cone_bound)[k];
        out << '\n';
    }
}

void write_info_flow_csv(const std::filesystem::path& path, const InfoFlowMap& map,
                         bool rescaled) {
    auto out = open_csv(path);
    out << "spin";
    for (Eigen::Index k = 0; k < map.values.cols(); ++k) out << ",k" << k;
    out << '\n';
    for (Eigen::Index m = 0; m < map.values.rows(); ++m) {
        out << m;
        for (Eigen::Index k = 0; k < map.values.cols(); ++k) {
            double v = map.values(m, k);
            out << ',' << (rescaled ? std::log(v + 1e-2) : v);
        }
        out << '\n';
    }
}

}   // namespace qrom
