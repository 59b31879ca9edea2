#include "mimo/gnn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <json.hpp>

namespace mimo {

namespace {

constexpr char kMagic[8] = {'M', 'I', 'M', 'O', 'G', 'N', 'N', '\0'};

class Writer {
public:
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void str(const std::string& s) {
        u32(static_cast<std::uint32_t>(s.size()));
        bytes.insert(bytes.end(), s.begin(), s.end());
    }
    std::vector<std::uint8_t> bytes;
};

class Reader {
public:
    explicit Reader(const std::vector<std::uint8_t>& b) : bytes_(b) {}
    void need(std::size_t n) const {
        if (pos_ + n > bytes_.size())
            throw CheckpointError(CheckpointError::Kind::Truncated, "checkpoint truncated at byte " +
                                                                       std::to_string(bytes_.size()));
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_++]) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_++]) << (8 * i);
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string str() {
        const std::uint32_t n = u32();
        need(n);
        std::string s(bytes_.begin() + static_cast<std::ptrdiff_t>(pos_),
                      bytes_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
        pos_ += n;
        return s;
    }
    void raw(char* out, std::size_t n) {
        need(n);
        std::memcpy(out, bytes_.data() + pos_, n);
        pos_ += n;
    }
    bool at_end() const { return pos_ == bytes_.size(); }

private:
    const std::vector<std::uint8_t>& bytes_;
    std::size_t pos_ = 0;
};

std::string dims_text(const GnnDims& d) {
    return "N_u=" + std::to_string(d.message) + " N_h1=" + std::to_string(d.hidden1) +
           " N_h2=" + std::to_string(d.hidden2) + " L=" + std::to_string(d.rounds) +
           " M=" + std::to_string(d.alphabet);
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& cp) {
    Writer w;
    w.bytes.insert(w.bytes.end(), std::begin(kMagic), std::end(kMagic));
    w.u32(kCheckpointVersion);
    const GnnDims& d = cp.params.dims;
    for (int v : {d.message, d.hidden1, d.hidden2, d.rounds, d.alphabet}) w.u32(static_cast<std::uint32_t>(v));

    const TrainingMetadata& m = cp.metadata;
    w.str(m.detector_kind);
    w.u32(m.epochs);
    w.f64(m.snr_min_db);
    w.f64(m.snr_max_db);
    w.u64(m.seed);
    w.u32(m.n_rx);
    w.u32(m.qam_order);
    w.u32(static_cast<std::uint32_t>(m.k_train.size()));
    for (auto k : m.k_train) w.u32(k);

    w.u32(20);
    cp.params.for_each([&](const std::string& name, const Eigen::MatrixXd& t) {
        w.str(name);
        w.u32(static_cast<std::uint32_t>(t.rows()));
        w.u32(static_cast<std::uint32_t>(t.cols()));
        for (Eigen::Index i = 0; i < t.rows(); ++i)
            for (Eigen::Index j = 0; j < t.cols(); ++j) w.f64(t(i, j));
    });
    return std::move(w.bytes);
}

void save_params(const Checkpoint& checkpoint, const std::filesystem::path& path) {
    const auto bytes = encode_checkpoint(checkpoint);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError(CheckpointError::Kind::Io, "cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw CheckpointError(CheckpointError::Kind::Io, "write failed: " + path.string());
}

Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
    Reader r(bytes);
    char magic[8];
    r.raw(magic, sizeof magic);
    if (std::memcmp(magic, kMagic, sizeof magic) != 0)
        throw CheckpointError(CheckpointError::Kind::BadMagic, "not a GNN checkpoint (bad magic)");
    const std::uint32_t version = r.u32();
    if (version != kCheckpointVersion)
        throw CheckpointError(CheckpointError::Kind::VersionMismatch,
                              "checkpoint version " + std::to_string(version) + ", expected " +
                                  std::to_string(kCheckpointVersion));
    GnnDims d;
    d.message = static_cast<int>(r.u32());
    d.hidden1 = static_cast<int>(r.u32());
    d.hidden2 = static_cast<int>(r.u32());
    d.rounds = static_cast<int>(r.u32());
    d.alphabet = static_cast<int>(r.u32());

    Checkpoint cp;
    TrainingMetadata& m = cp.metadata;
    m.detector_kind = r.str();
    m.epochs = r.u32();
    m.snr_min_db = r.f64();
    m.snr_max_db = r.f64();
    m.seed = r.u64();
    m.n_rx = r.u32();
    m.qam_order = r.u32();
    const std::uint32_t nk = r.u32();
    if (nk > 4096) throw CheckpointError(CheckpointError::Kind::Malformed, "implausible K_train list length");
    for (std::uint32_t i = 0; i < nk; ++i) m.k_train.push_back(r.u32());

    cp.params = GnnParams::zeros(d);
    const std::uint32_t count = r.u32();
    if (count != 20)
        throw CheckpointError(CheckpointError::Kind::Malformed, "expected 20 tensors, found " + std::to_string(count));
    cp.params.for_each([&](const std::string& name, Eigen::MatrixXd& t) {
        const std::string stored = r.str();
        if (stored != name)
            throw CheckpointError(CheckpointError::Kind::Malformed, "tensor '" + stored + "' where '" + name +
                                                                        "' was expected");
        const std::uint32_t rows = r.u32();
        const std::uint32_t cols = r.u32();
        if (rows != t.rows() || cols != t.cols())
            throw CheckpointError(CheckpointError::Kind::DimensionMismatch,
                                  "tensor " + name + " has shape " + std::to_string(rows) + "x" +
                                      std::to_string(cols) + " inconsistent with header dims");
        for (Eigen::Index i = 0; i < t.rows(); ++i)
            for (Eigen::Index j = 0; j < t.cols(); ++j) t(i, j) = r.f64();
    });
    if (!r.at_end()) throw CheckpointError(CheckpointError::Kind::Malformed, "trailing bytes after last tensor");
    return cp;
}

Checkpoint load_params(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError(CheckpointError::Kind::Io, "cannot open checkpoint " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_checkpoint(bytes);
}

Checkpoint load_params(const std::filesystem::path& path, const GnnDims& expected) {
    Checkpoint cp = load_params(path);
    if (!(cp.params.dims == expected))
        throw CheckpointError(CheckpointError::Kind::DimensionMismatch,
                              "checkpoint dims (" + dims_text(cp.params.dims) + ") do not match expected (" +
                                  dims_text(expected) + ")");
    return cp;
}

void write_sidecar(const Checkpoint& cp, const std::filesystem::path& path) {
    const GnnDims& d = cp.params.dims;
    const TrainingMetadata& m = cp.metadata;
    nlohmann::json j;
    j["format_version"] = kCheckpointVersion;
    j["dims"] = {{"message", d.message}, {"hidden1", d.hidden1}, {"hidden2", d.hidden2},
                 {"rounds", d.rounds},   {"alphabet", d.alphabet}};
    j["parameter_count"] = cp.params.parameter_count();
    j["training"] = {{"detector", m.detector_kind}, {"epochs", m.epochs},     {"snr_min_db", m.snr_min_db},
                     {"snr_max_db", m.snr_max_db},  {"seed", m.seed},         {"k_train", m.k_train},
                     {"n_rx", m.n_rx},              {"qam_order", m.qam_order}};
    std::ofstream out(path);
    if (!out) throw CheckpointError(CheckpointError::Kind::Io, "cannot open " + path.string() + " for writing");
    out << j.dump(2) << '\n';
}

}  // namespace mimo
