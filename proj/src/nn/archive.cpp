#include "usf/nn/archive.hpp"

#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "usf/core/error.hpp"

namespace usf::nn {

namespace {

constexpr char kMagic[8] = {'U', 'S', 'F', 'L', 'A', 'B', '0', '1'};

template <typename T>
void write_pod(std::ostream& out, const T& value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) {
        throw ConfigError("archive truncated");
    }
    return value;
}

std::string read_bytes(std::istream& in, std::uint64_t n) {
    if (n > (std::uint64_t{1} << 32)) {
        throw ConfigError("archive record too large");
    }
    std::string s(static_cast<std::size_t>(n), '\0');
    in.read(s.data(), static_cast<std::streamsize>(n));
    if (!in) {
        throw ConfigError("archive truncated");
    }
    return s;
}

} // namespace

void Archive::put_matrix(const std::string& name, Eigen::MatrixXd value) {
    records_[name] = std::move(value);
}

void Archive::put_vector(const std::string& name, const Eigen::VectorXd& value) {
    records_[name] = Eigen::MatrixXd(value);
}

void Archive::put_text(const std::string& name, std::string value) {
    records_[name] = std::move(value);
}

void Archive::put_int(const std::string& name, std::int64_t value) {
    records_[name] = value;
}

const Archive::Value& Archive::at(const std::string& name) const {
    auto it = records_.find(name);
    if (it == records_.end()) {
        throw ConfigError("archive has no record '" + name + "'");
    }
    return it->second;
}

const Eigen::MatrixXd& Archive::matrix(const std::string& name) const {
    const auto* m = std::get_if<Eigen::MatrixXd>(&at(name));
    if (m == nullptr) {
        throw ConfigError("archive record '" + name + "' is not a matrix");
    }
    return *m;
}

Eigen::VectorXd Archive::vector(const std::string& name) const {
    const auto& m = matrix(name);
    if (m.cols() != 1 && m.rows() != 0) {
        throw ConfigError("archive record '" + name + "' is not a column vector");
    }
    return m.col(0);
}

const std::string& Archive::text(const std::string& name) const {
    const auto* s = std::get_if<std::string>(&at(name));
    if (s == nullptr) {
        throw ConfigError("archive record '" + name + "' is not text");
    }
    return *s;
}

std::int64_t Archive::integer(const std::string& name) const {
    const auto* i = std::get_if<std::int64_t>(&at(name));
    if (i == nullptr) {
        throw ConfigError("archive record '" + name + "' is not an integer");
    }
    return *i;
}

void Archive::write(std::ostream& out) const {
    out.write(kMagic, sizeof(kMagic));
    write_pod(out, kFormatVersion);
    write_pod(out, static_cast<std::uint64_t>(records_.size()));
    for (const auto& [name, value] : records_) {
        write_pod(out, static_cast<std::uint32_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        if (const auto* m = std::get_if<Eigen::MatrixXd>(&value)) {
            write_pod(out, 'M');
            write_pod(out, static_cast<std::uint64_t>(m->rows()));
            write_pod(out, static_cast<std::uint64_t>(m->cols()));
            for (Eigen::Index r = 0; r < m->rows(); ++r) {
                for (Eigen::Index c = 0; c < m->cols(); ++c) {
                    write_pod(out, (*m)(r, c));
                }
            }
        } else if (const auto* s = std::get_if<std::string>(&value)) {
            write_pod(out, 'S');
            write_pod(out, static_cast<std::uint64_t>(s->size()));
            out.write(s->data(), static_cast<std::streamsize>(s->size()));
        } else {
            write_pod(out, 'I');
            write_pod(out, std::get<std::int64_t>(value));
        }
    }
    if (!out) {
        throw std::runtime_error("failed writing archive");
    }
}

Archive Archive::read(std::istream& in) {
    char magic[sizeof(kMagic)];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw ConfigError("not a usf_lab archive (bad magic)");
    }
    const auto version = read_pod<std::uint32_t>(in);
    if (version != kFormatVersion) {
        throw ConfigError("unsupported archive version " + std::to_string(version));
    }
    const auto count = read_pod<std::uint64_t>(in);
    Archive archive;
    for (std::uint64_t i = 0; i < count; ++i) {
        const auto name_len = read_pod<std::uint32_t>(in);
        std::string name = read_bytes(in, name_len);
        const char tag = read_pod<char>(in);
        if (tag == 'M') {
            const auto rows = read_pod<std::uint64_t>(in);
            const auto cols = read_pod<std::uint64_t>(in);
            if (rows * cols > (std::uint64_t{1} << 31)) {
                throw ConfigError("archive matrix too large");
            }
            Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
            for (Eigen::Index r = 0; r < m.rows(); ++r) {
                for (Eigen::Index c = 0; c < m.cols(); ++c) {
                    m(r, c) = read_pod<double>(in);
                }
            }
            archive.records_[name] = std::move(m);
        } else if (tag == 'S') {
            const auto len = read_pod<std::uint64_t>(in);
            archive.records_[name] = read_bytes(in, len);
        } else if (tag == 'I') {
            archive.records_[name] = read_pod<std::int64_t>(in);
        } else {
            throw ConfigError("archive record '" + name + "' has unknown tag");
        }
    }
    return archive;
}

void Archive::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open '" + path + "' for writing");
    }
    write(out);
}

Archive Archive::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot open '" + path + "'");
    }
    return read(in);
}

void put_net(Archive& archive, const std::string& prefix, const DenseNet& net) {
    Eigen::MatrixXd shapes(static_cast<Eigen::Index>(net.layer_count()), 3);
    for (std::size_t k = 0; k < net.layer_count(); ++k) {
        const auto& s = net.shapes()[k];
        shapes(static_cast<Eigen::Index>(k), 0) = static_cast<double>(s.in);
        shapes(static_cast<Eigen::Index>(k), 1) = static_cast<double>(s.out);
        shapes(static_cast<Eigen::Index>(k), 2) = static_cast<double>(static_cast<int>(s.activation));
    }
    archive.put_matrix(prefix + ".shapes", std::move(shapes));
    archive.put_vector(prefix + ".params", net.parameters());
    archive.put_int(prefix + ".seed", static_cast<std::int64_t>(net.seed()));
}

DenseNet get_net(const Archive& archive, const std::string& prefix) {
    const auto& m = archive.matrix(prefix + ".shapes");
    if (m.cols() != 3) {
        throw ConfigError("malformed layer table for '" + prefix + "'");
    }
    std::vector<LayerShape> shapes;
    for (Eigen::Index k = 0; k < m.rows(); ++k) {
        const int act = static_cast<int>(m(k, 2));
        if (act < 0 || act > 2) {
            throw ConfigError("unknown activation code in '" + prefix + "'");
        }
        shapes.push_back({static_cast<std::size_t>(m(k, 0)), static_cast<std::size_t>(m(k, 1)),
                          static_cast<Activation>(act)});
    }
    return DenseNet(std::move(shapes), archive.vector(prefix + ".params"),
                    static_cast<std::uint64_t>(archive.integer(prefix + ".seed")));
}

void put_adam(Archive& archive, const std::string& prefix, const AdamState& state) {
    archive.put_vector(prefix + ".m", state.first_moment);
    archive.put_vector(prefix + ".v", state.second_moment);
    archive.put_int(prefix + ".t", state.step_count);
    Eigen::VectorXd hyper(3);
    hyper << state.beta1, state.beta2, state.eps;
    archive.put_vector(prefix + ".hyper", hyper);
}

AdamState get_adam(const Archive& archive, const std::string& prefix) {
    AdamState state;
    state.first_moment = archive.vector(prefix + ".m");
    state.second_moment = archive.vector(prefix + ".v");
    state.step_count = archive.integer(prefix + ".t");
    const Eigen::VectorXd hyper = archive.vector(prefix + ".hyper");
    if (hyper.size() != 3) {
        throw ConfigError("malformed optimizer record '" + prefix + "'");
    }
    state.beta1 = hyper[0];
    state.beta2 = hyper[1];
    state.eps = hyper[2];
    return state;
}

} // namespace usf::nn
