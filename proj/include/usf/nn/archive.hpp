#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <variant>

#include <Eigen/Core>

#include "usf/nn/adam.hpp"
#include "usf/nn/dense_net.hpp"

namespace usf::nn {

/// Named-record container used for parameter checkpoints and replay
/// snapshots. Binary layout (little-endian):
///   magic "USFLAB01", u32 format version, u64 record count, then records
///   sorted by name: u32 name length, name bytes, u8 tag and payload where
///   'M' = u64 rows, u64 cols, row-major f64 values; 'S' = u64 length, bytes;
///   'I' = i64.
class Archive {
public:
    static constexpr std::uint32_t kFormatVersion = 1;

    using Value = std::variant<Eigen::MatrixXd, std::string, std::int64_t>;

    void put_matrix(const std::string& name, Eigen::MatrixXd value);
    void put_vector(const std::string& name, const Eigen::VectorXd& value);
    void put_text(const std::string& name, std::string value);
    void put_int(const std::string& name, std::int64_t value);

    bool contains(const std::string& name) const { return records_.count(name) != 0; }
    const Eigen::MatrixXd& matrix(const std::string& name) const;
    Eigen::VectorXd vector(const std::string& name) const;
    const std::string& text(const std::string& name) const;
    std::int64_t integer(const std::string& name) const;

    std::size_t size() const { return records_.size(); }

    void write(std::ostream& out) const;
    static Archive read(std::istream& in);

    void save(const std::string& path) const;
    static Archive load(const std::string& path);

private:
    const Value& at(const std::string& name) const;
    std::map<std::string, Value> records_;
};

/// Stores layer shapes, parameters and seed under `prefix`.
void put_net(Archive& archive, const std::string& prefix, const DenseNet& net);
DenseNet get_net(const Archive& archive, const std::string& prefix);

void put_adam(Archive& archive, const std::string& prefix, const AdamState& state);
AdamState get_adam(const Archive& archive, const std::string& prefix);

} // namespace usf::nn
