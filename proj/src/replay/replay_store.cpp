#include "usf/replay/replay_store.hpp"

#include "usf/core/error.hpp"

namespace usf::replay {

ReplayStore::ReplayStore(std::size_t capacity) : capacity_(capacity) {
    if (capacity_ == 0) {
        throw ConfigError("replay capacity must be positive");
    }
}

void ReplayStore::store(Transition t) {
    ++insert_count_;
    if (items_.size() < capacity_) {
        items_.push_back(std::move(t));
        return;
    }
    items_[head_] = std::move(t);
    head_ = (head_ + 1) % capacity_;
}

void ReplayStore::clear() {
    items_.clear();
    head_ = 0;
}

const Transition& ReplayStore::at(std::size_t i) const {
    if (i >= items_.size()) {
        throw UsageError("replay index out of range");
    }
    return items_[(head_ + i) % items_.size()];
}

const Transition& ReplayStore::draw_one(Rng& rng) const {
    if (items_.empty()) {
        throw UsageError("cannot sample from an empty replay store");
    }
    return items_[uniform_index(rng, items_.size())];
}

Batch ReplayStore::draw(std::size_t batch, Rng& rng) const {
    if (items_.empty()) {
        throw UsageError("cannot sample from an empty replay store");
    }
    Batch out;
    out.reserve(batch);
    for (std::size_t i = 0; i < batch; ++i) {
        out.push_back(&draw_one(rng));
    }
    return out;
}

std::vector<Transition> ReplayStore::sample(std::size_t batch, Rng& rng) const {
    std::vector<Transition> out;
    for (const Transition* t : draw(batch, rng)) {
        out.push_back(*t);
    }
    return out;
}

DualStore::DualStore(std::size_t capacity, double pick_probability)
    : old_(capacity), fresh_(capacity), pick_probability_(pick_probability) {
    if (!(pick_probability >= 0.0 && pick_probability <= 1.0)) {
        throw ConfigError("pick probability must lie in [0, 1]");
    }
}

void DualStore::retire() {
    old_ = std::move(fresh_);
    fresh_ = ReplayStore(old_.capacity());
}

const Transition& DualStore::draw_one(Rng& rng) const {
    if (old_.empty() && fresh_.empty()) {
        throw UsageError("cannot sample: both replay stores are empty");
    }
    if (old_.empty()) {
        return fresh_.draw_one(rng);
    }
    if (fresh_.empty()) {
        return old_.draw_one(rng);
    }
    return bernoulli(rng, pick_probability_) ? old_.draw_one(rng) : fresh_.draw_one(rng);
}

Batch DualStore::draw(std::size_t batch, Rng& rng) const {
    if (empty()) {
        throw UsageError("cannot sample: both replay stores are empty");
    }
    Batch out;
    out.reserve(batch);
    for (std::size_t i = 0; i < batch; ++i) {
        out.push_back(&draw_one(rng));
    }
    return out;
}

std::vector<Transition> DualStore::sample(std::size_t batch, Rng& rng) const {
    std::vector<Transition> out;
    if (batch == 0) {
        return out;
    }
    for (const Transition* t : draw(batch, rng)) {
        out.push_back(*t);
    }
    return out;
}

Batch draw_mixed(const DualStore& main, const HerStore* her, std::size_t batch, Rng& rng) {
    const bool use_her = her != nullptr && !her->store.empty();
    if (!use_her) {
        return main.draw(batch, rng);
    }
    if (main.empty()) {
        return her->store.draw(batch, rng);
    }
    Batch out;
    out.reserve(batch);
    for (std::size_t i = 0; i < batch; ++i) {
        out.push_back(bernoulli(rng, her->sampling_probability) ? &her->store.draw_one(rng) : &main.draw_one(rng));
    }
    return out;
}

namespace {

Eigen::MatrixXd stack_rows(const ReplayStore& store, const Eigen::VectorXd Transition::*field) {
    const std::size_t n = store.size();
    const Eigen::Index dim = n == 0 ? 0 : (store.at(0).*field).size();
    Eigen::MatrixXd m(static_cast<Eigen::Index>(n), dim);
    for (std::size_t i = 0; i < n; ++i) {
        m.row(static_cast<Eigen::Index>(i)) = (store.at(i).*field).transpose();
    }
    return m;
}

} // namespace

void put_store(nn::Archive& archive, const std::string& prefix, const ReplayStore& store) {
    const std::size_t n = store.size();
    archive.put_int(prefix + ".capacity", static_cast<std::int64_t>(store.capacity()));
    archive.put_int(prefix + ".inserted", static_cast<std::int64_t>(store.insert_count()));
    archive.put_matrix(prefix + ".g", stack_rows(store, &Transition::g));
    archive.put_matrix(prefix + ".s", stack_rows(store, &Transition::s));
    archive.put_matrix(prefix + ".s_next", stack_rows(store, &Transition::s_next));
    Eigen::MatrixXd rg(static_cast<Eigen::Index>(n), 2);
    bool discrete = true;
    Eigen::Index adim = 1;
    if (n > 0 && std::holds_alternative<Eigen::VectorXd>(store.at(0).a)) {
        discrete = false;
        adim = std::get<Eigen::VectorXd>(store.at(0).a).size();
    }
    Eigen::MatrixXd actions(static_cast<Eigen::Index>(n), adim);
    for (std::size_t i = 0; i < n; ++i) {
        const Transition& t = store.at(i);
        const auto row = static_cast<Eigen::Index>(i);
        rg(row, 0) = t.r;
        rg(row, 1) = t.gamma;
        if (discrete) {
            actions(row, 0) = static_cast<double>(std::get<std::size_t>(t.a));
        } else {
            actions.row(row) = std::get<Eigen::VectorXd>(t.a).transpose();
        }
    }
    archive.put_matrix(prefix + ".r_gamma", rg);
    archive.put_matrix(prefix + ".a", actions);
    archive.put_text(prefix + ".action_kind", discrete ? "discrete" : "continuous");
}

ReplayStore get_store(const nn::Archive& archive, const std::string& prefix) {
    ReplayStore store(static_cast<std::size_t>(archive.integer(prefix + ".capacity")));
    const Eigen::MatrixXd& g = archive.matrix(prefix + ".g");
    const Eigen::MatrixXd& s = archive.matrix(prefix + ".s");
    const Eigen::MatrixXd& s_next = archive.matrix(prefix + ".s_next");
    const Eigen::MatrixXd& rg = archive.matrix(prefix + ".r_gamma");
    const Eigen::MatrixXd& a = archive.matrix(prefix + ".a");
    const bool discrete = archive.text(prefix + ".action_kind") == "discrete";
    const Eigen::Index n = g.rows();
    if (s.rows() != n || s_next.rows() != n || rg.rows() != n || a.rows() != n) {
        throw ConfigError("replay snapshot '" + prefix + "' has inconsistent record counts");
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        Transition t;
        t.g = g.row(i).transpose();
        t.s = s.row(i).transpose();
        t.s_next = s_next.row(i).transpose();
        t.r = rg(i, 0);
        t.gamma = rg(i, 1);
        if (discrete) {
            t.a = static_cast<std::size_t>(a(i, 0));
        } else {
            t.a = Eigen::VectorXd(a.row(i).transpose());
        }
        store.store(std::move(t));
    }
    store.insert_count_ = static_cast<std::uint64_t>(archive.integer(prefix + ".inserted"));
    return store;
}

} // namespace usf::replay
