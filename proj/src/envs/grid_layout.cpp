#include "usf/envs/grid_layout.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <set>
#include <sstream>

#include "usf/core/error.hpp"

namespace usf::envs {

std::string to_string(const Cell& cell) {
    return "(" + std::to_string(cell.x) + ", " + std::to_string(cell.y) + ")";
}

namespace {

constexpr std::array<Cell, kMoveCount> kDeltas{{{0, -1}, {1, 0}, {0, 1}, {-1, 0}}};

const char* const kFourRooms =
    "#############\n"
    "#S....#.....#\n"
    "#.....#.....#\n"
    "#...........#\n"
    "#.....#.....#\n"
    "#.....#.....#\n"
    "##.####.....#\n"
    "#.....###.###\n"
    "#.....#.....#\n"
    "#.....#.....#\n"
    "#...........#\n"
    "#.....#.....#\n"
    "#############\n";

} // namespace

GridLayout GridLayout::parse(const std::string& text) {
    std::vector<std::string> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        rows.push_back(line);
    }
    if (rows.empty()) {
        throw ConfigError("grid map is empty");
    }
    GridLayout layout;
    layout.height_ = static_cast<int>(rows.size());
    layout.width_ = static_cast<int>(rows.front().size());
    layout.walls_.assign(static_cast<std::size_t>(layout.width_ * layout.height_), 0);
    int starts = 0;
    for (int y = 0; y < layout.height_; ++y) {
        const auto& row = rows[static_cast<std::size_t>(y)];
        if (static_cast<int>(row.size()) != layout.width_) {
            throw ConfigError("grid map row " + std::to_string(y) + " has width " + std::to_string(row.size()) +
                              ", expected " + std::to_string(layout.width_));
        }
        for (int x = 0; x < layout.width_; ++x) {
            const char ch = row[static_cast<std::size_t>(x)];
            const auto pos = static_cast<std::size_t>(y * layout.width_ + x);
            switch (ch) {
            case '#':
                layout.walls_[pos] = 1;
                break;
            case '.':
            case ' ':
                break;
            case 'S':
                layout.start_ = {x, y};
                ++starts;
                break;
            default:
                throw ConfigError(std::string("unexpected map character '") + ch + "'");
            }
        }
    }
    if (starts != 1) {
        throw ConfigError("grid map needs exactly one start cell 'S', found " + std::to_string(starts));
    }
    layout.analyze();
    return layout;
}

GridLayout GridLayout::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open grid map '" + path + "'");
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse(buffer.str());
}

GridLayout GridLayout::four_rooms() {
    return parse(kFourRooms);
}

GridLayout GridLayout::open(int width, int height) {
    if (width < 1 || height < 1) {
        throw ConfigError("open grid needs positive dimensions");
    }
    std::string text;
    for (int y = 0; y < height + 2; ++y) {
        for (int x = 0; x < width + 2; ++x) {
            const bool border = x == 0 || y == 0 || x == width + 1 || y == height + 1;
            text += border ? '#' : (x == 1 && y == 1 ? 'S' : '.');
        }
        text += '\n';
    }
    return parse(text);
}

void GridLayout::set_start(Cell cell) {
    if (!is_floor(cell)) {
        throw ConfigError("start " + to_string(cell) + " is not a floor cell");
    }
    start_ = cell;
    analyze();
}

bool GridLayout::is_wall(Cell c) const {
    if (!in_bounds(c)) {
        return true;
    }
    return walls_[static_cast<std::size_t>(c.y * width_ + c.x)] != 0;
}

bool GridLayout::is_doorway(Cell c) const {
    if (!is_floor(c)) {
        return false;
    }
    return doorway_[static_cast<std::size_t>(c.y * width_ + c.x)] != 0;
}

bool GridLayout::is_passage_shape(Cell c) const {
    const bool vertical = is_wall({c.x, c.y - 1}) && is_wall({c.x, c.y + 1});
    const bool horizontal = is_wall({c.x - 1, c.y}) && is_wall({c.x + 1, c.y});
    // A dead end is walled on both axes; that is not a passage.
    return vertical != horizontal;
}

Cell GridLayout::move(Cell from, std::size_t action) const {
    if (action >= kMoveCount) {
        throw ConfigError("action " + std::to_string(action) + " out of range");
    }
    const Cell to{from.x + kDeltas[action].x, from.y + kDeltas[action].y};
    return is_floor(to) ? to : from;
}

std::optional<std::size_t> GridLayout::index_of(Cell c) const {
    if (!in_bounds(c)) {
        return std::nullopt;
    }
    const int idx = cell_index_[static_cast<std::size_t>(c.y * width_ + c.x)];
    if (idx < 0) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(idx);
}

std::size_t GridLayout::index_checked(Cell c) const {
    auto idx = index_of(c);
    if (!idx) {
        throw ConfigError(to_string(c) + " is not a floor cell");
    }
    return *idx;
}

std::optional<std::size_t> GridLayout::room_of(Cell c) const {
    if (!in_bounds(c)) {
        return std::nullopt;
    }
    const int id = room_id_[static_cast<std::size_t>(c.y * width_ + c.x)];
    if (id < 0) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(id);
}

std::vector<std::size_t> GridLayout::rooms_touching(Cell c) const {
    if (auto r = room_of(c)) {
        return {*r};
    }
    std::set<std::size_t> rooms;
    if (is_doorway(c)) {
        // Walk through chained doorway cells until rooms are hit.
        std::set<Cell> seen{c};
        std::deque<Cell> frontier{c};
        while (!frontier.empty()) {
            const Cell cur = frontier.front();
            frontier.pop_front();
            for (const auto& d : kDeltas) {
                const Cell n{cur.x + d.x, cur.y + d.y};
                if (!is_floor(n) || seen.count(n) != 0) {
                    continue;
                }
                seen.insert(n);
                if (auto r = room_of(n)) {
                    rooms.insert(*r);
                } else {
                    frontier.push_back(n);
                }
            }
        }
    }
    return {rooms.begin(), rooms.end()};
}

int GridLayout::room_distance(std::size_t from, std::size_t to) const {
    const int d = room_distance_.at(from).at(to);
    if (d < 0) {
        throw ConfigError("rooms " + std::to_string(from) + " and " + std::to_string(to) + " are not connected");
    }
    return d;
}

void GridLayout::analyze() {
    const auto n = static_cast<std::size_t>(width_ * height_);
    cells_.clear();
    cell_index_.assign(n, -1);
    for (int y = 0; y < height_; ++y) {
        for (int x = 0; x < width_; ++x) {
            if (!is_wall({x, y})) {
                cell_index_[static_cast<std::size_t>(y * width_ + x)] = static_cast<int>(cells_.size());
                cells_.push_back({x, y});
            }
        }
    }
    if (cells_.empty()) {
        throw ConfigError("grid map has no floor cells");
    }
    if (!is_floor(start_)) {
        throw ConfigError("start " + to_string(start_) + " is not a floor cell");
    }

    // Connectivity: every floor cell must be reachable from the start.
    {
        std::vector<char> seen(n, 0);
        std::deque<Cell> q{start_};
        seen[static_cast<std::size_t>(start_.y * width_ + start_.x)] = 1;
        std::size_t reached = 1;
        while (!q.empty()) {
            const Cell cur = q.front();
            q.pop_front();
            for (const auto& d : kDeltas) {
                const Cell nb{cur.x + d.x, cur.y + d.y};
                if (!is_floor(nb)) {
                    continue;
                }
                auto& s = seen[static_cast<std::size_t>(nb.y * width_ + nb.x)];
                if (s == 0) {
                    s = 1;
                    ++reached;
                    q.push_back(nb);
                }
            }
        }
        if (reached != cells_.size()) {
            throw ConfigError("grid map has " + std::to_string(cells_.size() - reached) +
                              " floor cells unreachable from the start");
        }
    }

    // Doorways start as one-cell passages; a passage that does not separate
    // two rooms (a corridor end, a 1-wide grid) is demoted to a room cell.
    doorway_.assign(n, 0);
    for (const Cell& c : cells_) {
        if (is_passage_shape(c)) {
            doorway_[static_cast<std::size_t>(c.y * width_ + c.x)] = 1;
        }
    }
    for (bool changed = true; changed;) {
        flood_rooms();
        changed = false;
        for (const Cell& c : cells_) {
            if (is_doorway(c) && rooms_touching(c).size() < 2) {
                doorway_[static_cast<std::size_t>(c.y * width_ + c.x)] = 0;
                changed = true;
            }
        }
    }

    const std::size_t rooms = room_cells_.size();
    std::vector<std::set<std::size_t>> adjacency(rooms);
    for (const Cell& c : cells_) {
        if (!is_doorway(c)) {
            continue;
        }
        const auto touching = rooms_touching(c);
        for (std::size_t a : touching) {
            for (std::size_t b : touching) {
                if (a != b) {
                    adjacency[a].insert(b);
                }
            }
        }
    }
    room_distance_.assign(rooms, std::vector<int>(rooms, -1));
    for (std::size_t src = 0; src < rooms; ++src) {
        auto& dist = room_distance_[src];
        dist[src] = 0;
        std::deque<std::size_t> q{src};
        while (!q.empty()) {
            const auto cur = q.front();
            q.pop_front();
            for (auto nb : adjacency[cur]) {
                if (dist[nb] < 0) {
                    dist[nb] = dist[cur] + 1;
                    q.push_back(nb);
                }
            }
        }
    }
}

void GridLayout::flood_rooms() {
    room_id_.assign(static_cast<std::size_t>(width_ * height_), -1);
    room_cells_.clear();
    for (const Cell& c : cells_) {
        const auto pos = static_cast<std::size_t>(c.y * width_ + c.x);
        if (room_id_[pos] >= 0 || is_doorway(c)) {
            continue;
        }
        const int id = static_cast<int>(room_cells_.size());
        room_cells_.emplace_back();
        std::deque<Cell> q{c};
        room_id_[pos] = id;
        while (!q.empty()) {
            const Cell cur = q.front();
            q.pop_front();
            room_cells_.back().push_back(cur);
            for (const auto& d : kDeltas) {
                const Cell nb{cur.x + d.x, cur.y + d.y};
                if (!is_floor(nb) || is_doorway(nb)) {
                    continue;
                }
                auto& r = room_id_[static_cast<std::size_t>(nb.y * width_ + nb.x)];
                if (r < 0) {
                    r = id;
                    q.push_back(nb);
                }
            }
        }
        std::sort(room_cells_.back().begin(), room_cells_.back().end(),
                  [](const Cell& a, const Cell& b) { return a.y != b.y ? a.y < b.y : a.x < b.x; });
    }

}

std::string GridLayout::render(std::optional<Cell> agent, std::optional<Cell> goal) const {
    std::string out;
    for (int y = 0; y < height_; ++y) {
        for (int x = 0; x < width_; ++x) {
            const Cell c{x, y};
            char ch = is_wall(c) ? '#' : '.';
            if (c == start_) {
                ch = 'S';
            }
            if (goal && *goal == c) {
                ch = 'G';
            }
            if (agent && *agent == c) {
                ch = 'A';
            }
            out += ch;
        }
        out += '\n';
    }
    return out;
}

std::string GridLayout::to_text() const {
    return render();
}

} // namespace usf::envs
