#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace usf::envs {

struct Cell {
    int x = 0;  // column
    int y = 0;  // row

    bool operator==(const Cell&) const = default;
    auto operator<=>(const Cell&) const = default;
};

std::string to_string(const Cell& cell);

/// Cardinal moves; the index is the discrete action id.
enum class Move : std::size_t { up = 0, right = 1, down = 2, left = 3 };
inline constexpr std::size_t kMoveCount = 4;

/// Static floor plan parsed from a text map: `#` wall, `.` (or space) floor,
/// `S` start. Floor cells with walls on two opposite sides are doorways;
/// rooms are the connected components of the remaining floor cells.
class GridLayout {
public:
    static GridLayout parse(const std::string& text);
    static GridLayout load(const std::string& path);
    /// 13x13 four-room layout (104 floor cells, four doorways, start in the top-left room).
    static GridLayout four_rooms();
    /// Wall-bordered open grid with `width` x `height` floor cells, start at (1, 1).
    static GridLayout open(int width, int height);

    int width() const { return width_; }
    int height() const { return height_; }
    Cell start() const { return start_; }
    void set_start(Cell cell);

    bool in_bounds(Cell c) const { return c.x >= 0 && c.y >= 0 && c.x < width_ && c.y < height_; }
    bool is_wall(Cell c) const;
    bool is_floor(Cell c) const { return in_bounds(c) && !is_wall(c); }
    bool is_doorway(Cell c) const;

    /// Result of attempting a move; walls leave the agent in place.
    Cell move(Cell from, std::size_t action) const;

    /// Floor cells in row-major order; the position is the cell index.
    const std::vector<Cell>& cells() const { return cells_; }
    std::size_t cell_count() const { return cells_.size(); }
    std::optional<std::size_t> index_of(Cell c) const;
    std::size_t index_checked(Cell c) const;

    std::size_t room_count() const { return room_cells_.size(); }
    /// Room id of a non-doorway floor cell; doorways have no room.
    std::optional<std::size_t> room_of(Cell c) const;
    /// Rooms touching a floor cell (one for room cells, two for doorways).
    std::vector<std::size_t> rooms_touching(Cell c) const;
    const std::vector<Cell>& room_cells(std::size_t room) const { return room_cells_.at(room); }
    /// Shortest hop count between rooms on the doorway adjacency graph.
    int room_distance(std::size_t from, std::size_t to) const;

    std::string render(std::optional<Cell> agent = std::nullopt, std::optional<Cell> goal = std::nullopt) const;
    std::string to_text() const;

private:
    void analyze();
    void flood_rooms();
    bool is_passage_shape(Cell c) const;

    int width_ = 0;
    int height_ = 0;
    std::vector<char> walls_;
    Cell start_{};
    std::vector<Cell> cells_;
    std::vector<int> cell_index_;   // per grid position, -1 for walls
    std::vector<char> doorway_;
    std::vector<int> room_id_;      // per grid position, -1 for walls and doorways
    std::vector<std::vector<Cell>> room_cells_;
    std::vector<std::vector<int>> room_distance_;
};

} // namespace usf::envs
