#ifndef RECURNET_MAZE_HPP
#define RECURNET_MAZE_HPP

#include <array>
#include <compare>
#include <cstdint>
#include <vector>

namespace recurnet {

struct Cell {
  int row = 0;
  int col = 0;
  auto operator<=>(const Cell&) const = default;
};

/// An opening between two orthogonally adjacent cells, stored with a < b.
struct Wall {
  Cell a;
  Cell b;
  auto operator<=>(const Wall&) const = default;
};

Wall make_wall(Cell a, Cell b);

/// Maze on an n x n cell grid described by the walls that were removed.
/// A generated maze is perfect: the removed walls form a spanning tree.
struct CellMaze {
  int n = 0;
  std::vector<Wall> removed_walls;  // sorted
  Cell start;
  Cell end;

  bool operator==(const CellMaze&) const = default;
};

using CellPath = std::vector<Cell>;

/// RGB palette of rasterized mazes.
namespace palette {
inline constexpr std::array<std::uint8_t, 3> wall{0, 0, 0};
inline constexpr std::array<std::uint8_t, 3> open{255, 255, 255};
inline constexpr std::array<std::uint8_t, 3> start{0, 255, 0};
inline constexpr std::array<std::uint8_t, 3> end{255, 0, 0};
}  // namespace palette

struct MazeSample {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> image;   // height*width*3, row-major RGB
  std::vector<std::uint8_t> target;  // height*width, 1 on the optimal path
  std::uint32_t path_length = 0;     // cells on the optimal path minus one
  std::uint64_t seed = 0;

  bool operator==(const MazeSample&) const = default;
};

/// Randomized depth-first backtracker on an n x n grid, followed by a
/// uniformly random choice of distinct start and end cells.
///
/// Draw order from SplitMix64(seed): the DFS root cell (below(n*n), row-major
/// index); at each step the next unvisited neighbour among those listed in
/// order up, down, left, right (below(count)); then start = below(n*n) and
/// end = below(n*n - 1), shifted up by one if it is >= start.
CellMaze generate_maze(int n, std::uint64_t seed);

/// Shortest start-to-end path through removed walls (Dijkstra, unit weights).
/// Throws DataError if the maze is malformed or the end is unreachable.
CellPath solve_maze(const CellMaze& maze);

/// Renders the maze into a (2n+1) x (2n+1) image and path target. Cell (i,j)
/// maps to pixel (2i+1, 2j+1); an opening between two cells opens the pixel
/// between them. Throws DataError if `path` is not a valid start-to-end walk.
MazeSample rasterize(const CellMaze& maze, const CellPath& path, std::uint64_t seed = 0);

/// Recovers the cell maze from a rasterized image.
CellMaze unrasterize(const MazeSample& sample);

/// Maze, solution and rendering for one seed.
MazeSample make_sample(int n, std::uint64_t seed);

/// Structural check: walls adjacent and in range, endpoints in range.
void validate_maze(const CellMaze& maze);

}  // namespace recurnet

#endif  // RECURNET_MAZE_HPP
