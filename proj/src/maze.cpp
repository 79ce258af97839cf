#include "recurnet/maze.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <queue>
#include <string>

#include "recurnet/errors.hpp"
#include "recurnet/rng.hpp"

namespace recurnet {

namespace {

constexpr std::array<Cell, 4> kSteps{{{-1, 0}, {1, 0}, {0, -1}, {0, 1}}};

bool in_grid(const Cell& c, int n) { return c.row >= 0 && c.row < n && c.col >= 0 && c.col < n; }

int index_of(const Cell& c, int n) { return c.row * n + c.col; }

std::string cell_str(const Cell& c) {
  return "(" + std::to_string(c.row) + "," + std::to_string(c.col) + ")";
}

// Adjacency lists over removed walls, indexed row-major.
std::vector<std::vector<int>> adjacency(const CellMaze& maze) {
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(maze.n * maze.n));
  for (const Wall& w : maze.removed_walls) {
    const int a = index_of(w.a, maze.n);
    const int b = index_of(w.b, maze.n);
    adj[static_cast<std::size_t>(a)].push_back(b);
    adj[static_cast<std::size_t>(b)].push_back(a);
  }
  return adj;
}

}  // namespace

Wall make_wall(Cell a, Cell b) { return a < b ? Wall{a, b} : Wall{b, a}; }

void validate_maze(const CellMaze& maze) {
  if (maze.n < 1) throw DataError("maze grid size must be positive, got " + std::to_string(maze.n));
  if (!in_grid(maze.start, maze.n) || !in_grid(maze.end, maze.n))
    throw DataError("maze endpoints " + cell_str(maze.start) + " -> " + cell_str(maze.end) +
                    " outside the " + std::to_string(maze.n) + "x" + std::to_string(maze.n) + " grid");
  for (const Wall& w : maze.removed_walls) {
    const int d = std::abs(w.a.row - w.b.row) + std::abs(w.a.col - w.b.col);
    if (!in_grid(w.a, maze.n) || !in_grid(w.b, maze.n) || d != 1)
      throw DataError("removed wall " + cell_str(w.a) + "-" + cell_str(w.b) +
                      " does not join two adjacent cells of the grid");
  }
}

CellMaze generate_maze(int n, std::uint64_t seed) {
  if (n < 1) throw DataError("maze grid size must be at least 1, got " + std::to_string(n));
  SplitMix64 rng(seed);
  const auto cells = static_cast<std::uint64_t>(n) * static_cast<std::uint64_t>(n);
  CellMaze maze;
  maze.n = n;
  maze.removed_walls.reserve(static_cast<std::size_t>(cells - 1));

  std::vector<char> visited(static_cast<std::size_t>(cells), 0);
  const auto root_index = static_cast<int>(rng.below(cells));
  const Cell root{root_index / n, root_index % n};
  std::vector<Cell> stack{root};
  visited[static_cast<std::size_t>(root_index)] = 1;
  std::array<Cell, 4> options{};
  while (!stack.empty()) {
    const Cell here = stack.back();
    int count = 0;
    for (const Cell& step : kSteps) {
      const Cell next{here.row + step.row, here.col + step.col};
      if (in_grid(next, n) && !visited[static_cast<std::size_t>(index_of(next, n))]) options[count++] = next;
    }
    if (count == 0) {
      stack.pop_back();
      continue;
    }
    const Cell chosen = options[rng.below(static_cast<std::uint64_t>(count))];
    visited[static_cast<std::size_t>(index_of(chosen, n))] = 1;
    maze.removed_walls.push_back(make_wall(here, chosen));
    stack.push_back(chosen);
  }
  std::sort(maze.removed_walls.begin(), maze.removed_walls.end());

  if (cells > 1) {
    const auto s = rng.below(cells);
    auto e = rng.below(cells - 1);
    if (e >= s) ++e;
    maze.start = {static_cast<int>(s) / n, static_cast<int>(s) % n};
    maze.end = {static_cast<int>(e) / n, static_cast<int>(e) % n};
  }
  return maze;
}

CellPath solve_maze(const CellMaze& maze) {
  validate_maze(maze);
  const int n = maze.n;
  const auto adj = adjacency(maze);
  const int source = index_of(maze.start, n);
  const int target = index_of(maze.end, n);
  constexpr int kUnreached = std::numeric_limits<int>::max();
  std::vector<int> dist(adj.size(), kUnreached);
  std::vector<int> prev(adj.size(), -1);
  using Entry = std::pair<int, int>;  // (distance, cell)
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> frontier;
  dist[static_cast<std::size_t>(source)] = 0;
  frontier.push({0, source});
  while (!frontier.empty()) {
    const auto [d, u] = frontier.top();
    frontier.pop();
    if (d != dist[static_cast<std::size_t>(u)]) continue;
    if (u == target) break;
    for (int v : adj[static_cast<std::size_t>(u)]) {
      if (d + 1 < dist[static_cast<std::size_t>(v)]) {
        dist[static_cast<std::size_t>(v)] = d + 1;
        prev[static_cast<std::size_t>(v)] = u;
        frontier.push({d + 1, v});
      }
    }
  }
  if (dist[static_cast<std::size_t>(target)] == kUnreached)
    throw DataError("maze end " + cell_str(maze.end) + " is unreachable from start " + cell_str(maze.start));
  CellPath path;
  for (int v = target; v != -1; v = prev[static_cast<std::size_t>(v)]) path.push_back({v / n, v % n});
  std::reverse(path.begin(), path.end());
  return path;
}

MazeSample rasterize(const CellMaze& maze, const CellPath& path, std::uint64_t seed) {
  validate_maze(maze);
  if (path.empty() || path.front() != maze.start || path.back() != maze.end)
    throw DataError("path does not run from the maze start to its end");
  for (std::size_t k = 1; k < path.size(); ++k) {
    const Wall w = make_wall(path[k - 1], path[k]);
    if (!std::binary_search(maze.removed_walls.begin(), maze.removed_walls.end(), w))
      throw DataError("path step " + cell_str(path[k - 1]) + " -> " + cell_str(path[k]) +
                      " crosses a wall");
  }

  MazeSample s;
  s.height = s.width = 2 * maze.n + 1;
  s.seed = seed;
  s.path_length = static_cast<std::uint32_t>(path.size() - 1);
  const auto pixels = static_cast<std::size_t>(s.height * s.width);
  s.image.assign(pixels * 3, 0);
  s.target.assign(pixels, 0);
  auto paint = [&](int r, int c, const std::array<std::uint8_t, 3>& rgb) {
    std::copy(rgb.begin(), rgb.end(), s.image.begin() + static_cast<std::ptrdiff_t>((r * s.width + c) * 3));
  };
  for (int i = 0; i < maze.n; ++i)
    for (int j = 0; j < maze.n; ++j) paint(2 * i + 1, 2 * j + 1, palette::open);
  for (const Wall& w : maze.removed_walls) paint(w.a.row + w.b.row + 1, w.a.col + w.b.col + 1, palette::open);
  paint(2 * maze.start.row + 1, 2 * maze.start.col + 1, palette::start);
  paint(2 * maze.end.row + 1, 2 * maze.end.col + 1, palette::end);

  for (std::size_t k = 0; k < path.size(); ++k) {
    s.target[static_cast<std::size_t>((2 * path[k].row + 1) * s.width + 2 * path[k].col + 1)] = 1;
    if (k > 0) {
      const int r = path[k].row + path[k - 1].row + 1;
      const int c = path[k].col + path[k - 1].col + 1;
      s.target[static_cast<std::size_t>(r * s.width + c)] = 1;
    }
  }
  return s;
}

CellMaze unrasterize(const MazeSample& sample) {
  if (sample.height != sample.width || sample.height < 3 || sample.height % 2 == 0)
    throw DataError("maze image must be square with odd side >= 3, got " + std::to_string(sample.height) +
                    "x" + std::to_string(sample.width));
  if (sample.image.size() != static_cast<std::size_t>(sample.height * sample.width * 3))
    throw DataError("maze image has " + std::to_string(sample.image.size()) + " bytes, expected " +
                    std::to_string(sample.height * sample.width * 3));
  CellMaze maze;
  maze.n = (sample.height - 1) / 2;
  auto pixel = [&](int r, int c) {
    const auto* p = &sample.image[static_cast<std::size_t>((r * sample.width + c) * 3)];
    return std::array<std::uint8_t, 3>{p[0], p[1], p[2]};
  };
  bool have_start = false, have_end = false;
  for (int i = 0; i < maze.n; ++i)
    for (int j = 0; j < maze.n; ++j) {
      const auto rgb = pixel(2 * i + 1, 2 * j + 1);
      if (rgb == palette::start) {
        maze.start = {i, j};
        have_start = true;
      }
      if (rgb == palette::end) {
        maze.end = {i, j};
        have_end = true;
      }
      if (i + 1 < maze.n && pixel(2 * i + 2, 2 * j + 1) != palette::wall)
        maze.removed_walls.push_back(make_wall({i, j}, {i + 1, j}));
      if (j + 1 < maze.n && pixel(2 * i + 1, 2 * j + 2) != palette::wall)
        maze.removed_walls.push_back(make_wall({i, j}, {i, j + 1}));
    }
  // A 1x1 maze has its single cell painted as the end, which hides the start.
  if (have_end && !have_start && maze.n == 1) {
    maze.start = maze.end;
    have_start = true;
  }
  if (!have_start || !have_end) throw DataError("maze image lacks a start or end marker");
  std::sort(maze.removed_walls.begin(), maze.removed_walls.end());
  return maze;
}

MazeSample make_sample(int n, std::uint64_t seed) {
  const CellMaze maze = generate_maze(n, seed);
  return rasterize(maze, solve_maze(maze), seed);
}

}  // namespace recurnet
