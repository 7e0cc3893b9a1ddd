#include "firedrift/structgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace firedrift {

namespace {

// Disjoint-set over node ids used for the post-removal connectivity check.
class UnionFind {
 public:
  int find(int x) {
    auto it = parent_.find(x);
    if (it == parent_.end()) {
      parent_[x] = x;
      return x;
    }
    int root = x;
    while (parent_[root] != root) root = parent_[root];
    while (parent_[x] != root) {
      int next = parent_[x];
      parent_[x] = root;
      x = next;
    }
    return root;
  }
  void unite(int a, int b) { parent_[find(a)] = find(b); }

 private:
  std::unordered_map<int, int> parent_;
};

struct GridLayout {
  int nx, ny, nz;  // node counts per axis
  int node_id(int i, int j, int k) const { return (k * ny + j) * nx + i; }
};

// Survivor graph must form one component that includes a ground node, so
// every member has a load path to the foundation.
bool connected_with_ground(const Structure& s,
                           const std::vector<bool>& removed) {
  UnionFind uf;
  std::unordered_map<int, bool> has_elem;
  for (std::size_t i = 0; i < s.elements.size(); ++i) {
    if (removed[i]) continue;
    const Element& e = s.elements[i];
    uf.unite(e.node_a, e.node_b);
    has_elem[e.node_a] = true;
    has_elem[e.node_b] = true;
  }
  if (has_elem.empty()) return false;

  int root = -1;
  bool ground_seen = false;
  for (const StructNode& n : s.nodes) {
    if (!has_elem.count(n.id)) continue;
    int r = uf.find(n.id);
    if (root < 0) root = r;
    if (r != root) return false;
    if (n.h == 0) ground_seen = true;
  }
  return ground_seen;
}

double load_for(const Element& e, const Structure& s,
                const std::unordered_map<int, int>& idx, Rng& rng,
                const StructGenConfig& cfg) {
  if (e.kind == ElementKind::Column)
    return rng.uniform(cfg.column_load_min, cfg.column_load_max);

  // Edge beams run along the plan perimeter.
  const StructNode& a = s.nodes[static_cast<std::size_t>(idx.at(e.node_a))];
  bool edge;
  if (e.kind == ElementKind::BeamX) {
    edge = a.y == 0.0 || a.y == s.grid.extent_y();
  } else {
    edge = a.x == 0.0 || a.x == s.grid.extent_x();
  }
  if (edge) return rng.uniform(cfg.edge_beam_load_min, cfg.edge_beam_load_max);
  return rng.uniform(cfg.interior_beam_load_min, cfg.interior_beam_load_max);
}

}  // namespace

Structure generate_structure(std::uint64_t seed,
                             const StructGenConfig& config) {
  Rng root(seed);
  Rng geo = root.split(1);
  Rng mat = root.split(2);

  Structure s;
  s.seed = seed;
  s.grid.room_len_x = geo.uniform(config.room_len_min, config.room_len_max);
  s.grid.room_len_y = geo.uniform(config.room_len_min, config.room_len_max);
  s.grid.room_len_z = geo.uniform(config.room_len_min, config.room_len_max);
  s.grid.count_x = geo.uniform_int(config.count_min, config.count_max);
  s.grid.count_y = geo.uniform_int(config.count_min, config.count_max);
  s.grid.count_z = geo.uniform_int(config.count_min, config.count_max);

  s.material.young_modulus_gpa = mat.uniform(config.e0_min, config.e0_max);
  s.material.yield_strength_mpa = mat.uniform(config.fy_min, config.fy_max);
  s.material.hardening_ratio =
      mat.uniform(config.hardening_min, config.hardening_max);

  GridLayout grid{s.grid.count_x + 1, s.grid.count_y + 1, s.grid.count_z + 1};

  std::vector<StructNode> all_nodes;
  all_nodes.reserve(static_cast<std::size_t>(grid.nx) * grid.ny * grid.nz);
  for (int k = 0; k < grid.nz; ++k)
    for (int j = 0; j < grid.ny; ++j)
      for (int i = 0; i < grid.nx; ++i)
        all_nodes.push_back({grid.node_id(i, j, k), i * s.grid.room_len_x,
                             j * s.grid.room_len_y, k * s.grid.room_len_z, k});

  std::vector<Element> all_elements;
  int eid = 0;
  // Beams exist at elevated levels only; ground-level members would connect
  // fully fixed nodes and carry nothing.
  for (int k = 1; k < grid.nz; ++k) {
    for (int j = 0; j < grid.ny; ++j)
      for (int i = 0; i + 1 < grid.nx; ++i)
        all_elements.push_back({eid++, grid.node_id(i, j, k),
                                grid.node_id(i + 1, j, k), ElementKind::BeamX,
                                s.grid.room_len_x, k, 0.0});
    for (int j = 0; j + 1 < grid.ny; ++j)
      for (int i = 0; i < grid.nx; ++i)
        all_elements.push_back({eid++, grid.node_id(i, j, k),
                                grid.node_id(i, j + 1, k), ElementKind::BeamY,
                                s.grid.room_len_y, k, 0.0});
  }
  for (int k = 0; k + 1 < grid.nz; ++k)
    for (int j = 0; j < grid.ny; ++j)
      for (int i = 0; i < grid.nx; ++i)
        all_elements.push_back({eid++, grid.node_id(i, j, k),
                                grid.node_id(i, j, k + 1), ElementKind::Column,
                                s.grid.room_len_z, k + 1, 0.0});

  s.nodes = all_nodes;
  s.elements = all_elements;

  // Remove a fixed-size random subset; re-draw wholesale if it breaks the
  // load path. A fixed count keeps the survivor fraction at its target
  // instead of drifting with per-element coin flips.
  int remove_count = static_cast<int>(
      std::llround(config.removal_fraction *
                   static_cast<double>(all_elements.size())));
  Rng removal_root = root.split(3);
  bool ok = false;
  std::vector<bool> removed;
  for (int attempt = 0; attempt < config.max_removal_attempts; ++attempt) {
    Rng draw = removal_root.split(static_cast<std::uint64_t>(attempt));
    std::vector<int> order(all_elements.size());
    std::iota(order.begin(), order.end(), 0);
    for (int i = 0; i < remove_count; ++i) {
      std::uint64_t j = draw.next_below(order.size() - i) + i;
      std::swap(order[static_cast<std::size_t>(i)],
                order[static_cast<std::size_t>(j)]);
    }
    removed.assign(all_elements.size(), false);
    for (int i = 0; i < remove_count; ++i)
      removed[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] =
          true;
    if (connected_with_ground(s, removed)) {
      ok = true;
      break;
    }
  }
  if (!ok)
    throw GenerationExhausted(
        "no connected structure found within max_removal_attempts");

  std::vector<Element> kept;
  kept.reserve(all_elements.size());
  std::unordered_map<int, bool> incident;
  for (std::size_t i = 0; i < all_elements.size(); ++i) {
    if (removed[i]) continue;
    kept.push_back(all_elements[i]);
    incident[all_elements[i].node_a] = true;
    incident[all_elements[i].node_b] = true;
  }
  s.elements = std::move(kept);
  std::vector<StructNode> used;
  used.reserve(all_nodes.size());
  for (const StructNode& n : all_nodes)
    if (incident.count(n.id)) used.push_back(n);
  s.nodes = std::move(used);

  sample_gravity_loads(s, root.split(4).seed(), config);
  return s;
}

void sample_gravity_loads(Structure& s, std::uint64_t seed,
                          const StructGenConfig& config) {
  Rng rng(seed);
  const auto idx = node_index(s);
  for (Element& e : s.elements)
    e.gravity_load = load_for(e, s, idx, rng, config);
}

bool gravity_filter(const Structure& s, const SimResult& gravity_result,
                    const StructGenConfig& config) {
  (void)s;
  return gravity_result.midr <= config.gravity_midr_limit;
}

FirePoint fire_point_at_room_center(const RoomGrid& grid, int room_idx) {
  Vec3 c = room_center(grid, room_idx);
  FirePoint f;
  f.x = c.x;
  f.y = c.y;
  f.z = c.z;
  f.h = story_of(grid, c.z);
  f.room_index = room_idx;
  return f;
}

FirePoint fire_point_at(const RoomGrid& grid, double x, double y, double z) {
  FirePoint f;
  f.x = x;
  f.y = y;
  f.z = z;
  f.h = story_of(grid, z);
  f.room_index = containing_room(grid, x, y, z);
  return f;
}

std::vector<FirePoint> sample_fire_points(const Structure& s, int n,
                                          std::uint64_t seed) {
  Rng rng(seed);
  const RoomGrid& grid = s.grid;
  int rooms = grid.room_count();

  std::vector<int> chosen;
  chosen.reserve(static_cast<std::size_t>(n));
  if (rooms <= n) {
    for (int r = 0; r < rooms; ++r) chosen.push_back(r);
    for (int i = rooms; i < n; ++i)
      chosen.push_back(static_cast<int>(
          rng.next_below(static_cast<std::uint64_t>(rooms))));
  } else {
    // Partial Fisher-Yates: n distinct rooms.
    std::vector<int> order(static_cast<std::size_t>(rooms));
    std::iota(order.begin(), order.end(), 0);
    for (int i = 0; i < n; ++i) {
      std::uint64_t j = rng.next_below(static_cast<std::uint64_t>(rooms - i)) +
                        static_cast<std::uint64_t>(i);
      std::swap(order[static_cast<std::size_t>(i)],
                order[static_cast<std::size_t>(j)]);
    }
    chosen.assign(order.begin(), order.begin() + n);
  }

  std::vector<FirePoint> out;
  out.reserve(chosen.size());
  for (int room : chosen) {
    int ix, iy, iz;
    room_cell_of(grid, room, ix, iy, iz);
    FirePoint f;
    f.x = rng.uniform(ix * grid.room_len_x, (ix + 1) * grid.room_len_x);
    f.y = rng.uniform(iy * grid.room_len_y, (iy + 1) * grid.room_len_y);
    f.z = rng.uniform(iz * grid.room_len_z, (iz + 1) * grid.room_len_z);
    f.h = iz + 1;
    f.room_index = room;
    out.push_back(f);
  }
  return out;
}

}  // namespace firedrift
