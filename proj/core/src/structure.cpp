#include "firedrift/structure.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace firedrift {

int room_index_of(const RoomGrid& grid, int ix, int iy, int iz) {
  return (ix * grid.count_y + iy) * grid.count_z + iz;
}

void room_cell_of(const RoomGrid& grid, int index, int& ix, int& iy, int& iz) {
  iz = index % grid.count_z;
  int rest = index / grid.count_z;
  iy = rest % grid.count_y;
  ix = rest / grid.count_y;
}

Vec3 room_center(const RoomGrid& grid, int index) {
  int ix, iy, iz;
  room_cell_of(grid, index, ix, iy, iz);
  return {(ix + 0.5) * grid.room_len_x, (iy + 0.5) * grid.room_len_y,
          (iz + 0.5) * grid.room_len_z};
}

std::vector<Vec3> room_centers(const RoomGrid& grid) {
  std::vector<Vec3> out;
  out.reserve(grid.room_count());
  for (int i = 0; i < grid.room_count(); ++i) out.push_back(room_center(grid, i));
  return out;
}

namespace {

// Cell index along one axis; a point exactly on an interior boundary belongs
// to the lower cell so the containing room is the lowest-index one.
int axis_cell(double v, double len, int count) {
  double clamped = std::clamp(v, 0.0, len * count);
  int c = static_cast<int>(std::floor(clamped / len));
  c = std::clamp(c, 0, count - 1);
  if (c > 0 && clamped <= c * len) --c;
  return c;
}

}  // namespace

int containing_room(const RoomGrid& grid, double x, double y, double z) {
  int ix = axis_cell(x, grid.room_len_x, grid.count_x);
  int iy = axis_cell(y, grid.room_len_y, grid.count_y);
  int iz = axis_cell(z, grid.room_len_z, grid.count_z);
  return room_index_of(grid, ix, iy, iz);
}

int story_of(const RoomGrid& grid, double z) {
  double h = grid.story_height();
  int s = static_cast<int>(std::floor(z / h)) + 1;
  return std::clamp(s, 1, grid.count_z);
}

std::string to_string(ElementKind k) {
  switch (k) {
    case ElementKind::BeamX: return "beam_x";
    case ElementKind::BeamY: return "beam_y";
    case ElementKind::Column: return "column";
  }
  return "column";
}

ElementKind element_kind_from_string(const std::string& s) {
  if (s == "beam_x") return ElementKind::BeamX;
  if (s == "beam_y") return ElementKind::BeamY;
  if (s == "column") return ElementKind::Column;
  throw std::invalid_argument("unknown element kind: " + s);
}

std::unordered_map<int, int> node_index(const Structure& s) {
  std::unordered_map<int, int> idx;
  idx.reserve(s.nodes.size());
  for (std::size_t i = 0; i < s.nodes.size(); ++i)
    idx.emplace(s.nodes[i].id, static_cast<int>(i));
  return idx;
}

void to_json(Json& j, const RoomGrid& g) {
  j = Json{{"room_len_x", g.room_len_x}, {"room_len_y", g.room_len_y},
           {"room_len_z", g.room_len_z}, {"count_x", g.count_x},
           {"count_y", g.count_y},       {"count_z", g.count_z}};
}

void from_json(const Json& j, RoomGrid& g) {
  j.at("room_len_x").get_to(g.room_len_x);
  j.at("room_len_y").get_to(g.room_len_y);
  j.at("room_len_z").get_to(g.room_len_z);
  j.at("count_x").get_to(g.count_x);
  j.at("count_y").get_to(g.count_y);
  j.at("count_z").get_to(g.count_z);
}

void to_json(Json& j, const StructNode& n) {
  j = Json{{"id", n.id}, {"x", n.x}, {"y", n.y}, {"z", n.z}, {"h", n.h}};
}

void from_json(const Json& j, StructNode& n) {
  j.at("id").get_to(n.id);
  j.at("x").get_to(n.x);
  j.at("y").get_to(n.y);
  j.at("z").get_to(n.z);
  j.at("h").get_to(n.h);
}

void to_json(Json& j, const Element& e) {
  j = Json{{"id", e.id},
           {"node_a", e.node_a},
           {"node_b", e.node_b},
           {"kind", to_string(e.kind)},
           {"length", e.length},
           {"floor", e.floor},
           {"gravity_load", e.gravity_load}};
}

void from_json(const Json& j, Element& e) {
  j.at("id").get_to(e.id);
  j.at("node_a").get_to(e.node_a);
  j.at("node_b").get_to(e.node_b);
  e.kind = element_kind_from_string(j.at("kind").get<std::string>());
  j.at("length").get_to(e.length);
  j.at("floor").get_to(e.floor);
  j.at("gravity_load").get_to(e.gravity_load);
}

void to_json(Json& j, const Material& m) {
  j = Json{{"young_modulus_gpa", m.young_modulus_gpa},
           {"yield_strength_mpa", m.yield_strength_mpa},
           {"hardening_ratio", m.hardening_ratio}};
}

void from_json(const Json& j, Material& m) {
  j.at("young_modulus_gpa").get_to(m.young_modulus_gpa);
  j.at("yield_strength_mpa").get_to(m.yield_strength_mpa);
  j.at("hardening_ratio").get_to(m.hardening_ratio);
}

void to_json(Json& j, const FirePoint& f) {
  j = Json{{"x", f.x}, {"y", f.y}, {"z", f.z}, {"h", f.h},
           {"room_index", f.room_index}};
}

void from_json(const Json& j, FirePoint& f) {
  j.at("x").get_to(f.x);
  j.at("y").get_to(f.y);
  j.at("z").get_to(f.z);
  j.at("h").get_to(f.h);
  j.at("room_index").get_to(f.room_index);
}

void to_json(Json& j, const Structure& s) {
  j = Json{{"id", s.id},
           {"seed", s.seed},
           {"grid", s.grid},
           {"material", s.material},
           {"gravity_midr", s.gravity_midr},
           {"nodes", s.nodes},
           {"elements", s.elements},
           {"fire_points", s.fire_points}};
}

void from_json(const Json& j, Structure& s) {
  j.at("id").get_to(s.id);
  j.at("seed").get_to(s.seed);
  j.at("grid").get_to(s.grid);
  j.at("material").get_to(s.material);
  j.at("gravity_midr").get_to(s.gravity_midr);
  j.at("nodes").get_to(s.nodes);
  j.at("elements").get_to(s.elements);
  j.at("fire_points").get_to(s.fire_points);
}

}  // namespace firedrift
