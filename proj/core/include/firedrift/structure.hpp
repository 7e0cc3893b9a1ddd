#pragma once

#include <array>
#include <cstdint>
#include <nlohmann/json.hpp>
#include <string>
#include <unordered_map>
#include <vector>

namespace firedrift {

// Key order is preserved everywhere we serialize so that equal inputs produce
// byte-equal files.
using Json = nlohmann::ordered_json;

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;
};

// Regular grid of identical box rooms. Rooms are indexed x-major:
// index = (ix * count_y + iy) * count_z + iz, with iz = story - 1.
struct RoomGrid {
  double room_len_x = 0.0;  // meters
  double room_len_y = 0.0;
  double room_len_z = 0.0;  // one story height
  int count_x = 0;          // rooms along each axis
  int count_y = 0;
  int count_z = 0;          // stories

  int room_count() const { return count_x * count_y * count_z; }
  double extent_x() const { return room_len_x * count_x; }
  double extent_y() const { return room_len_y * count_y; }
  double extent_z() const { return room_len_z * count_z; }
  double story_height() const { return room_len_z; }
};

int room_index_of(const RoomGrid& grid, int ix, int iy, int iz);
void room_cell_of(const RoomGrid& grid, int index, int& ix, int& iy, int& iz);
Vec3 room_center(const RoomGrid& grid, int index);

// All room centers in index order (x-major).
std::vector<Vec3> room_centers(const RoomGrid& grid);

// Lowest-index room whose closed box contains the point; coordinates are
// clamped into the grid first so slightly-outside predictions still resolve.
int containing_room(const RoomGrid& grid, double x, double y, double z);

struct StructNode {
  int id = 0;
  double x = 0.0, y = 0.0, z = 0.0;
  int h = 0;  // floor level, 0 = ground
};

enum class ElementKind { BeamX, BeamY, Column };

std::string to_string(ElementKind k);
ElementKind element_kind_from_string(const std::string& s);

struct Element {
  int id = 0;
  int node_a = 0;  // lower grid index along the element axis
  int node_b = 0;
  ElementKind kind = ElementKind::Column;
  double length = 0.0;        // meters
  int floor = 0;              // story index containing the midpoint
  double gravity_load = 0.0;  // kN/m, acting in -z
};

struct Material {
  double young_modulus_gpa = 0.0;
  double yield_strength_mpa = 0.0;
  double hardening_ratio = 0.0;  // fraction, e.g. 0.01 line
};

struct FirePoint {
  double x = 0.0, y = 0.0, z = 0.0;
  int h = 0;           // story whose span contains z
  int room_index = 0;  // room the point was sampled in
};

// Story whose vertical span contains z (spans are closed below, open above;
// z at the very top of the grid maps to the top story).
int story_of(const RoomGrid& grid, double z);

struct Structure {
  int id = 0;
  std::uint64_t seed = 0;
  RoomGrid grid;
  Material material;
  std::vector<StructNode> nodes;
  std::vector<Element> elements;
  std::vector<FirePoint> fire_points;  // filled for labeled structures
  double gravity_midr = -1.0;          // percent; < 0 until simulated

  int num_stories() const { return grid.count_z; }
};

// node id -> position in Structure::nodes
std::unordered_map<int, int> node_index(const Structure& s);

void to_json(Json& j, const RoomGrid& g);
void from_json(const Json& j, RoomGrid& g);
void to_json(Json& j, const StructNode& n);
void from_json(const Json& j, StructNode& n);
void to_json(Json& j, const Element& e);
void from_json(const Json& j, Element& e);
void to_json(Json& j, const Material& m);
void from_json(const Json& j, Material& m);
void to_json(Json& j, const FirePoint& f);
void from_json(const Json& j, FirePoint& f);
void to_json(Json& j, const Structure& s);
void from_json(const Json& j, Structure& s);

}  // namespace firedrift
