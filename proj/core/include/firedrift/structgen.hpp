#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "firedrift/fea.hpp"
#include "firedrift/rng.hpp"
#include "firedrift/structure.hpp"

namespace firedrift {

struct GenerationExhausted : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct StructGenConfig {
  double room_len_min = 2.0, room_len_max = 5.0;  // meters
  int count_min = 2, count_max = 7;               // rooms per axis

  double removal_fraction = 0.08;
  int max_removal_attempts = 100;

  double e0_min = 168.0, e0_max = 252.0;              // GPa
  double fy_min = 220.0, fy_max = 330.0;              // MPa
  double hardening_min = 0.008, hardening_max = 0.012;

  double column_load_min = 0.5, column_load_max = 1.0;      // kN/m
  double edge_beam_load_min = 1.5, edge_beam_load_max = 4.5;
  double interior_beam_load_min = 3.0, interior_beam_load_max = 7.5;

  double gravity_midr_limit = 1.0;  // percent, inclusive
};

// Generates a braced-free framed structure on a room grid: sampled room
// dimensions and counts, beams at every elevated floor level, columns
// between levels, then a random subset of round(removal_fraction * E)
// elements removed. A removal set that disconnects the frame or strands it
// without a ground node is re-drawn from scratch, up to
// max_removal_attempts times (then GenerationExhausted). Nodes left without
// any element are dropped. Gravity loads are sampled per element class.
Structure generate_structure(std::uint64_t seed,
                             const StructGenConfig& config = {});

// Re-rolls the per-element gravity loads of an existing structure.
void sample_gravity_loads(Structure& s, std::uint64_t seed,
                          const StructGenConfig& config = {});

// Keep the structure when its gravity-only MIDR is within the limit
// (boundary inclusive).
bool gravity_filter(const Structure& s, const SimResult& gravity_result,
                    const StructGenConfig& config = {});

// Fire scenario points, two granularities: when the structure has at most
// `n` rooms, every room receives one uniformly sampled interior point and
// the remainder is drawn from uniformly chosen rooms (with replacement);
// otherwise `n` distinct rooms are chosen and sampled once each.
std::vector<FirePoint> sample_fire_points(const Structure& s, int n,
                                          std::uint64_t seed);

// A fire point placed at the center of the given room.
FirePoint fire_point_at_room_center(const RoomGrid& grid, int room_idx);

// A fire point at arbitrary coordinates (story/room resolved from the grid).
FirePoint fire_point_at(const RoomGrid& grid, double x, double y, double z);

}  // namespace firedrift
