#include "firedrift/thermal.hpp"

#include <cmath>

namespace firedrift {

double rate_c(int h, int h_f) {
  if (h < 0 || h_f < 0) throw DomainError("rate_c: negative story index");
  if (h >= h_f) return 5.0 / (h - h_f + 1);
  return 2.0 / (h_f - h);
}

double arrival_t1(int h, int h_f, double plan_dist, double spatial_dist,
                  const SpreadParams& p) {
  if (h < 0 || h_f < 0) throw DomainError("arrival_t1: negative story index");
  if (plan_dist < 0.0 || spatial_dist < 0.0)
    throw DomainError("arrival_t1: negative distance");

  double beta, alpha, dist;
  if (h == h_f) {
    beta = p.beta_horizontal;
    alpha = p.alpha_horizontal;
    dist = plan_dist;
  } else if (h > h_f) {
    int d = h - h_f;
    beta = p.beta_up_base * (1.0 - std::pow(p.r_up, d)) / (1.0 - p.r_up);
    alpha = p.alpha_up;
    dist = spatial_dist;
  } else {
    int d = h_f - h;
    beta = p.beta_down_base * (1.0 - std::pow(p.r_down, d)) / (1.0 - p.r_down);
    alpha = p.alpha_down;
    dist = spatial_dist;
  }
  return beta * (1.0 - std::exp(-dist / alpha));
}

double temperature_at(double t, const TempCurve& curve,
                      const SpreadParams& params) {
  if (t < 0.0 || t > params.t_threshold)
    throw DomainError("temperature_at: time outside [0, t_threshold]");
  if (t <= curve.t1) return curve.c * t;
  return curve.c * curve.t1 + 345.0 * std::log10(8.0 * (t - curve.t1) + 1.0);
}

TempCurve element_curve(const Structure& s, const Element& e,
                        const FirePoint& fire, const SpreadParams& params) {
  auto idx = node_index(s);
  const StructNode& a = s.nodes[idx.at(e.node_a)];
  const StructNode& b = s.nodes[idx.at(e.node_b)];
  double mx = 0.5 * (a.x + b.x);
  double my = 0.5 * (a.y + b.y);
  double mz = 0.5 * (a.z + b.z);

  double plan = std::hypot(mx - fire.x, my - fire.y);
  double spatial = std::sqrt((mx - fire.x) * (mx - fire.x) +
                             (my - fire.y) * (my - fire.y) +
                             (mz - fire.z) * (mz - fire.z));
  TempCurve curve;
  curve.c = rate_c(e.floor, fire.h);
  curve.t1 = arrival_t1(e.floor, fire.h, plan, spatial, params);
  return curve;
}

std::vector<double> element_temperatures(const Structure& s,
                                         const FirePoint& fire, double t,
                                         const SpreadParams& params) {
  auto idx = node_index(s);
  std::vector<double> out;
  out.reserve(s.elements.size());
  for (const Element& e : s.elements) {
    const StructNode& a = s.nodes[idx.at(e.node_a)];
    const StructNode& b = s.nodes[idx.at(e.node_b)];
    double mx = 0.5 * (a.x + b.x);
    double my = 0.5 * (a.y + b.y);
    double mz = 0.5 * (a.z + b.z);
    double plan = std::hypot(mx - fire.x, my - fire.y);
    double spatial = std::sqrt((mx - fire.x) * (mx - fire.x) +
                               (my - fire.y) * (my - fire.y) +
                               (mz - fire.z) * (mz - fire.z));
    TempCurve curve;
    curve.c = rate_c(e.floor, fire.h);
    curve.t1 = arrival_t1(e.floor, fire.h, plan, spatial, params);
    out.push_back(temperature_at(t, curve, params));
  }
  return out;
}

}  // namespace firedrift
