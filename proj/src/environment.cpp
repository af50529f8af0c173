#include "ascent/environment.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace ascent {

void EarthModel::check() const {
  if (!(mu > 0.0) || !(r_earth > 0.0) || !(omega >= 0.0)) {
    throw std::invalid_argument("EarthModel: mu and r_earth must be positive, omega non-negative");
  }
}

namespace {

struct Layer {
  double base;         // [m]
  double lapse;        // [K/m]
  double temperature;  // at base [K]
  double pressure;     // at base [Pa]
};

constexpr std::array<double, 7> kBases = {0.0, 11000.0, 20000.0, 32000.0, 47000.0, 51000.0, 71000.0};
constexpr std::array<double, 7> kLapse = {-6.5e-3, 0.0, 1.0e-3, 2.8e-3, 0.0, -2.8e-3, -2.0e-3};

// Pressure and temperature at h inside a layer, plus density and gradients.
AtmosphereSample evaluate_layer(const Layer& layer, double h) {
  using namespace us76;
  const double dh = h - layer.base;
  const double t = layer.temperature + layer.lapse * dh;
  double p;
  if (layer.lapse == 0.0) {
    p = layer.pressure * std::exp(-kG0 * dh / (kGasConstant * layer.temperature));
  } else {
    p = layer.pressure * std::pow(layer.temperature / t, kG0 / (kGasConstant * layer.lapse));
  }
  AtmosphereSample out;
  out.pressure = p;
  out.density = p / (kGasConstant * t);
  // Hydrostatic equilibrium holds exactly inside every layer.
  out.d_pressure_d_alt = -kG0 * out.density;
  out.d_density_d_alt = -out.density * (kG0 / (kGasConstant * t) + layer.lapse / t);
  return out;
}

struct LayerTable {
  std::array<Layer, 7> layers;
  AtmosphereSample top;  // at 86 km
  double density_scale_height;
  double pressure_scale_height;
};

LayerTable build_table() {
  using namespace us76;
  LayerTable table{};
  double t = kSeaLevelTemperature;
  double p = kSeaLevelPressure;
  for (std::size_t i = 0; i < kBases.size(); ++i) {
    table.layers[i] = Layer{kBases[i], kLapse[i], t, p};
    const double top = (i + 1 < kBases.size()) ? kBases[i + 1] : kLayerTop;
    const AtmosphereSample s = evaluate_layer(table.layers[i], top);
    t = t + kLapse[i] * (top - kBases[i]);
    p = s.pressure;
  }
  table.top = evaluate_layer(table.layers.back(), kLayerTop);
  table.density_scale_height = -table.top.density / table.top.d_density_d_alt;
  table.pressure_scale_height = -table.top.pressure / table.top.d_pressure_d_alt;
  return table;
}

const LayerTable& table() {
  static const LayerTable t = build_table();
  return t;
}

}  // namespace

AtmosphereSample atmosphere(double alt_m) {
  using namespace us76;
  const LayerTable& tab = table();
  const double h = std::max(alt_m, kLowestAltitude);
  if (h <= kLayerTop) {
    std::size_t i = tab.layers.size() - 1;
    while (i > 0 && h < tab.layers[i].base) --i;
    AtmosphereSample s = evaluate_layer(tab.layers[i], h);
    if (alt_m < kLowestAltitude) {
      s.d_density_d_alt = 0.0;
      s.d_pressure_d_alt = 0.0;
    }
    return s;
  }

  AtmosphereSample s;
  const double dh = h - kLayerTop;
  const double rho = tab.top.density * std::exp(-dh / tab.density_scale_height);
  const double p = tab.top.pressure * std::exp(-dh / tab.pressure_scale_height);
  const double rho_floor = kFloorFraction * kSeaLevelDensity;
  const double p_floor = kFloorFraction * kSeaLevelPressure;
  if (rho > rho_floor) {
    s.density = rho;
    s.d_density_d_alt = -rho / tab.density_scale_height;
  } else {
    s.density = rho_floor;
  }
  if (p > p_floor) {
    s.pressure = p;
    s.d_pressure_d_alt = -p / tab.pressure_scale_height;
  } else {
    s.pressure = p_floor;
  }
  return s;
}

Vec3 gravity_accel(const EarthModel& earth, const Vec3& r) {
  const double rn = r.norm();
  if (!(rn >= 0.1 * earth.r_earth)) {
    throw DegeneratePositionError("gravity_accel: position magnitude below 0.1 R_E");
  }
  return -earth.mu / (rn * rn * rn) * r;
}

ScaleSet ScaleSet::from_earth(const EarthModel& earth, double reference_mass) {
  ScaleSet s;
  s.length = earth.r_earth;
  s.velocity = std::sqrt(earth.mu / earth.r_earth);
  s.time = s.length / s.velocity;
  s.mass = reference_mass;
  return s;
}

State scale_state(const State& x, const ScaleSet& s) {
  return State{x.r / s.length, x.v / s.velocity, x.m / s.mass};
}

State unscale_state(const State& x, const ScaleSet& s) {
  return State{x.r * s.length, x.v * s.velocity, x.m * s.mass};
}

}  // namespace ascent
