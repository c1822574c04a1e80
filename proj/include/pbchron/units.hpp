#pragma once
// Shared physical constants and unit bridges. Conventions used throughout:
// activities in Bq/kg, dry bulk density in g/cm^3, depths and thicknesses in
// cm, ages in yr before coring, areal inventories in Bq/m^2.

#include <cmath>
#include <stdexcept>

namespace pbchron {

// 210Pb decay constant with its reported uncertainty.
struct DecayConstants {
  double lambda = 0.03118;     // yr^-1
  double lambda_sd = 0.00017;  // yr^-1
  double half_life = 22.23;    // yr; consistent with ln(2)/lambda within 0.01

  bool consistent() const { return std::abs(std::log(2.0) / lambda - half_life) <= 0.01; }
};

// 1 g/cm^2 of dry mass is 10 kg/m^2, so concentration [Bq/kg] times
// density*thickness [g/cm^2] picks up a factor 10 on the way to Bq/m^2.
inline constexpr double kMassAreaFactor = 10.0;

// Areal activity held by one slab.
inline double slab_areal_activity(double concentration, double density, double thickness) {
  if (!(density > 0.0)) throw std::domain_error("slab_areal_activity: density must be > 0");
  if (!(thickness > 0.0)) throw std::domain_error("slab_areal_activity: thickness must be > 0");
  return concentration * density * thickness * kMassAreaFactor;
}

}  // namespace pbchron
