#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace resochain {

/// Physical properties of one mass-in-a-mass unit.
struct DimensionalUnit {
  double m1 = 1.0;  ///< main resonator mass
  double m2 = 1.0;  ///< internal resonator mass
  double k1 = 1.0;  ///< main-chain linear stiffness
  double k2 = 1.0;  ///< internal linear stiffness
  double kn = 0.0;  ///< internal cubic stiffness
  double c1 = 0.0;  ///< main-chain viscous damping
  double c2 = 0.0;  ///< internal viscous damping
  double L = 1.0;   ///< spacing between adjacent units
};

/// Nondimensional unit properties. Time is measured in 1/omega1 with
/// omega1 = sqrt(k1/m1) and displacements in units of L.
struct NondimUnit {
  double alpha = 0.5;    ///< k2/k1
  double epsilon = 0.5;  ///< m2/m1
  double eta = 0.0;      ///< kn L^2 / (m1 omega1^2)
  double xi1 = 0.0;      ///< c1 / (m1 omega1)
  double xi2 = 0.0;      ///< c2 / (m1 omega1)

  void validate() const;
  friend bool operator==(const NondimUnit&, const NondimUnit&) = default;
};

NondimUnit nondimensionalize(const DimensionalUnit& unit);

/// omega1 = sqrt(k1/m1), the reference frequency of the nondimensional time.
double reference_frequency(const DimensionalUnit& unit);

/// Ordered chain of N >= 2 units. Unit 1's main resonator is the driven DOF,
/// unit N has a free right end.
class ChainSpec {
 public:
  explicit ChainSpec(std::vector<NondimUnit> units);
  static ChainSpec uniform(const NondimUnit& unit, std::size_t n_units);

  std::size_t size() const { return units_.size(); }
  const NondimUnit& operator[](std::size_t i) const { return units_[i]; }
  const std::vector<NondimUnit>& units() const { return units_; }
  bool undamped() const;

 private:
  std::vector<NondimUnit> units_;
};

/// Displacements and velocities of every DOF. Index 0 of v1/v1dot is the
/// driven main resonator of unit 1.
struct ChainState {
  double tau = 0.0;
  std::vector<double> v1, v2, v1dot, v2dot;

  static ChainState zeros(std::size_t n_units);
};

/// Imposed motion of the driven main resonator.
struct PrescribedMotion {
  double displacement = 0.0;
  double velocity = 0.0;
  std::size_t index = 0;
};

struct Accelerations {
  std::vector<double> a1, a2;
};

/// Right-hand side of the nondimensional equations of motion. The entry of
/// a1 at the driven index is zero; its motion is imposed, not integrated.
Accelerations eom_rhs(const ChainSpec& chain, const ChainState& state,
                      const PrescribedMotion& prescribed);

/// Allocation-free kernel behind eom_rhs. v1[0] and v1dot[0] must already
/// hold the prescribed motion.
void accelerations_into(const ChainSpec& chain, std::span<const double> v1,
                        std::span<const double> v2,
                        std::span<const double> v1dot,
                        std::span<const double> v2dot, std::span<double> a1,
                        std::span<double> a2);

/// Kinetic + quadratic + quartic potential energy. The driven DOF contributes
/// through its springs only.
double total_energy(const ChainSpec& chain, std::span<const double> v1,
                    std::span<const double> v2, std::span<const double> v1dot,
                    std::span<const double> v2dot);

}  // namespace resochain
