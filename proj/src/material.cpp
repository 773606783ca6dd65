#include "shapeforge/material.hpp"

#include <sstream>
#include <stdexcept>

namespace shapeforge {

void Reluctivity::check_admissible(double s_max, int samples) const {
  double prev_h = -1.0;
  for (int i = 0; i <= samples; ++i) {
    const double s = s_max * static_cast<double>(i) / samples;
    const double nu = iron(s);
    if (!(nu > 0.0) || nu > air()) {
      std::ostringstream os;
      os << "iron reluctivity " << nu << " at |B| = " << s << " T is outside (0, nu0]";
      throw std::domain_error(os.str());
    }
    const double h = nu * s;
    if (i > 0 && !(h > prev_h)) {
      std::ostringstream os;
      os << "nu(s) s is not strictly increasing near |B| = " << s << " T";
      throw std::domain_error(os.str());
    }
    prev_h = h;
  }
}

CurrentExcitation excitation_from_phases(const Mesh& mesh, const RegionMap& regions, const std::map<int, int>& phase_of,
                                         const std::array<double, 3>& phase_currents, double turns) {
  std::map<int, double> area;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    if (regions.is_coil(mesh.region(t))) area[mesh.region(t)] += mesh.area(t);
  }
  CurrentExcitation out;
  for (const auto& [id, sign] : regions.coil) {
    auto ph = phase_of.find(id);
    if (ph == phase_of.end() || ph->second < 0 || ph->second > 2) {
      throw std::invalid_argument("coil region " + std::to_string(id) + " has no phase assignment");
    }
    auto a = area.find(id);
    if (a == area.end() || !(a->second > 0.0)) {
      throw std::invalid_argument("coil region " + std::to_string(id) + " has no area in the mesh");
    }
    out.density[id] = sign * turns * phase_currents[ph->second] / a->second;
  }
  return out;
}

}  // namespace shapeforge
