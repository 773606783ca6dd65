#pragma once

#include "shapeforge/mesh.hpp"
#include "shapeforge/qp.hpp"
#include "shapeforge/shape_calculus.hpp"

#include <set>
#include <vector>

namespace shapeforge {

enum class MetricKind { H1, Elasticity };

/// Bilinear form b(W, V) on the design region used to turn a shape gradient
/// into a deformation field.
struct DescentMetric {
  MetricKind kind = MetricKind::H1;
  double mass_coefficient = 0.01;  ///< weight of the L2 term
  double lame_lambda = 0.3 / (1.3 * 0.4);
  double lame_mu = 1.0 / 2.6;
  /// Exponent p of the per-element weight q^-p on the gradient term, q being
  /// the radius ratio. Distorted elements become stiffer; 0 gives the plain form.
  double quality_stiffening = 4.0;
  /// Design-region boundary markers whose nodes are clamped instead of sliding.
  std::set<int> clamped_markers;
};

/// Admissible deformations: nodes outside the closure of the design region do
/// not move, nodes on its boundary slide tangentially, the rest are free.
struct DesignConstraints {
  std::vector<char> in_design;  ///< node lies in the closure of the design region
  std::vector<char> clamped;
  std::vector<char> sliding;
  NodeArray normals;             ///< unit outward normal at sliding nodes, zero elsewhere
  std::vector<double> radius;    ///< circle radius for sliding nodes on a centered circle, else 0

  int free_dofs() const;
};

DesignConstraints design_constraints(const Mesh& mesh, const RegionMap& regions,
                                     const std::set<int>& clamped_markers = {});

/// Moves sliding nodes that sit on a centered circle back to `radius` (taken
/// from `reference`, usually the initial design). Returns nullopt if a
/// triangle inverts.
std::optional<Mesh> snap_to_circles(const Mesh& mesh, const DesignConstraints& reference);

struct DescentDirection {
  DeformationField field;
  double metric_norm = 0.0;  ///< sqrt b(W, W)
  double slope = 0.0;        ///< dJ(W)
};

/// W in the admissible space with b(W, V) = -dJ(V) for every admissible V.
DescentDirection descent_bvp(const ShapeGradient& gradient, const DescentMetric& metric, const Mesh& mesh,
                             const RegionMap& regions);

/// sqrt b(V, V) over the design region.
double metric_norm(const DeformationField& v, const DescentMetric& metric, const Mesh& mesh, const RegionMap& regions);

/// Descent QP restricted to the coordinates of the iron/air interface nodes,
/// with W . n = 0 rows for interface nodes on the design-region boundary.
struct InterfaceQp {
  std::vector<int> nodes;  ///< unknowns are (x, y) per node, interleaved
  QpProblem problem;
};

InterfaceQp build_interface_qp(const std::vector<ShapeGradient>& gradients, const Mesh& mesh,
                               const RegionMap& regions, const std::set<int>& clamped_markers = {});

/// Scatters an interface vector into a nodal field, zero elsewhere.
DeformationField interface_field(const InterfaceQp& qp, const Eigen::VectorXd& w, int num_nodes);

struct ExtensionOptions {
  /// Let design-boundary nodes without data slide tangentially instead of
  /// pinning them; the boundary curve is unchanged, only its nodes move.
  bool slide_boundary = false;
  double quality_stiffening = 0.0;  ///< element weight q^-p as in DescentMetric
  std::set<int> clamped_markers;    ///< used with slide_boundary
};

/// Componentwise Laplace extension over the design region of the values at
/// `nodes`; zero on the rest of the design-region boundary and outside it.
DeformationField harmonic_extension(const DeformationField& data, const std::vector<int>& nodes, const Mesh& mesh,
                                    const RegionMap& regions, const ExtensionOptions& options = {});

/// Carries the motion of the design-region boundary into the given fixed
/// regions by a componentwise Laplace solve, keeping their outer boundary in
/// place. Moves mesh nodes only; the region shapes are unchanged as long as
/// the boundary motion is tangential. `quality_stiffening` weights elements
/// as in DescentMetric.
DeformationField extend_mesh_motion(const DeformationField& field, const Mesh& mesh,
                                    const std::set<int>& motion_regions, double quality_stiffening = 0.0);

}  // namespace shapeforge
