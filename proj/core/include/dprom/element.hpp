#pragma once

#include <vector>

#include "dprom/types.hpp"

namespace dprom {

enum class ElementKind { Quad8, Hex20 };

int element_nodes(ElementKind kind);
int element_dim(ElementKind kind);

// Local (reference) coordinates of the element nodes, nodes x dim. Ordering:
// corner nodes first counterclockwise (bottom face then top face for hex),
// then mid-edge nodes (quad: bottom, right, top, left; hex: bottom ring,
// top ring, then vertical edges).
const MatX& element_local_coords(ElementKind kind);

// Serendipity shape functions and their reference-coordinate derivatives at
// xi; N is nodes-long, dN is nodes x dim.
void shape_functions(ElementKind kind, const VecX& xi, VecX& N, MatX& dN);

struct GaussPoint {
  VecX xi;
  double w;
};

// Full tensor-product 3-point rule per direction (9 points for quads, 27 for
// hexes), exact for the serendipity stiffness integrands on parallelepipeds.
const std::vector<GaussPoint>& gauss_rule(ElementKind kind);

// Maps the element displacement vector (node-major, components contiguous per
// node) to the row-major flattened displacement gradient:
// theta = G u_e, with G of size dim^2 x (nodes*dim).
MatX grad_operator(const MatX& dNdx, int dim);

}  // namespace dprom
