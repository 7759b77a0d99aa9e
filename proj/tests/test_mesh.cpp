#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <random>

#include "dprom/defects.hpp"
#include "dprom/mesh.hpp"

using namespace dprom;

namespace {

const MaterialParams kAl{70e9, 0.30, 2700.0};

double mesh_volume(const NominalMesh& mesh) {
  double v = 0.0;
  for (const auto& pts : build_quadrature(mesh).elems)
    for (const auto& p : pts) v += p.w;
  return v;
}

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST(BeamMesh, CountsAndClamping) {
  // 40 x 2 serendipity quads: (2*40+1)*(2*2+1) grid minus the 40*2 interior
  // centers gives 325 nodes. Both end faces carry 5 nodes each, so 20 dofs
  // are eliminated and 630 remain free.
  const NominalMesh m = build_rect_beam_mesh(2.0, 0.05, 40, 2, kAl, 0.2);
  EXPECT_EQ(m.dim, 2);
  EXPECT_EQ(m.n_nodes(), 325);
  EXPECT_EQ(m.n_elems(), 80);
  EXPECT_EQ(m.n_dofs(), 650);
  EXPECT_EQ(static_cast<int>(m.fixed_dofs.size()), 20);
  EXPECT_EQ(m.n_free(), 630);
  // Every fixed dof must sit on x = 0 or x = lx.
  for (int dof : m.fixed_dofs) {
    const double x = m.nodes(dof / 2, 0);
    EXPECT_TRUE(x == 0.0 || x == 2.0);
  }
  // The free-dof maps must be mutually inverse.
  for (int f = 0; f < m.n_free(); ++f)
    EXPECT_EQ(m.free_of_dof[m.dof_of_free[f]], f);
}

TEST(BeamMesh, QuadratureRecoversVolume) {
  // The quadrature weights absorb det(J) and the out-of-plane width, so the
  // weight total must equal lx * ty * wz.
  const NominalMesh m = build_rect_beam_mesh(2.0, 0.05, 10, 2, kAl, 0.2);
  EXPECT_NEAR(mesh_volume(m), 2.0 * 0.05 * 0.2, 1e-12);
}

TEST(BoxComposer, MergesCoincidentFaces) {
  // Two unit-lattice boxes sharing one face: the shared 8 corner/edge nodes
  // appear once. A single hex20 has 20 nodes, two merged share a quad8 face.
  std::vector<BoxSpec> boxes(2);
  boxes[0].origin = Vec3(0, 0, 0);
  boxes[1].origin = Vec3(1, 0, 0);
  const NominalMesh m = build_hex20_boxes(
      boxes, kAl, [](const VecX&) { return false; });
  EXPECT_EQ(m.n_elems(), 2);
  EXPECT_EQ(m.n_nodes(), 2 * 20 - 8);
  EXPECT_NEAR(mesh_volume(m), 2.0, 1e-12);
}

TEST(GyroMesh, GeometryAndSymmetry) {
  const GyroPlateParams gp;
  const NominalMesh m = build_gyro_plate(gp, MaterialParams{160e9, 0.22, 2330});
  EXPECT_EQ(m.dim, 3);
  // Plate 4x4x1 elements plus four 2x2x1 legs.
  EXPECT_EQ(m.n_elems(), 16 + 4 * 4);
  // Clamped at the outer leg faces only.
  EXPECT_GT(m.fixed_dofs.size(), 0u);
  for (int dof : m.fixed_dofs) {
    const auto row = m.nodes.row(dof / 3);
    const double lo = -gp.leg_length, hi = gp.plate_side + gp.leg_length;
    EXPECT_TRUE(row(0) == lo || row(0) == hi || row(1) == lo || row(1) == hi)
        << row;
  }
  // Volume: plate plus four legs.
  const double plate = gp.plate_side * gp.plate_side * gp.plate_thick;
  const double leg = gp.leg_length * gp.leg_width * gp.plate_thick;
  EXPECT_NEAR(mesh_volume(m), plate + 4 * leg, 1e-15);
  // The center column of nodes must exist; scenarios probe it.
  bool found_center_top = false;
  for (int n = 0; n < m.n_nodes(); ++n)
    if (m.nodes(n, 0) == gp.plate_side / 2 &&
        m.nodes(n, 1) == gp.plate_side / 2 &&
        m.nodes(n, 2) == gp.plate_thick)
      found_center_top = true;
  EXPECT_TRUE(found_center_top);
}

TEST(MeshIo, RoundTripPreservesEverything) {
  const NominalMesh m = build_rect_beam_mesh(1.5, 0.04, 6, 2, kAl, 0.1);
  const std::string path = temp_path("roundtrip.mesh");
  write_mesh(m, path);
  const NominalMesh r = read_mesh(path);
  EXPECT_EQ(r.dim, m.dim);
  EXPECT_EQ(r.kind, m.kind);
  EXPECT_EQ(r.thickness, m.thickness);
  EXPECT_EQ(r.material.E, m.material.E);
  EXPECT_EQ(r.material.nu, m.material.nu);
  EXPECT_EQ(r.material.rho, m.material.rho);
  ASSERT_EQ(r.n_nodes(), m.n_nodes());
  ASSERT_EQ(r.n_elems(), m.n_elems());
  EXPECT_EQ(r.fixed_dofs, m.fixed_dofs);
  EXPECT_LT((r.nodes - m.nodes).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_EQ(r.elements, m.elements);
  // Same content must hash the same; a node perturbation must not.
  EXPECT_EQ(mesh_hash(r), mesh_hash(m));
  NominalMesh perturbed = m;
  perturbed.nodes(3, 0) += 1e-9;
  EXPECT_NE(mesh_hash(perturbed), mesh_hash(m));
  std::remove(path.c_str());
}

TEST(MeshIo, RejectsUnknownKeyword) {
  const std::string path = temp_path("bad.mesh");
  {
    FILE* f = fopen(path.c_str(), "w");
    fputs("dprom-mesh 1\ndim 2\nwibble 3\nend\n", f);
    fclose(f);
  }
  EXPECT_THROW(read_mesh(path), IoError);
  std::remove(path.c_str());
}

TEST(MeshIo, RejectsWrongVersion) {
  const std::string path = temp_path("vers.mesh");
  {
    FILE* f = fopen(path.c_str(), "w");
    fputs("dprom-mesh 2\nend\n", f);
    fclose(f);
  }
  EXPECT_THROW(read_mesh(path), IoError);
  std::remove(path.c_str());
}

TEST(DefectApplication, ShiftsNodesByWeightedShapes) {
  const NominalMesh m = build_rect_beam_mesh(2.0, 0.05, 8, 2, kAl, 0.2);
  const DefectBasis d = sample_defects(m, {make_arch_defect(2.0, 0.05)});
  ASSERT_EQ(d.count(), 1);
  ASSERT_EQ(d.U.rows(), m.n_dofs());
  VecX xi(1);
  xi << 0.5;
  const NominalMesh shifted = apply_defect(m, d.U, xi);
  for (int n = 0; n < m.n_nodes(); ++n)
    for (int c = 0; c < 2; ++c)
      EXPECT_NEAR(shifted.nodes(n, c),
                  m.nodes(n, c) + 0.5 * d.U(2 * n + c, 0), 1e-15);
  // Element connectivity and constraints carry over untouched.
  EXPECT_EQ(shifted.elements, m.elements);
  EXPECT_EQ(shifted.fixed_dofs, m.fixed_dofs);
  // The arch shape must vanish at the clamped ends and peak mid-span.
  double max_rise = 0.0;
  for (int n = 0; n < m.n_nodes(); ++n) {
    if (m.nodes(n, 0) == 0.0 || m.nodes(n, 0) == 2.0)
      EXPECT_NEAR(d.U(2 * n + 1, 0), 0.0, 1e-15);
    max_rise = std::max(max_rise, d.U(2 * n + 1, 0));
  }
  EXPECT_NEAR(max_rise, 0.05, 1e-12);
}

TEST(DefectIo, FileRoundTripAndValidation) {
  const NominalMesh m = build_rect_beam_mesh(2.0, 0.05, 4, 1, kAl, 0.2);
  const DefectBasis d = sample_defects(m, {make_arch_defect(2.0, 0.03)});
  const std::string path = temp_path("defect.defect");
  {
    FILE* f = fopen(path.c_str(), "w");
    fprintf(f, "dprom-defect 1\ndim 2\nfields 1\nnames arch_test\nnodes %d\n",
            m.n_nodes());
    for (int n = 0; n < m.n_nodes(); ++n)
      fprintf(f, "%.17g %.17g\n", d.U(2 * n, 0), d.U(2 * n + 1, 0));
    fputs("end\n", f);
    fclose(f);
  }
  const DefectBasis r = read_defect_file(m, path);
  ASSERT_EQ(r.count(), 1);
  EXPECT_EQ(r.names[0], "arch_test");
  EXPECT_LT((r.U - d.U).cwiseAbs().maxCoeff(), 1e-15);
  // A node-count mismatch against the mesh must be rejected.
  const NominalMesh other = build_rect_beam_mesh(2.0, 0.05, 5, 1, kAl, 0.2);
  EXPECT_THROW(read_defect_file(other, path), IoError);
  std::remove(path.c_str());
}
