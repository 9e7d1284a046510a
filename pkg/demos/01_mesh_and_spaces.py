"""
Meshes and edge-element spaces
==============================

Build the two structured meshes, look at their topology, refine one, and
see how many degrees of freedom the two element orders carry.
"""

import numpy as np

from eddyopt import FESpace, generate_cube, generate_cylinder, refine_uniform, write_msh

# A structured cube mesh: n**3 cells, each split into six tetrahedra.
cube = generate_cube(2)
print("cube:    ", cube.n_vertices, "vertices,", cube.n_tets, "tets,",
      cube.n_edges, "edges,", cube.boundary_faces.shape[0], "boundary faces")

# The closed surface of a ball-like solid always has Euler characteristic 2.
print("Euler characteristic:", cube.euler_characteristic())

# A cylinder of radius 1/2 and length 1; the lateral circle is approximated
# by a polygon with n_theta sides.
cyl = generate_cylinder(0.5, 1.0, 2, 12, 4)
print("cylinder:", cyl.n_vertices, "vertices,", cyl.n_tets, "tets,",
      "volume", float(cyl.tet_volumes().sum()))

# Uniform refinement splits every tetrahedron into eight children and keeps
# the polyhedral domain fixed -- the volume does not change.
fine = refine_uniform(cyl)
print("refined: ", fine.n_tets, "tets (8x),",
      "volume", float(fine.tet_volumes().sum()), "(unchanged)")

# Edge elements attach degrees of freedom to edges (lowest order) and to
# edges plus faces (next order). The counts grow accordingly.
for k in (0, 1):
    space = FESpace(cyl, k)
    print(f"order {k}: {space.n_dofs} dofs "
          f"({len(space.boundary_dofs)} on the boundary)")

# Meshes round-trip through the MSH v2.2 text format.
text = write_msh(cyl)
print("MSH file:", len(text.splitlines()), "lines,",
      text.splitlines()[0], "...")
