# coding: utf-8

# # Fields, sects and write plans
#
# A field is a small stencil of strength vectors around its center. Every
# vector is filed under one of eight 45 degree sects.

import numpy as np

from socialfield import FieldKind, FieldSpec, Footprint, GridGeometry, build_write_plan, sect_index, strength_at

g = GridGeometry(20, 20)
rec = FieldSpec(FieldKind.RECURRENT_REPULSIVE, Footprint(7, 7), gain=1.0, decay=-0.5)

for target in [(2, 0), (0, 3), (2, 2), (-3, 1)]:
    v = strength_at(rec, (0, 0), target, g)
    print(target, "->", np.round(v, 4), "sect", sect_index(v))


# Attractive kinds point back toward the center instead.

att = FieldSpec(FieldKind.OMNI_ATTRACTIVE, Footprint(7, 7))
print(np.round(strength_at(att, (0, 0), (0, 3), g), 4))


# A directional field only covers the three sects around its orientation.

front = FieldSpec(FieldKind.DIR_REPULSIVE, Footprint(7, 7), orientation=2)
grid = np.full((7, 7), ".")
for dy in range(-3, 4):
    for dx in range(-3, 4):
        s = sect_index(strength_at(front, (0, 0), (dx, dy), g))
        if s is not None:
            grid[3 - dy, dx + 3] = str(s)
print("\n".join(" ".join(row) for row in grid))


# The write plan inverts the stencil: for any target and sect it lists the
# center offsets whose field lands there. The longest list is the fan-out.

plan = build_write_plan(rec)
print("contributors per sect:", plan.counts(), "fan-out:", plan.fanout)
print("sect 1, target (2, 2):", sorted((2 + ox, 2 + oy) for (ox, oy), _, _ in plan.contributors[1]))


# Fan-out grows with the field geometry.

for n in (1, 3, 5, 7, 9, 11):
    f = FieldSpec(FieldKind.OMNI_REPULSIVE, Footprint(n, n))
    print(f"{n}x{n}: {build_write_plan(f).fanout}")
