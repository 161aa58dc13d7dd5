"""Rasterize a map into an occupancy grid and plan paths on it.

Only permanent structure reaches the grid: polygon boundaries become one-cell
walls, passages punch door gaps through them. Semantic nodes never touch the
grid, so a map can be re-enriched forever without invalidating navigation.
"""

import numpy as np

from osmag_nav import plan_path, render_grid
from osmag_nav.fixtures import enriched_five_room_map
from osmag_nav.gridworld import OCCUPIED, inflate

m = enriched_five_room_map()
grid = render_grid(m, resolution=0.1)
print(f"grid: {grid.width} x {grid.height} cells @ {grid.resolution} m")
print(f"occupied cells: {int(np.sum(grid.cells == OCCUPIED))}")

# inflate walls by the robot radius before planning, as a costmap would
planning = inflate(grid, radius_m=0.25)

start = grid.cell_of(6.0, 10.5)   # robotics lab
goal = grid.cell_of(8.0, 1.0)     # the sink in the lounge
path = plan_path(planning, start, goal)
print(f"lab -> lounge sink: {len(path.cells)} cells, {path.length_m:.2f} m")

# coarse ASCII rendering with the path overlaid
scale = 10
rows = []
for cy in range(0, grid.height, scale):
    row = ""
    for cx in range(0, grid.width, scale):
        block = grid.cells[cy : cy + scale, cx : cx + scale]
        row += "#" if (block == OCCUPIED).any() else "."
    rows.append(list(row))
for x, y in path.cells:
    rows[y // scale][x // scale] = "*"
print("\n".join("".join(r) for r in reversed(rows)))
