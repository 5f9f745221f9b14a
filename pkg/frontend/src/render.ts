/**
 * Top-down (x/y plane) canvas rendering of the workspace.
 *
 * z is shown as a small height badge next to each glyph rather than as a
 * third axis: the task is tabletop pick-and-place, and the operator mainly
 * needs to see where things are and where the arm is headed.
 */

import { ViewState } from "./viewmodel.js";

const WORLD_MIN = -1.5;
const WORLD_MAX = 1.5;

const COLORS = {
  grid: "#2a2f3a",
  axis: "#3d4451",
  object: "#d9a441",
  held: "#ff5d73",
  gripper: "#4fc1e9",
  interim: "#9aa5b1",
  target: "#7bd88f",
  label: "#c8ceda",
};

export function drawWorkspace(canvas: HTMLCanvasElement, view: ViewState): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const size = Math.min(canvas.width, canvas.height);
  const scale = size / (WORLD_MAX - WORLD_MIN);
  const toPx = (wx: number, wy: number): [number, number] => [
    (wx - WORLD_MIN) * scale,
    // canvas y grows downward; world y grows "left" of the robot
    size - (wy - WORLD_MIN) * scale,
  ];

  ctx.clearRect(0, 0, canvas.width, canvas.height);

  ctx.strokeStyle = COLORS.grid;
  ctx.lineWidth = 1;
  for (let g = WORLD_MIN; g <= WORLD_MAX + 1e-9; g += 0.5) {
    const [x0, y0] = toPx(g, WORLD_MIN);
    const [x1, y1] = toPx(g, WORLD_MAX);
    ctx.beginPath();
    ctx.moveTo(x0, y0);
    ctx.lineTo(x1, y1);
    ctx.stroke();
    const [hx0, hy0] = toPx(WORLD_MIN, g);
    const [hx1, hy1] = toPx(WORLD_MAX, g);
    ctx.beginPath();
    ctx.moveTo(hx0, hy0);
    ctx.lineTo(hx1, hy1);
    ctx.stroke();
  }
  ctx.strokeStyle = COLORS.axis;
  const [ox, oy] = toPx(0, 0);
  ctx.strokeRect(ox - 4, oy - 4, 8, 8); // robot base

  ctx.font = "11px system-ui, sans-serif";

  for (const obj of view.workspace.objects) {
    const [px, py] = toPx(obj.x, obj.y);
    ctx.fillStyle = obj.held ? COLORS.held : COLORS.object;
    ctx.beginPath();
    ctx.arc(px, py, obj.held ? 7 : 5, 0, Math.PI * 2);
    ctx.fill();
    ctx.fillStyle = COLORS.label;
    ctx.fillText(`${obj.name} z${obj.z.toFixed(2)}`, px + 8, py - 4);
  }

  if (view.workspace.target) {
    const [tx, ty] = toPx(view.workspace.target[0], view.workspace.target[1]);
    ctx.strokeStyle = COLORS.target;
    ctx.lineWidth = 1.5;
    ctx.strokeRect(tx - 6, ty - 6, 12, 12);
  }
  if (view.workspace.interim) {
    const [ix, iy] = toPx(view.workspace.interim[0], view.workspace.interim[1]);
    ctx.strokeStyle = COLORS.interim;
    ctx.beginPath();
    ctx.arc(ix, iy, 4, 0, Math.PI * 2);
    ctx.stroke();
  }
  if (view.workspace.gripper) {
    const [gx, gy] = toPx(view.workspace.gripper[0], view.workspace.gripper[1]);
    ctx.fillStyle = COLORS.gripper;
    ctx.beginPath();
    ctx.arc(gx, gy, 6, 0, Math.PI * 2);
    ctx.fill();
    ctx.fillStyle = COLORS.label;
    const z = view.workspace.gripper[2];
    const aperture = view.workspace.aperture ?? 0;
    ctx.fillText(
      `arm z${z.toFixed(2)} grip${(aperture * 1000).toFixed(0)}mm`,
      gx + 9,
      gy + 12,
    );
  }
}
