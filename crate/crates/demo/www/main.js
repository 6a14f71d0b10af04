// Generated by `wasm-bindgen --target web --out-dir www/pkg`.
import init, { messy_scene, place, fit_outline } from "./pkg/tidyplan_demo.js";

const $ = (id) => document.getElementById(id);
const table = $("table");
const tctx = table.getContext("2d");
let scene = null;
let selected = null;

function scale() {
  return table.width / scene.workspace.width_m;
}

// table coordinates have +y pointing away from the viewer, so flip y
function toCanvas(x, y) {
  const s = scale();
  return [x * s, table.height - y * s];
}

function corners(o) {
  const t = (o.pose.theta * Math.PI) / 180;
  const [hx, hy] = o.half_extents;
  return [[-hx, -hy], [hx, -hy], [hx, hy], [-hx, hy]].map(([lx, ly]) => [
    o.pose.x + lx * Math.cos(t) - ly * Math.sin(t),
    o.pose.y + lx * Math.sin(t) + ly * Math.cos(t),
  ]);
}

function inside(o, x, y) {
  const t = (o.pose.theta * Math.PI) / 180;
  const dx = x - o.pose.x, dy = y - o.pose.y;
  const lx = dx * Math.cos(t) + dy * Math.sin(t);
  const ly = -dx * Math.sin(t) + dy * Math.cos(t);
  return Math.abs(lx) <= o.half_extents[0] && Math.abs(ly) <= o.half_extents[1];
}

function draw() {
  const ws = scene.workspace;
  tctx.clearRect(0, 0, table.width, table.height);
  tctx.strokeStyle = "#ddd";
  for (let i = 1; i < ws.grid_w; i++) {
    const [x] = toCanvas((i * ws.width_m) / ws.grid_w, 0);
    tctx.beginPath(); tctx.moveTo(x, 0); tctx.lineTo(x, table.height); tctx.stroke();
  }
  for (let j = 1; j < ws.grid_h; j++) {
    const [, y] = toCanvas(0, (j * ws.depth_m) / ws.grid_h);
    tctx.beginPath(); tctx.moveTo(0, y); tctx.lineTo(table.width, y); tctx.stroke();
  }
  // supports first so items on them stay visible
  const order = [...scene.objects].sort((a, b) => b.is_support - a.is_support);
  for (const o of order) {
    tctx.beginPath();
    corners(o).forEach(([x, y], i) => {
      const [cx, cy] = toCanvas(x, y);
      i === 0 ? tctx.moveTo(cx, cy) : tctx.lineTo(cx, cy);
    });
    tctx.closePath();
    tctx.fillStyle = o.id === selected ? "#f4b942" : o.is_support ? "#c9d6e8" : "#8fb996";
    tctx.globalAlpha = o.is_support ? 0.6 : 0.9;
    tctx.fill();
    tctx.globalAlpha = 1;
    tctx.strokeStyle = "#333";
    tctx.stroke();
    const [lx, ly] = toCanvas(o.pose.x, o.pose.y);
    tctx.fillStyle = "#000";
    tctx.fillText(o.category, lx - 12, ly + 4);
  }
}

function status(text) {
  $("status").textContent = text;
}

function generate() {
  try {
    scene = JSON.parse(messy_scene($("env").value, Number($("seed").value) >>> 0));
  } catch (e) {
    status(String(e));
    return;
  }
  selected = null;
  const bins = $("bin");
  bins.innerHTML = "";
  for (let r = 0; r < scene.workspace.rotation_bins; r++) {
    const deg = (r * 360) / scene.workspace.rotation_bins;
    bins.add(new Option(`${r} (${deg} deg)`, r));
  }
  status(`${scene.objects.length} objects`);
  draw();
}

table.addEventListener("click", (ev) => {
  if (!scene) return;
  const rect = table.getBoundingClientRect();
  const s = scale();
  const x = (ev.clientX - rect.left) / s;
  const y = (table.height - (ev.clientY - rect.top)) / s;
  // prefer non-support objects when they sit on a support
  const hits = scene.objects.filter((o) => inside(o, x, y)).sort((a, b) => a.is_support - b.is_support);
  if (hits.length > 0 && hits[0].id !== selected) {
    selected = hits[0].id;
    status(`selected ${hits[0].category} (id ${selected})`);
  } else if (selected !== null) {
    const ws = scene.workspace;
    const cx = Math.min(ws.grid_w - 1, Math.floor((x / ws.width_m) * ws.grid_w));
    const cy = Math.min(ws.grid_h - 1, Math.floor((y / ws.depth_m) * ws.grid_h));
    try {
      scene = JSON.parse(place(JSON.stringify(scene), selected, cx, cy, Number($("bin").value)));
      status(`placed id ${selected} at cell (${cx}, ${cy})`);
    } catch (e) {
      status(String(e));
    }
  }
  draw();
});

const pts = $("points");
const pctx = pts.getContext("2d");
let points = [];
let fit = null;

function drawPoints() {
  pctx.clearRect(0, 0, pts.width, pts.height);
  pctx.fillStyle = "#333";
  // points are kept with y up; the canvas has y down
  for (const [x, y] of points) pctx.fillRect(x - 2, pts.height - y - 2, 4, 4);
  if (fit) {
    const t = (fit.angle * Math.PI) / 180;
    pctx.strokeStyle = "#c0392b";
    pctx.beginPath();
    pctx.ellipse(fit.center[0], pts.height - fit.center[1], fit.semi_axes[0], fit.semi_axes[1], -t, 0, 2 * Math.PI);
    pctx.stroke();
  }
}

pts.addEventListener("click", (ev) => {
  const rect = pts.getBoundingClientRect();
  points.push([ev.clientX - rect.left, pts.height - (ev.clientY - rect.top)]);
  fit = null;
  drawPoints();
});

$("fit-run").addEventListener("click", () => {
  try {
    fit = JSON.parse(fit_outline(JSON.stringify(points)));
    $("fit").textContent =
      `center (${fit.center.map((v) => v.toFixed(1)).join(", ")})  ` +
      `axes ${fit.semi_axes.map((v) => v.toFixed(1)).join(" x ")}  ` +
      `angle ${fit.angle.toFixed(2)} deg  alignment ${fit.alignment.toFixed(2)} deg`;
  } catch (e) {
    fit = null;
    $("fit").textContent = String(e);
  }
  drawPoints();
});

$("fit-clear").addEventListener("click", () => {
  points = [];
  fit = null;
  $("fit").textContent = "";
  drawPoints();
});

$("generate").addEventListener("click", generate);

await init();
generate();
