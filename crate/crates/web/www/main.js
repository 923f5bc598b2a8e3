import init, { simulate, ballot, barrier_curves, centering } from "./pkg/bbm_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function frame(ctx, xlo, xhi, ylo, yhi, pad = 30) {
  const { width: w, height: h } = ctx.canvas;
  const sx = (v) => pad + ((v - xlo) / (xhi - xlo || 1)) * (w - 2 * pad);
  const sy = (v) => h - pad - ((v - ylo) / (yhi - ylo || 1)) * (h - 2 * pad);
  ctx.clearRect(0, 0, w, h);
  ctx.strokeStyle = "#999";
  ctx.lineWidth = 1;
  ctx.strokeRect(pad, pad, w - 2 * pad, h - 2 * pad);
  ctx.fillStyle = "#444";
  ctx.font = "11px sans-serif";
  ctx.fillText(xlo.toFixed(2), pad, h - pad + 14);
  ctx.fillText(xhi.toFixed(2), w - pad - 30, h - pad + 14);
  ctx.fillText(yhi.toFixed(2), 2, pad + 4);
  ctx.fillText(ylo.toFixed(2), 2, h - pad);
  return { sx, sy };
}

function extent(values) {
  let lo = Infinity, hi = -Infinity;
  for (const v of values) { if (v < lo) lo = v; if (v > hi) hi = v; }
  return [lo, hi];
}

function drawTree() {
  const d = num("tree-d");
  let tree;
  try {
    tree = JSON.parse(simulate(d, num("tree-n"), num("tree-h"), num("tree-seed")));
  } catch (e) {
    $("tree-info").innerHTML = `<span class="err">${e.message ?? e}</span>`;
    return;
  }
  const T = tree.horizon;
  $("tree-info").textContent = `${tree.particles.length} particles, T = ${T.toFixed(3)}`;
  const coord = (p, i) => d >= 2
    ? [p.positions[i * d], p.positions[i * d + 1]]
    : [p.times[i], p.positions[i]];
  const modulus = (p, i) => Math.hypot(...p.positions.slice(i * d, i * d + d));

  const plane = $("tree-plane").getContext("2d");
  const xs = [], ys = [];
  for (const p of tree.particles) for (let i = 0; i < p.times.length; i++) {
    const [a, b] = coord(p, i); xs.push(a); ys.push(b);
  }
  let [xlo, xhi] = extent(xs), [ylo, yhi] = extent(ys);
  if (d >= 2) {
    const half = Math.max(xhi - xlo, yhi - ylo) / 2, cx = (xlo + xhi) / 2, cy = (ylo + yhi) / 2;
    [xlo, xhi, ylo, yhi] = [cx - half, cx + half, cy - half, cy + half];
  }
  const f = frame(plane, xlo, xhi, ylo, yhi);
  plane.lineWidth = 0.6;
  for (const p of tree.particles) {
    plane.strokeStyle = `hsl(${240 * (1 - p.birth / T)},70%,42%)`;
    plane.beginPath();
    for (let i = 0; i < p.times.length; i++) {
      const [a, b] = coord(p, i);
      i ? plane.lineTo(f.sx(a), f.sy(b)) : plane.moveTo(f.sx(a), f.sy(b));
    }
    plane.stroke();
  }

  const mod = $("tree-modulus").getContext("2d");
  let rhi = 0;
  for (const p of tree.particles) for (let i = 0; i < p.times.length; i++) rhi = Math.max(rhi, modulus(p, i));
  if (T > 1) rhi = Math.max(rhi, centering(d, T));
  const g = frame(mod, 0, T, 0, rhi);
  mod.strokeStyle = "rgba(40,40,90,0.45)";
  mod.lineWidth = 0.5;
  mod.beginPath();
  for (const p of tree.particles) for (let i = 0; i < p.times.length; i++) {
    const x = g.sx(p.times[i]), y = g.sy(modulus(p, i));
    i ? mod.lineTo(x, y) : mod.moveTo(x, y);
  }
  mod.stroke();
  if (T > 1) {
    mod.strokeStyle = "#c22";
    mod.lineWidth = 1.5;
    mod.setLineDash([6, 4]);
    mod.beginPath();
    for (let k = 0; k <= 100; k++) {
      const t = 1 + ((T - 1) * k) / 100, y = g.sy(Math.max(0, centering(d, t)));
      k ? mod.lineTo(g.sx(t), y) : mod.moveTo(g.sx(t), y);
    }
    mod.stroke();
    mod.setLineDash([]);
  }
}

function runBallot() {
  let r;
  try {
    r = ballot(num("b-x"), num("b-y"), num("b-a"), num("b-b"), num("b-t"), num("b-n"), num("b-seed"));
  } catch (e) {
    $("b-out").innerHTML = `<p class="err">${e.message ?? e}</p>`;
    return;
  }
  const [exact, c, m, fine, extra, se] = r;
  const z = (extra - exact) / se;
  $("b-out").innerHTML = `<table>
    <tr><th>closed form</th><th>32 steps</th><th>64 steps</th><th>128 steps</th><th>extrapolated</th><th>stderr</th><th>z</th></tr>
    <tr><td>${exact.toFixed(5)}</td><td>${c.toFixed(5)}</td><td>${m.toFixed(5)}</td><td>${fine.toFixed(5)}</td>
    <td>${extra.toFixed(5)}</td><td>${se.toFixed(5)}</td><td>${z.toFixed(2)}</td></tr></table>`;
}

function drawCurves() {
  let c;
  try {
    c = JSON.parse(barrier_curves(num("c-d"), num("c-t"), num("c-l"), num("c-ell"), num("c-z"), num("c-y"), 400));
  } catch (e) {
    $("c-out").innerHTML = `<p class="err">${e.message ?? e}</p>`;
    return;
  }
  $("c-out").textContent = `s in [0, ${c.count_time.toFixed(2)}], ℓ₁ = ${c.ell1.toFixed(3)}`;
  const ctx = $("c-plot").getContext("2d");
  const [lo, hi] = extent([...c.b0, ...c.q, ...c.upper]);
  const f = frame(ctx, 0, c.count_time, lo, hi, 40);
  for (const [ys, colour] of [[c.upper, "#888"], [c.b0, "#c22"], [c.q, "#27a"]]) {
    ctx.strokeStyle = colour;
    ctx.lineWidth = 1.6;
    ctx.beginPath();
    ys.forEach((y, i) => (i ? ctx.lineTo(f.sx(c.s[i]), f.sy(y)) : ctx.moveTo(f.sx(c.s[i]), f.sy(y))));
    ctx.stroke();
  }
}

await init();
$("tree-run").onclick = drawTree;
$("b-run").onclick = runBallot;
$("c-run").onclick = drawCurves;
drawTree();
runBallot();
drawCurves();
