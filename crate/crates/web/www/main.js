import init, { polya_modulus, polya_report, Relaxation, collar_profile } from "./pkg/gldiv_web.js";

const num = (id) => parseFloat(document.getElementById(id).value);
const show = (id, text) => { document.getElementById(id).textContent = text; };

function viridisish(t) {
  const r = Math.round(255 * Math.min(1, Math.max(0, 1.6 * t - 0.4)));
  const g = Math.round(255 * Math.min(1, Math.max(0, 1.2 * t)));
  const b = Math.round(255 * Math.min(1, Math.max(0, 0.9 - 0.8 * t)));
  return [r, g, b];
}

function drawPolya() {
  const k = num("p-k"), beta = num("p-beta"), gamma = num("p-gamma"), r = num("p-r");
  const canvas = document.getElementById("p-canvas");
  const ctx = canvas.getContext("2d");
  const n = canvas.width;
  let grid, report;
  try {
    grid = polya_modulus(k, beta, gamma, r, n);
    report = polya_report(k, beta, gamma, r);
  } catch (e) {
    show("p-out", String(e));
    return;
  }
  let lo = Infinity, hi = -Infinity;
  for (const v of grid) if (!Number.isNaN(v)) { lo = Math.min(lo, v); hi = Math.max(hi, v); }
  const img = ctx.createImageData(n, n);
  grid.forEach((v, i) => {
    const [cr, cg, cb] = Number.isNaN(v) ? [250, 250, 250] : viridisish((v - lo) / (hi - lo || 1));
    img.data.set([cr, cg, cb, 255], 4 * i);
  });
  ctx.putImageData(img, 0, 0);
  const [ax, ay, max, bmax, interior] = report;
  const px = (ax / r + 1) * n / 2, py = (1 - ay / r) * n / 2;
  ctx.strokeStyle = "#d00";
  ctx.beginPath(); ctx.arc(px, py, 5, 0, 2 * Math.PI); ctx.stroke();
  show("p-out",
    `max |u| = ${max.toFixed(6)} at (${ax.toFixed(4)}, ${ay.toFixed(4)})\n` +
    `boundary max = ${bmax.toFixed(6)}\n` +
    `maximum is ${interior ? "interior" : "on the boundary"}`);
}

let relax = null;
let running = false;

function resetVortex() {
  running = false;
  try {
    relax = new Relaxation(num("v-eps"), num("v-k"), 64, 32, num("v-cx"), num("v-cy"));
  } catch (e) {
    relax = null;
    show("v-out", String(e));
    return;
  }
  drawVortex();
}

function drawVortex() {
  const canvas = document.getElementById("v-canvas");
  const ctx = canvas.getContext("2d");
  const s = canvas.width / 2.2, c = canvas.width / 2;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.strokeStyle = "#999";
  ctx.beginPath(); ctx.arc(c, c, s, 0, 2 * Math.PI); ctx.stroke();
  const nodes = relax.nodes();
  for (let i = 0; i < nodes.length; i += 4) {
    const [x, y, u1, u2] = nodes.subarray(i, i + 4);
    const m = Math.hypot(u1, u2);
    const [r, g, b] = viridisish(Math.min(1, m));
    ctx.fillStyle = `rgb(${r},${g},${b})`;
    ctx.fillRect(c + s * x - 2, c - s * y - 2, 4, 4);
    if ((i / 4) % 3 === 0) {
      ctx.strokeStyle = "rgba(0,0,0,0.35)";
      ctx.beginPath();
      ctx.moveTo(c + s * x, c - s * y);
      ctx.lineTo(c + s * (x + 0.05 * u1), c - s * (y + 0.05 * u2));
      ctx.stroke();
    }
  }
  const [dx, dy] = relax.defect();
  ctx.strokeStyle = "#d00";
  ctx.beginPath(); ctx.arc(c + s * dx, c - s * dy, 6, 0, 2 * Math.PI); ctx.stroke();
  let degree;
  try { degree = relax.degree(); } catch (e) { degree = "undefined"; }
  show("v-out",
    `iterations = ${relax.iterations()}\nenergy = ${relax.energy().toFixed(6)}\n` +
    `defect at (${dx.toFixed(3)}, ${dy.toFixed(3)})\ndegree on |x| = 0.9: ${degree}`);
}

function runVortex() {
  if (!relax) return;
  running = !running;
  document.getElementById("v-run").textContent = running ? "Pause" : "Run";
  const tick = () => {
    if (!running) return;
    let converged;
    try {
      converged = relax.step(25);
    } catch (e) {
      running = false;
      show("v-out", String(e));
      return;
    }
    drawVortex();
    if (converged) {
      running = false;
      document.getElementById("v-run").textContent = "Run";
      return;
    }
    requestAnimationFrame(tick);
  };
  requestAnimationFrame(tick);
}

function drawCollar() {
  const canvas = document.getElementById("c-canvas");
  const ctx = canvas.getContext("2d");
  let rows;
  try {
    rows = collar_profile(num("c-a"), num("c-b"), num("c-k"), 121);
  } catch (e) {
    show("c-out", String(e));
    return;
  }
  const n = rows.length / 4;
  const col = (j) => Array.from({ length: n }, (_, i) => rows[4 * i + j]);
  const y2 = col(0), series = [col(1), col(2), col(3)];
  const colors = ["#1565c0", "#2e7d32", "#c62828"];
  const names = ["distortion", "min LH form", "bound"];
  const ymax = Math.max(...series.flat()) * 1.05, ymin = 0;
  const W = canvas.width, H = canvas.height, pad = 30;
  const X = (v) => pad + (v - y2[0]) / (y2[n - 1] - y2[0]) * (W - 2 * pad);
  const Y = (v) => H - pad - (v - ymin) / (ymax - ymin) * (H - 2 * pad);
  ctx.clearRect(0, 0, W, H);
  ctx.strokeStyle = "#bbb";
  ctx.beginPath(); ctx.moveTo(X(0), pad); ctx.lineTo(X(0), H - pad); ctx.stroke();
  ctx.beginPath(); ctx.moveTo(pad, Y(1)); ctx.lineTo(W - pad, Y(1)); ctx.stroke();
  series.forEach((s, k) => {
    ctx.strokeStyle = colors[k];
    ctx.beginPath();
    s.forEach((v, i) => (i ? ctx.lineTo(X(y2[i]), Y(v)) : ctx.moveTo(X(y2[i]), Y(v))));
    ctx.stroke();
    ctx.fillStyle = colors[k];
    ctx.fillText(names[k], W - pad - 90, pad + 14 * k);
  });
  ctx.fillStyle = "#444";
  ctx.fillText("y₂", W - pad + 6, H - pad);
  const worst = Math.min(...series[1].map((v, i) => v / series[2][i]));
  show("c-out", `collar half-width r1 = ${(-y2[0] * n / (n - 1)).toFixed(4)}\nmin (LH form / bound) = ${worst.toFixed(6)}`);
}

await init();
document.getElementById("p-run").addEventListener("click", drawPolya);
document.getElementById("v-reset").addEventListener("click", resetVortex);
document.getElementById("v-run").addEventListener("click", runVortex);
document.getElementById("c-run").addEventListener("click", drawCollar);
drawPolya();
resetVortex();
drawCollar();
