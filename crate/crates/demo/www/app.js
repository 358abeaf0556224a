import init, { trainIndex, groundCurve, msLoss } from "./pkg/groundbridge_demo.js";

const $ = (id) => document.getElementById(id);
const COLOURS = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
  "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#393b79"];

function call(fn, request, out) {
  try {
    out.classList.remove("err");
    return JSON.parse(fn(JSON.stringify(request)));
  } catch (e) {
    out.classList.add("err");
    out.textContent = String(e.message ?? e);
    return null;
  }
}

function showValues() {
  for (const input of document.querySelectorAll("input[type=range]")) {
    const span = input.nextElementSibling;
    if (span) span.textContent = input.value;
  }
}

// Object index

function drawIndex(res) {
  const c = $("ix-plot"), g = c.getContext("2d");
  g.clearRect(0, 0, c.width, c.height);
  const xs = res.points.map((p) => p.x), ys = res.points.map((p) => p.y);
  const [x0, x1, y0, y1] = [Math.min(...xs), Math.max(...xs), Math.min(...ys), Math.max(...ys)];
  const sx = (x) => 20 + ((x - x0) / (x1 - x0 || 1)) * (c.width - 180);
  const sy = (y) => c.height - 20 - ((y - y0) / (y1 - y0 || 1)) * (c.height - 40);
  const classes = [...new Set(res.points.map((p) => p.class))].sort();
  for (const p of res.points) {
    g.fillStyle = COLOURS[classes.indexOf(p.class) % COLOURS.length];
    g.beginPath();
    if (p.supercategory === "round") g.arc(sx(p.x), sy(p.y), 3.5, 0, 2 * Math.PI);
    else g.rect(sx(p.x) - 3, sy(p.y) - 3, 6, 6);
    g.fill();
  }
  classes.forEach((name, i) => {
    g.fillStyle = COLOURS[i % COLOURS.length];
    g.fillRect(c.width - 150, 20 + i * 18, 10, 10);
    g.fillStyle = "#222";
    g.fillText(name, c.width - 134, 29 + i * 18);
  });
}

function runIndex() {
  const out = $("ix-out");
  out.textContent = "training...";
  setTimeout(() => {
    const t = performance.now();
    const res = call(trainIndex, {
      seed: Number($("ix-seed").value),
      samples_per_class: Number($("ix-samples").value),
      epochs: Number($("ix-epochs").value),
    }, out);
    if (!res) return;
    out.textContent = `accuracy ${res.accuracy.toFixed(3)}  cross-supercategory ${res.cross_supercategory.toFixed(3)}  ` +
      `PC variance ${res.explained_ratio.map((r) => r.toFixed(2)).join(" / ")}  ` +
      `(${((performance.now() - t) / 1000).toFixed(1)} s)`;
    drawIndex(res);
    runGround();
  }, 10);
}

// Grounding curve

function drawCurve(stages) {
  const c = $("g-plot"), g = c.getContext("2d");
  g.clearRect(0, 0, c.width, c.height);
  const left = 40, right = c.width - 150, top = 10, bottom = c.height - 60;
  const sx = (i) => left + (i / Math.max(stages.length - 1, 1)) * (right - left);
  const sy = (f) => bottom - f * (bottom - top);
  g.strokeStyle = "#ccc";
  g.fillStyle = "#444";
  for (const f of [0, 0.5, 1]) {
    g.beginPath(); g.moveTo(left, sy(f)); g.lineTo(right, sy(f)); g.stroke();
    g.fillText(f.toFixed(1), 10, sy(f) + 4);
  }
  stages.forEach((s, i) => {
    g.save();
    g.translate(sx(i), bottom + 8);
    g.rotate(Math.PI / 6);
    g.fillText(s.label, 0, 0);
    g.restore();
  });
  const pairs = stages[0].pairs.map((p) => p.pair);
  pairs.forEach((name, p) => {
    g.strokeStyle = g.fillStyle = COLOURS[p];
    g.beginPath();
    stages.forEach((s, i) => {
      const y = sy(s.pairs[p].f1);
      if (i === 0) g.moveTo(sx(i), y); else g.lineTo(sx(i), y);
    });
    g.stroke();
    stages.forEach((s, i) => {
      if (s.pairs[p].hinted) g.fillRect(sx(i) - 3, sy(s.pairs[p].f1) - 3, 6, 6);
    });
    g.fillText(name, right + 12, top + 14 + p * 18);
  });
}

function runGround() {
  const out = $("g-out");
  showValues();
  const res = call(groundCurve, {
    eta: Number($("g-eta").value),
    sigma: Number($("g-sigma").value),
    lambda: 10 ** Number($("g-lambda").value),
    preset: $("g-preset").value,
    hints: $("g-hints").checked,
    seed: Number($("g-seed").value),
  }, out);
  if (!res) return;
  const last = res[res.length - 1];
  out.textContent = "KNN macro F1 by stage (filled squares: pair hinted)\nfinal: " +
    last.pairs.map((p) => `${p.pair} ${p.f1.toFixed(2)} (cos ${p.cosine.toFixed(2)})`).join("  ");
  drawCurve(res);
}

// Multi-similarity loss

const batch = { angles: [], labels: [] };
let lastLoss = null;

function shuffle() {
  batch.labels = [0, 0, 0, 1, 1, 1, 2, 2, 2, 2];
  batch.angles = batch.labels.map(() => Math.random() * 2 * Math.PI);
  runLoss();
}

function lossRequest() {
  return {
    angles: batch.angles,
    labels: batch.labels,
    alpha: Number($("l-alpha").value),
    beta: Number($("l-beta").value),
    lambda_thr: Number($("l-thr").value),
    epsilon: Number($("l-eps").value),
  };
}

function drawLoss(res) {
  const c = $("l-plot"), g = c.getContext("2d");
  const cx = c.width / 2, cy = c.height / 2, r = 160;
  g.clearRect(0, 0, c.width, c.height);
  g.strokeStyle = "#ccc";
  g.beginPath(); g.arc(cx, cy, r, 0, 2 * Math.PI); g.stroke();
  const pos = (a) => [cx + r * Math.cos(a), cy - r * Math.sin(a)];
  g.lineWidth = 1;
  res.negatives.forEach((ks, i) => ks.forEach((k) => {
    g.strokeStyle = "rgba(200,0,0,0.35)";
    g.beginPath(); g.moveTo(...pos(batch.angles[i])); g.lineTo(...pos(batch.angles[k])); g.stroke();
  }));
  res.positives.forEach((ks, i) => ks.forEach((k) => {
    g.strokeStyle = "rgba(0,120,0,0.35)";
    g.beginPath(); g.moveTo(...pos(batch.angles[i])); g.lineTo(...pos(batch.angles[k])); g.stroke();
  }));
  batch.angles.forEach((a, i) => {
    const [x, y] = pos(a);
    const d = -res.angle_gradient[i];
    g.strokeStyle = "#222";
    g.beginPath();
    g.moveTo(x, y);
    g.lineTo(x - 40 * d * Math.sin(a), y - 40 * d * Math.cos(a));
    g.stroke();
    g.fillStyle = COLOURS[batch.labels[i]];
    g.beginPath(); g.arc(x, y, 7, 0, 2 * Math.PI); g.fill();
  });
}

function runLoss() {
  showValues();
  const out = $("l-out");
  const res = call(msLoss, lossRequest(), out);
  if (!res) return;
  lastLoss = res;
  const pairs = (m) => m.reduce((n, ks) => n + ks.length, 0);
  out.textContent = `loss ${res.loss.toFixed(6)}   mined positives ${pairs(res.positives)} (green)   negatives ${pairs(res.negatives)} (red)`;
  drawLoss(res);
}

function step() {
  if (!lastLoss) return;
  batch.angles = batch.angles.map((a, i) => a - 0.1 * lastLoss.angle_gradient[i]);
  runLoss();
}

function dragging() {
  const c = $("l-plot");
  let held = null;
  const angleAt = (e) => {
    const b = c.getBoundingClientRect();
    return Math.atan2(c.height / 2 - (e.clientY - b.top), e.clientX - b.left - c.width / 2);
  };
  c.addEventListener("mousedown", (e) => {
    const a = angleAt(e);
    let best = Infinity;
    batch.angles.forEach((b, i) => {
      const d = Math.abs(Math.atan2(Math.sin(a - b), Math.cos(a - b)));
      if (d < best && d < 0.15) { best = d; held = i; }
    });
  });
  c.addEventListener("mousemove", (e) => {
    if (held === null) return;
    batch.angles[held] = angleAt(e);
    runLoss();
  });
  window.addEventListener("mouseup", () => { held = null; });
}

await init();
$("ix-run").addEventListener("click", runIndex);
for (const id of ["g-eta", "g-sigma", "g-lambda", "g-preset", "g-hints", "g-seed"]) {
  $(id).addEventListener("change", runGround);
}
for (const id of ["l-alpha", "l-beta", "l-thr", "l-eps"]) $(id).addEventListener("input", runLoss);
$("l-step").addEventListener("click", step);
$("l-shuffle").addEventListener("click", shuffle);
dragging();
shuffle();
runIndex();
