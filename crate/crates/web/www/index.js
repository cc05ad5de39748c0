import init, { RodDemo } from "./pkg/pbmor_web.js";

const $ = (id) => document.getElementById(id);
const status = (msg) => { $("status").textContent = msg; };
let demo = null;

function frame(ctx, canvas) {
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.strokeStyle = "#ccc";
  ctx.strokeRect(40, 10, canvas.width - 50, canvas.height - 40);
}

// Draws series of [x, y] pairs; log axes map through log10 first.
function plot(canvas, series, { logX = false, logY = false } = {}) {
  const ctx = canvas.getContext("2d");
  frame(ctx, canvas);
  const fx = logX ? Math.log10 : (v) => v;
  const fy = logY ? (v) => Math.log10(Math.max(v, 1e-300)) : (v) => v;
  let [x0, x1, y0, y1] = [Infinity, -Infinity, Infinity, -Infinity];
  for (const s of series) {
    for (const [x, y] of s.points) {
      x0 = Math.min(x0, fx(x)); x1 = Math.max(x1, fx(x));
      y0 = Math.min(y0, fy(y)); y1 = Math.max(y1, fy(y));
    }
  }
  if (y1 === y0) { y1 += 1; y0 -= 1; }
  const w = canvas.width - 50, h = canvas.height - 40;
  const px = (x) => 40 + ((fx(x) - x0) / (x1 - x0)) * w;
  const py = (y) => 10 + h - ((fy(y) - y0) / (y1 - y0)) * h;
  for (const s of series) {
    ctx.strokeStyle = s.color;
    ctx.setLineDash(s.dash || []);
    ctx.beginPath();
    s.points.forEach(([x, y], i) => (i ? ctx.lineTo(px(x), py(y)) : ctx.moveTo(px(x), py(y))));
    ctx.stroke();
  }
  ctx.setLineDash([]);
  ctx.fillStyle = "#555";
  const lab = (v, log) => (log ? "1e" + v.toFixed(0) : v.toPrecision(3));
  ctx.fillText(lab(y1, logY), 2, 18);
  ctx.fillText(lab(y0, logY), 2, 10 + h);
  ctx.fillText(lab(x0, logX), 40, canvas.height - 12);
  ctx.fillText(lab(x1, logX), canvas.width - 40, canvas.height - 12);
}

function triples(flat, stride) {
  const out = [];
  for (let i = 0; i < flat.length; i += stride) out.push(Array.from(flat.slice(i, i + stride)));
  return out;
}

function drawFrequency() {
  const mu = parseFloat($("mu-f").value);
  $("mu-f-val").textContent = mu.toFixed(1);
  const rows = triples(demo.frequency_response(mu, 120), 4);
  plot($("freq"), [
    { color: "#1f5fa8", points: rows.map((r) => [r[0], r[1]]) },
    { color: "#d2552d", dash: [5, 4], points: rows.map((r) => [r[0], r[2]]) },
    { color: "#3a8a3a", points: rows.map((r) => [r[0], r[3]]) },
  ], { logX: true, logY: true });
}

function drawTime() {
  try {
    const rows = triples(demo.time_response(parseFloat($("mu-t").value), $("input").value, parseFloat($("t-end").value), 0.01), 3);
    plot($("time"), [
      { color: "#1f5fa8", points: rows.map((r) => [r[0], r[1]]) },
      { color: "#d2552d", dash: [5, 4], points: rows.map((r) => [r[0], r[2]]) },
    ]);
    status("");
  } catch (e) {
    status(String(e));
  }
}

function rebuild() {
  try {
    const n = parseInt($("n").value, 10);
    const mus = $("mus").value.split(",").map((s) => parseFloat(s)).filter((v) => !Number.isNaN(v));
    if (!demo || demo.full_order() !== n) demo = new RodDemo(n);
    $("info").textContent = JSON.stringify(JSON.parse(demo.reduce(new Float64Array(mus), parseInt($("depth").value, 10))), null, 2);
    drawFrequency();
    drawTime();
  } catch (e) {
    status(String(e));
  }
}

await init();
status("");
rebuild();
$("reduce").addEventListener("click", rebuild);
$("mu-f").addEventListener("input", drawFrequency);
$("simulate").addEventListener("click", drawTime);
