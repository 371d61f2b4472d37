import init, { curves, phase_map, bars } from "./pkg/spopo_web.js";

const $ = (id) => document.getElementById(id);
const SPAN = 5.0;
const POINTS = 201;
const MAP_POINTS = 161;
const MAP_PHASES = 64;

function inputs() {
  return {
    lambda: +$("lambda").value,
    d: +$("d").value,
    pump: $("pump").value,
    method: $("method").value,
    mode: Math.max(0, Math.min(11, Math.round(+$("mode").value))),
    phi: +$("phi").value * Math.PI,
  };
}

function axes(ctx, w, h, pad, yLo, yHi, label) {
  ctx.clearRect(0, 0, w, h);
  ctx.strokeStyle = "#999";
  ctx.fillStyle = "#444";
  ctx.font = "11px system-ui";
  ctx.strokeRect(pad, 10, w - 2 * pad, h - 40);
  for (let k = 0; k <= 4; k++) {
    const v = yLo + ((yHi - yLo) * k) / 4;
    const y = 10 + (h - 40) * (1 - k / 4);
    ctx.fillText(v.toFixed(1), 4, y + 4);
  }
  for (let k = 0; k <= 10; k++) {
    const x = pad + ((w - 2 * pad) * k) / 10;
    ctx.fillText((-SPAN + k).toFixed(0), x - 6, h - 16);
  }
  ctx.fillText(label, w / 2 - 20, h - 2);
}

function line(ctx, xs, ys, box, color) {
  const { x0, x1, y0, y1, lo, hi } = box;
  ctx.strokeStyle = color;
  ctx.lineWidth = 1.6;
  ctx.beginPath();
  let moved = false;
  xs.forEach((x, i) => {
    if (!Number.isFinite(ys[i])) { moved = false; return; }
    const px = x0 + ((x + SPAN) / (2 * SPAN)) * (x1 - x0);
    const py = y1 - ((ys[i] - lo) / (hi - lo)) * (y1 - y0);
    if (moved) ctx.lineTo(px, py); else { ctx.moveTo(px, py); moved = true; }
  });
  ctx.stroke();
}

function drawSpectrum(p) {
  const c = curves(p.lambda, p.d, p.pump, p.mode, p.phi, p.method, SPAN, POINTS);
  const omega = c.omega, fixed = c.fixed_db, best = c.optimal_db, phis = c.optimal_phi;
  const cv = $("spectrum"), ctx = cv.getContext("2d");
  const all = [...fixed, ...best].filter(Number.isFinite);
  const lo = Math.floor(Math.min(-1, ...all)), hi = Math.ceil(Math.max(1, ...all));
  const pad = 40;
  axes(ctx, cv.width, cv.height, pad, lo, hi, "Ω/γ");
  const box = { x0: pad, x1: cv.width - pad, y0: 10, y1: cv.height - 30, lo, hi };
  line(ctx, omega, Array(omega.length).fill(0), box, "#ccc");
  line(ctx, omega, Array.from(phis, (v) => lo + ((hi - lo) * v) / Math.PI), box, "#aaa");
  line(ctx, omega, fixed, box, "#1f77b4");
  line(ctx, omega, best, box, "#ff7f0e");
  ctx.fillStyle = "#888";
  ctx.fillText("φ*/π: 0", cv.width - pad + 2, cv.height - 30);
  ctx.fillText("1", cv.width - pad + 2, 16);
}

function colour(db, scale) {
  const t = Math.max(-1, Math.min(1, db / scale));
  const a = Math.round(255 * (1 - Math.abs(t)));
  return t < 0 ? [a, a, 255] : [255, a, a];
}

function drawMap(p) {
  const m = phase_map(p.lambda, p.d, p.pump, p.mode, SPAN, MAP_POINTS, MAP_PHASES);
  const cv = $("map"), ctx = cv.getContext("2d");
  const finite = Array.from(m).filter(Number.isFinite);
  const scale = Math.max(1, ...finite.map(Math.abs));
  const img = ctx.createImageData(cv.width, cv.height);
  for (let y = 0; y < cv.height; y++) {
    const k = Math.min(MAP_PHASES - 1, Math.floor((y / cv.height) * MAP_PHASES));
    for (let x = 0; x < cv.width; x++) {
      const i = Math.min(MAP_POINTS - 1, Math.floor((x / cv.width) * MAP_POINTS));
      const [r, g, b] = colour(m[k * MAP_POINTS + i], scale);
      const o = 4 * (y * cv.width + x);
      img.data.set([r, g, b, 255], o);
    }
  }
  ctx.putImageData(img, 0, 0);
  ctx.fillStyle = "#000";
  ctx.font = "11px system-ui";
  ctx.fillText(`±${scale.toFixed(1)} dB`, 6, 14);
}

function drawBars(p) {
  const b = bars(p.lambda, p.d, p.pump, p.method);
  const cv = $("bars"), ctx = cv.getContext("2d");
  const w = cv.width, h = cv.height, base = 30;
  ctx.clearRect(0, 0, w, h);
  const depth = Math.max(1, ...Array.from(b).filter((_, i) => i % 3 < 2).map((v) => -v));
  const sy = (h - 60) / depth;
  ctx.font = "12px system-ui";
  for (let n = 0; n < 5; n++) {
    const [without, withD] = [b[3 * n], b[3 * n + 1]];
    const x = 60 + n * ((w - 80) / 5);
    ctx.fillStyle = "#9ecae1";
    ctx.fillRect(x, base, 50, -without * sy);
    ctx.fillStyle = "#08519c";
    ctx.fillRect(x + 56, base, 50, -withD * sy);
    ctx.fillStyle = "#222";
    ctx.fillText(`mode ${n}`, x + 20, 18);
    ctx.fillText(`Δ = ${(withD - without).toFixed(2)} dB`, x + 10, base - without * sy + 16);
  }
  ctx.strokeStyle = "#999";
  ctx.beginPath();
  ctx.moveTo(40, base);
  ctx.lineTo(w - 10, base);
  ctx.stroke();
}

function render() {
  for (const o of document.querySelectorAll("output")) {
    o.value = $(o.htmlFor.value).value;
  }
  const p = inputs();
  try {
    drawSpectrum(p);
    drawMap(p);
    drawBars(p);
    $("error").textContent = "";
  } catch (e) {
    $("error").textContent = e.message ?? String(e);
  }
}

await init();
for (const el of document.querySelectorAll("input, select")) {
  el.addEventListener("input", render);
}
render();
