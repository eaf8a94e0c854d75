import init, { scenario_names, run_scenario, filter_response, filter_bound, curve_samples } from "./pkg/finform_web.js";

const COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];
const $ = (id) => document.getElementById(id);
const num = (id) => parseFloat($(id).value);

function extent(arrays) {
  let lo = Infinity, hi = -Infinity;
  for (const a of arrays) for (const v of a) if (Number.isFinite(v)) { lo = Math.min(lo, v); hi = Math.max(hi, v); }
  if (!(hi > lo)) { lo -= 0.5; hi += 0.5; }
  return [lo, hi];
}

// Line plot of several (xs, ys) series with an optional horizontal band.
function plot(canvas, series, band) {
  const ctx = canvas.getContext("2d");
  const W = canvas.width, H = canvas.height, m = { l: 55, r: 10, t: 10, b: 25 };
  ctx.clearRect(0, 0, W, H);
  const [x0, x1] = extent(series.map((s) => s.x));
  let [y0, y1] = extent(series.map((s) => s.y).concat(band ? [[band.lo, band.hi]] : []));
  const pad = 0.05 * (y1 - y0); y0 -= pad; y1 += pad;
  const sx = (x) => m.l + (x - x0) / (x1 - x0) * (W - m.l - m.r);
  const sy = (y) => m.t + (y1 - y) / (y1 - y0) * (H - m.t - m.b);
  if (band) {
    ctx.fillStyle = "rgba(44,160,44,0.15)";
    ctx.fillRect(m.l, sy(band.hi), W - m.l - m.r, Math.max(1, sy(band.lo) - sy(band.hi)));
  }
  ctx.strokeStyle = "#000"; ctx.strokeRect(m.l, m.t, W - m.l - m.r, H - m.t - m.b);
  ctx.fillStyle = "#000"; ctx.font = "11px sans-serif";
  ctx.fillText(y1.toPrecision(3), 2, m.t + 10); ctx.fillText(y0.toPrecision(3), 2, H - m.b);
  ctx.fillText(x0.toPrecision(3), m.l, H - 8); ctx.fillText(x1.toPrecision(3), W - m.r - 40, H - 8);
  series.forEach((s, i) => {
    ctx.strokeStyle = COLORS[i % COLORS.length]; ctx.beginPath();
    s.x.forEach((x, j) => (j ? ctx.lineTo(sx(x), sy(s.y[j])) : ctx.moveTo(sx(x), sy(s.y[j]))));
    ctx.stroke();
    ctx.fillStyle = ctx.strokeStyle; ctx.fillText(s.label, W - m.r - 120, m.t + 14 + 13 * i);
  });
}

function report(id, text, isError) {
  $(id).textContent = text;
  $(id).className = isError ? "out err" : "out";
}

function doRun() {
  try {
    const r = run_scenario($("run-scenario").value, num("run-k"), num("run-gamma"), num("run-tend"));
    const t = Array.from(r.t()), d = r.param_dim(), th = r.theta_hat();
    plot($("run-psi"), [{ label: "|psi|", x: t, y: Array.from(r.psi(), Math.abs) }], { lo: 0, hi: r.goal_radius() });
    const comps = [...Array(d).keys()].map((i) => ({ label: `theta_hat${i}`, x: t, y: t.map((_, j) => th[j * d + i]) }));
    plot($("run-theta"), comps);
    report("run-out", r.summary());
    r.free();
  } catch (e) { report("run-out", String(e.message ?? e), true); }
}

function doFilter() {
  try {
    const [a1, a2, w] = [num("f-a1"), num("f-a2"), num("f-w")];
    const rows = filter_response(a1, a2, w, 40);
    const t = [], dp = [], y = [];
    for (let i = 0; i < rows.length; i += 3) { t.push(rows[i]); dp.push(rows[i + 1]); y.push(rows[i + 2]); }
    plot($("f-plot"), [{ label: "psi'", x: t, y: dp }, { label: "filter output", x: t, y }]);
    let sup = 0;
    t.forEach((ti, i) => { if (ti >= 20) sup = Math.max(sup, Math.abs(dp[i] - y[i])); });
    report("f-out", `sup error on [20, 40] = ${sup.toFixed(4)}, bound |a2 w^2 / a1| = ${filter_bound(a1, a2, w).toFixed(4)}`);
  } catch (e) { report("f-out", String(e.message ?? e), true); }
}

function doCurve() {
  try {
    const rows = curve_samples($("c-scenario").value, num("c-send"), 4000);
    const a = [], b = [];
    for (let i = 0; i < rows.length; i += 4) { a.push(rows[i + 2]); b.push(rows[i + 3]); }
    plot($("c-plot"), [{ label: "eta(lambda(theta0))", x: a, y: b }]);
    report("c-out", `${a.length} samples; horizontal axis theta_hat0, vertical axis theta_hat1`);
  } catch (e) { report("c-out", String(e.message ?? e), true); }
}

await init();
for (const n of scenario_names().split(",")) $("run-scenario").add(new Option(n, n));
$("run-go").onclick = doRun;
$("f-go").onclick = doFilter;
$("c-go").onclick = doCurve;
doRun(); doFilter(); doCurve();
