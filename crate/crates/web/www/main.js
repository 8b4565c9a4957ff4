import init, { constants_curve, glue_demo, verdict_demo } from "./pkg/modent_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

// Draws polylines [{xs, ys, color, dots}] on a canvas with simple axes.
function plot(canvas, series, { logY = false } = {}) {
  const ctx = canvas.getContext("2d");
  const w = canvas.width, h = canvas.height, pad = 40;
  ctx.clearRect(0, 0, w, h);
  const ty = (y) => (logY ? Math.log10(Math.max(y, 1e-300)) : y);
  const xs = series.flatMap((s) => s.xs);
  const ys = series.flatMap((s) => s.ys.map(ty));
  if (xs.length === 0) return;
  let [x0, x1] = [Math.min(...xs), Math.max(...xs)];
  let [y0, y1] = [Math.min(...ys), Math.max(...ys)];
  if (x1 === x0) x1 = x0 + 1;
  if (y1 === y0) { y0 -= 1; y1 += 1; }
  const px = (x) => pad + ((x - x0) / (x1 - x0)) * (w - 2 * pad);
  const py = (y) => h - pad - ((ty(y) - y0) / (y1 - y0)) * (h - 2 * pad);
  ctx.strokeStyle = "#888";
  ctx.strokeRect(pad, pad, w - 2 * pad, h - 2 * pad);
  ctx.fillStyle = "#444";
  ctx.font = "12px system-ui";
  ctx.fillText(x0.toPrecision(3), pad, h - pad + 15);
  ctx.fillText(x1.toPrecision(3), w - pad - 30, h - pad + 15);
  const yl = (v) => (logY ? "1e" + v.toFixed(1) : v.toPrecision(3));
  ctx.fillText(yl(y1), 2, pad + 4);
  ctx.fillText(yl(y0), 2, h - pad);
  for (const s of series) {
    ctx.strokeStyle = ctx.fillStyle = s.color;
    ctx.beginPath();
    s.xs.forEach((x, i) => (i ? ctx.lineTo(px(x), py(s.ys[i])) : ctx.moveTo(px(x), py(s.ys[i]))));
    if (!s.dots) ctx.stroke();
    if (s.dots) s.xs.forEach((x, i) => ctx.fillRect(px(x) - 2, py(s.ys[i]) - 2, 4, 4));
  }
}

function show(out, result, lines) {
  if (result.error) {
    out.innerHTML = `<span class="fail">error:</span> ${result.error}`;
    return false;
  }
  out.innerHTML = lines.join("\n");
  return true;
}

const verdictTag = (ok) => (ok ? '<span class="pass">PASS</span>' : '<span class="fail">FAIL</span>');

function runConstants() {
  const r = JSON.parse(constants_curve(num("c-alpha"), num("c-n")));
  if (!show($("c-out"), r, [
    `K(${r.alpha}) = ${r.k}`,
    `c_1 = ${r.c?.[0]}, d_1 = ${r.d?.[0]}; c_${r.n?.at(-1)} = ${r.c?.at(-1).toExponential(4)} (log scale below)`,
  ])) return;
  plot($("c-canvas"), [
    { xs: r.n, ys: r.c, color: "#1f5fbf" },
    { xs: r.n, ys: r.d, color: "#bf5f1f" },
  ], { logY: true });
}

function runGlue() {
  const r = JSON.parse(glue_demo(num("g-seed"), num("g-amp"), num("g-u"), num("g-v"), num("g-w")));
  if (!show($("g-out"), r, [
    `measured eps = ${r.eps?.toExponential(4)}`,
    `sup |A - phi(sum)| = ${r.dev_a?.toExponential(4)}  (target <= 2 eps)`,
    `sup |B - phi(sum)| = ${r.dev_b?.toExponential(4)}  (target <= eps) at (t, s) = (${r.worst_b})`,
    `${r.windows?.length} cover windows: ${r.windows?.map((w) => `[${w[0]}, ${w[1]}]`).join(" ")}`,
    `bounds ${verdictTag(r.within_bounds)}`,
  ])) return;
  plot($("g-canvas"), [
    { xs: r.knots, ys: r.exact, color: "#999" },
    { xs: r.knots, ys: r.phi, color: "#1f5fbf", dots: true },
  ]);
}

function runVerdict() {
  const r = JSON.parse(verdict_demo(num("v-alpha"), num("v-amp"), num("v-seed"), $("v-sym").checked, num("v-grid")));
  if (!show($("v-out"), r, [
    `box [${r.box_lo}, ${r.box_hi}]^3, eps1 = ${r.eps1?.toExponential(4)}, eps2 = ${r.eps2?.toExponential(4)}`,
    `fitted a = ${r.best_a}, sup distance = ${r.sup_error?.toExponential(4)}`,
    `bound ${r.bound_label} = ${r.bound_value?.toExponential(4)}: ${verdictTag(r.pass)}`,
  ])) return;
  plot($("v-canvas"), [{ xs: r.knots, ys: r.phi, color: "#1f5fbf", dots: true }]);
}

await init();
$("c-run").onclick = runConstants;
$("g-run").onclick = runGlue;
$("v-run").onclick = runVerdict;
runConstants();
runGlue();
runVerdict();
